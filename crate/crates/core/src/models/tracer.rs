use std::sync::Arc;

use super::{FaceContext, Physics, ProblemDefinition, VolumeContext};
use crate::error::Result;
use crate::geometry::Vec3;
use crate::material::{isotropic_permeability, Fluid, SpatialParams};

type VelocityFn = dyn Fn(Vec3) -> Vec3 + Send + Sync;

/// Passive tracer (mole fraction) advected by a prescribed Darcy velocity
/// with Fickian diffusion, `D_eff = phi D`.
#[derive(Clone)]
pub struct Tracer {
    params: Arc<SpatialParams>,
    fluid: Fluid,
    velocity: Arc<VelocityFn>,
    problem: ProblemDefinition,
}

impl Tracer {
    pub fn new(
        params: Arc<SpatialParams>,
        fluid: Fluid,
        velocity: impl Fn(Vec3) -> Vec3 + Send + Sync + 'static,
        problem: ProblemDefinition,
    ) -> Self {
        Tracer {
            params,
            fluid,
            velocity: Arc::new(velocity),
            problem,
        }
    }

    /// Volumetric flow through a face from the prescribed velocity.
    pub fn volume_flux(&self, ctx: &FaceContext) -> f64 {
        (self.velocity)(ctx.scvf.center).dot(ctx.scvf.normal) * ctx.scvf.area
    }
}

impl Physics for Tracer {
    fn num_eq(&self) -> usize {
        1
    }

    fn var_names(&self) -> Vec<&'static str> {
        vec!["x"]
    }

    fn problem(&self) -> &ProblemDefinition {
        &self.problem
    }

    fn storage(&self, ctx: &VolumeContext, out: &mut [f64]) {
        let phi = self.params.material(ctx.element()).porosity;
        out[0] = phi * self.fluid.molar_density(0.0) * ctx.vars[0];
    }

    fn flux(&self, ctx: &FaceContext, out: &mut [f64]) -> Result<()> {
        let rho_m = self.fluid.molar_density(0.0);
        let v = self.volume_flux(ctx);
        let st = ctx.stencil(|s| {
            isotropic_permeability(
                self.params.material(s.element).porosity * self.fluid.diffusion(),
            )
        })?;
        let x_up = st.upstream(v, |n| ctx.node_vars(n)[0]);
        out[0] = rho_m * (x_up * v + st.apply(|n| ctx.node_vars(n)[0]));
        Ok(())
    }
}

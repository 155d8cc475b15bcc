use std::sync::Arc;

use super::{FaceContext, Node, Physics, ProblemDefinition, VolumeContext};
use crate::error::Result;
use crate::geometry::Vec3;
use crate::material::{Fluid, SpatialParams};

/// Single-phase Darcy flow; the unknown is the pressure and the balance is
/// in mass. With `density = viscosity = 1` and no gravity it reduces to
/// `-div(K grad p) = q`.
#[derive(Clone, Debug)]
pub struct OneP {
    params: Arc<SpatialParams>,
    fluid: Fluid,
    problem: ProblemDefinition,
    gravity: Option<Vec3>,
    compressibility: f64,
    p_ref: f64,
}

impl OneP {
    pub fn new(params: Arc<SpatialParams>, fluid: Fluid, problem: ProblemDefinition) -> Self {
        OneP {
            params,
            fluid,
            problem,
            gravity: None,
            compressibility: 0.0,
            p_ref: 0.0,
        }
    }

    pub fn with_gravity(mut self, g: Vec3) -> Self {
        self.gravity = Some(g);
        self
    }

    /// Linear density law `rho(p) = rho_0 (1 + c (p - p_ref))`.
    pub fn with_compressibility(mut self, c: f64, p_ref: f64) -> Self {
        self.compressibility = c;
        self.p_ref = p_ref;
        self
    }

    pub fn density(&self, p: f64) -> f64 {
        self.fluid.density(p) * (1.0 + self.compressibility * (p - self.p_ref))
    }

    fn aperture(&self, element: usize) -> f64 {
        self.params.material(element).aperture.unwrap_or(1.0)
    }
}

impl Physics for OneP {
    fn num_eq(&self) -> usize {
        1
    }

    fn var_names(&self) -> Vec<&'static str> {
        vec!["p"]
    }

    fn problem(&self) -> &ProblemDefinition {
        &self.problem
    }

    fn storage(&self, ctx: &VolumeContext, out: &mut [f64]) {
        let e = ctx.element();
        out[0] = self.aperture(e) * self.params.material(e).porosity * self.density(ctx.vars[0]);
    }

    fn flux(&self, ctx: &FaceContext, out: &mut [f64]) -> Result<()> {
        let st = ctx.stencil(|s| {
            self.params
                .material(s.element)
                .permeability
                .scaled(self.aperture(s.element))
        })?;
        let rho = ctx.face_average(|n| self.density(ctx.node_vars(n)[0]));
        let g = self.gravity.unwrap_or(Vec3::ZERO);
        let psi = |n: Node| ctx.node_vars(n)[0] - rho * g.dot(ctx.node_position(n));
        let v = st.apply(psi);
        let rho_up = st.upstream(v, |n| self.density(ctx.node_vars(n)[0]));
        out[0] = rho_up * v / self.fluid.viscosity();
        Ok(())
    }
}

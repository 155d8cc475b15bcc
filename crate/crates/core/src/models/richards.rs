use std::sync::Arc;

use super::{FaceContext, Node, Physics, ProblemDefinition, VolumeContext};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::material::{isotropic_permeability, Fluid, SpatialParams, VanGenuchten};

/// Richards equation for water in a molar balance, with a dissolved tracer.
/// Primary variables are the (absolute) water pressure and the tracer mole
/// fraction; the gas phase stays at `p_atm`, so `p_c = p_atm - p_w`.
/// Tracer diffusion uses `D_eff = phi S_w D`.
#[derive(Clone, Debug)]
pub struct Richards {
    params: Arc<SpatialParams>,
    water: Fluid,
    problem: ProblemDefinition,
    gravity: Option<Vec3>,
    p_atm: f64,
}

impl Richards {
    pub fn new(
        params: Arc<SpatialParams>,
        water: Fluid,
        problem: ProblemDefinition,
    ) -> Result<Self> {
        if let Some(i) = params.materials().iter().position(|m| m.vg.is_none()) {
            return Err(Error::InvalidArgument(format!(
                "material {i} has no van Genuchten parameters"
            )));
        }
        Ok(Richards {
            params,
            water,
            problem,
            gravity: None,
            p_atm: 1e5,
        })
    }

    pub fn with_gravity(mut self, g: Vec3) -> Self {
        self.gravity = Some(g);
        self
    }

    pub fn gravity(&self) -> Vec3 {
        self.gravity.unwrap_or(Vec3::ZERO)
    }

    pub fn with_atmospheric_pressure(mut self, p_atm: f64) -> Self {
        self.p_atm = p_atm;
        self
    }

    pub fn atmospheric_pressure(&self) -> f64 {
        self.p_atm
    }

    pub fn water(&self) -> &Fluid {
        &self.water
    }

    pub fn params(&self) -> &SpatialParams {
        &self.params
    }

    fn vg(&self, element: usize) -> &VanGenuchten {
        self.params
            .material(element)
            .vg
            .as_ref()
            .expect("checked at construction")
    }

    pub fn saturation(&self, element: usize, pw: f64) -> f64 {
        self.vg(element).sw_from_pc(self.p_atm - pw)
    }

    pub fn krw(&self, element: usize, pw: f64) -> f64 {
        let vg = self.vg(element);
        vg.krw(vg.sw_from_pc(self.p_atm - pw))
    }

    /// Pressure at which the saturation equals `sw`.
    pub fn pressure_from_saturation(&self, element: usize, sw: f64) -> f64 {
        self.p_atm - self.vg(element).pc(sw)
    }
}

impl Physics for Richards {
    fn num_eq(&self) -> usize {
        2
    }

    fn var_names(&self) -> Vec<&'static str> {
        vec!["p_w", "x_tracer"]
    }

    fn problem(&self) -> &ProblemDefinition {
        &self.problem
    }

    fn storage(&self, ctx: &VolumeContext, out: &mut [f64]) {
        let e = ctx.element();
        let w = self.params.material(e).porosity
            * self.saturation(e, ctx.vars[0])
            * self.water.molar_density(ctx.vars[0]);
        out[0] = w;
        out[1] = w * ctx.vars[1];
    }

    fn flux(&self, ctx: &FaceContext, out: &mut [f64]) -> Result<()> {
        let st = ctx.stencil(|s| self.params.material(s.element).permeability)?;
        let g = self.gravity.unwrap_or(Vec3::ZERO);
        let rho = self.water.density(0.0);
        let rho_m = self.water.molar_density(0.0);
        let v = st.apply(|n| ctx.node_vars(n)[0] - rho * g.dot(ctx.node_position(n)));
        let mob = st.upstream(v, |n: Node| {
            self.krw(ctx.node_element(n), ctx.node_vars(n)[0]) / self.water.viscosity()
        });
        let q = mob * v;
        out[0] = rho_m * q;

        let diff = ctx.stencil(|s| {
            let phi = self.params.material(s.element).porosity;
            isotropic_permeability(
                phi * self.saturation(s.element, s.vars[0]) * self.water.diffusion(),
            )
        })?;
        let x_up = st.upstream(q, |n| ctx.node_vars(n)[1]);
        out[1] = rho_m * (x_up * q + diff.apply(|n| ctx.node_vars(n)[1]));
        Ok(())
    }
}

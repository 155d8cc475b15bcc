use super::{FaceContext, Physics, ProblemDefinition, VolumeContext};
use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};
use crate::material::Fluid;

/// Water flow in a root xylem network (bundle of tubes) with a tracer.
/// Primary variables are the root water pressure and tracer mole fraction;
/// balances are molar per unit root length, `F = rho_m K_ax dpsi / d`.
#[derive(Clone, Debug)]
pub struct Xylem {
    radius: Vec<f64>,
    porosity: f64,
    k_ax: f64,
    k_rad: f64,
    water: Fluid,
    problem: ProblemDefinition,
    gravity: Option<Vec3>,
}

impl Xylem {
    pub fn new(
        radius: Vec<f64>,
        porosity: f64,
        k_ax: f64,
        k_rad: f64,
        water: Fluid,
        problem: ProblemDefinition,
    ) -> Result<Self> {
        if radius.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::InvalidArgument("root radii must be positive".into()));
        }
        if !(porosity > 0.0 && porosity <= 1.0) || !(k_ax > 0.0) || !(k_rad >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "root parameters porosity={porosity}, K_ax={k_ax}, K_rad={k_rad}"
            )));
        }
        Ok(Xylem {
            radius,
            porosity,
            k_ax,
            k_rad,
            water,
            problem,
            gravity: None,
        })
    }

    pub fn with_gravity(mut self, g: Vec3) -> Self {
        self.gravity = Some(g);
        self
    }

    pub fn gravity(&self) -> Vec3 {
        self.gravity.unwrap_or(Vec3::ZERO)
    }

    pub fn radius(&self, segment: usize) -> f64 {
        self.radius[segment]
    }

    pub fn cross_section(&self, segment: usize) -> f64 {
        std::f64::consts::PI * self.radius[segment].powi(2)
    }

    pub fn k_ax(&self) -> f64 {
        self.k_ax
    }

    pub fn k_rad(&self) -> f64 {
        self.k_rad
    }

    pub fn water(&self) -> &Fluid {
        &self.water
    }
}

impl Physics for Xylem {
    fn num_eq(&self) -> usize {
        2
    }

    fn var_names(&self) -> Vec<&'static str> {
        vec!["p_r", "x_tracer"]
    }

    fn problem(&self) -> &ProblemDefinition {
        &self.problem
    }

    fn storage(&self, ctx: &VolumeContext, out: &mut [f64]) {
        let w = self.porosity * self.water.molar_density(0.0) * self.cross_section(ctx.element());
        out[0] = w;
        out[1] = w * ctx.vars[1];
    }

    fn flux(&self, ctx: &FaceContext, out: &mut [f64]) -> Result<()> {
        let st = ctx.stencil(|_| Mat3::scalar(self.k_ax))?;
        let g = self.gravity.unwrap_or(Vec3::ZERO);
        let rho = self.water.density(0.0);
        let rho_m = self.water.molar_density(0.0);
        let q = st.apply(|n| ctx.node_vars(n)[0] - rho * g.dot(ctx.node_position(n)));
        out[0] = rho_m * q;
        let diff = ctx.stencil(|s| {
            Mat3::scalar(self.porosity * self.cross_section(s.element) * self.water.diffusion())
        })?;
        let x_up = st.upstream(q, |n| ctx.node_vars(n)[1]);
        out[1] = rho_m * (x_up * q + diff.apply(|n| ctx.node_vars(n)[1]));
        Ok(())
    }
}

use std::sync::Arc;

use super::{FaceContext, Node, Physics, ProblemDefinition, VolumeContext};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::material::{Fluid, SpatialParams, VanGenuchten};

/// Immiscible two-phase flow of water and a gas. Primary variables are the
/// water pressure and the gas saturation; `p_n = p_w + p_c(1 - S_n)`.
/// Lower-dimensional domains scale storage and flux by their aperture.
#[derive(Clone, Debug)]
pub struct TwoP {
    params: Arc<SpatialParams>,
    water: Fluid,
    gas: Fluid,
    problem: ProblemDefinition,
    gravity: Option<Vec3>,
}

/// Secondary variables of one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPState {
    pub sw: f64,
    pub sn: f64,
    pub pw: f64,
    pub pn: f64,
    pub rho_w: f64,
    pub rho_n: f64,
    pub mob_w: f64,
    pub mob_n: f64,
}

impl TwoP {
    pub fn new(
        params: Arc<SpatialParams>,
        water: Fluid,
        gas: Fluid,
        problem: ProblemDefinition,
    ) -> Result<Self> {
        if let Some(i) = params.materials().iter().position(|m| m.vg.is_none()) {
            return Err(Error::InvalidArgument(format!(
                "material {i} has no van Genuchten parameters"
            )));
        }
        Ok(TwoP {
            params,
            water,
            gas,
            problem,
            gravity: None,
        })
    }

    pub fn with_gravity(mut self, g: Vec3) -> Self {
        self.gravity = Some(g);
        self
    }

    pub fn params(&self) -> &SpatialParams {
        &self.params
    }

    pub fn gravity(&self) -> Vec3 {
        self.gravity.unwrap_or(Vec3::ZERO)
    }

    pub fn water(&self) -> &Fluid {
        &self.water
    }

    pub fn gas(&self) -> &Fluid {
        &self.gas
    }

    fn vg(&self, element: usize) -> &VanGenuchten {
        self.params
            .material(element)
            .vg
            .as_ref()
            .expect("checked at construction")
    }

    pub fn state(&self, element: usize, vars: &[f64]) -> TwoPState {
        let vg = self.vg(element);
        let (pw, sn) = (vars[0], vars[1]);
        let sw = 1.0 - sn;
        let pn = pw + vg.pc(sw);
        TwoPState {
            sw,
            sn,
            pw,
            pn,
            rho_w: self.water.density(pw),
            rho_n: self.gas.density(pn),
            mob_w: vg.krw(sw) / self.water.viscosity(),
            mob_n: vg.krn(sw) / self.gas.viscosity(),
        }
    }

    fn aperture(&self, element: usize) -> f64 {
        self.params.material(element).aperture.unwrap_or(1.0)
    }
}

impl Physics for TwoP {
    fn num_eq(&self) -> usize {
        2
    }

    fn var_names(&self) -> Vec<&'static str> {
        vec!["p_w", "S_n"]
    }

    fn problem(&self) -> &ProblemDefinition {
        &self.problem
    }

    fn storage(&self, ctx: &VolumeContext, out: &mut [f64]) {
        let e = ctx.element();
        let s = self.state(e, ctx.vars);
        let f = self.aperture(e) * self.params.material(e).porosity;
        out[0] = f * s.rho_w * s.sw;
        out[1] = f * s.rho_n * s.sn;
    }

    fn flux(&self, ctx: &FaceContext, out: &mut [f64]) -> Result<()> {
        let st = ctx.stencil(|s| {
            self.params
                .material(s.element)
                .permeability
                .scaled(self.aperture(s.element))
        })?;
        let state = |n: Node| self.state(ctx.node_element(n), ctx.node_vars(n));
        let g = self.gravity.unwrap_or(Vec3::ZERO);

        let rho_w = ctx.face_average(|n| state(n).rho_w);
        let vw = st.apply(|n| state(n).pw - rho_w * g.dot(ctx.node_position(n)));
        out[0] = vw
            * st.upstream(vw, |n| {
                let s = state(n);
                s.rho_w * s.mob_w
            });

        let rho_n = ctx.face_average(|n| state(n).rho_n);
        let vn = st.apply(|n| state(n).pn - rho_n * g.dot(ctx.node_position(n)));
        out[1] = vn
            * st.upstream(vn, |n| {
                let s = state(n);
                s.rho_n * s.mob_n
            });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{isotropic_permeability, Material};
    use crate::models::test_support::*;
    use crate::models::DofVars;

    fn model() -> TwoP {
        let vg = VanGenuchten::new(1e-3, 3.0, 0.0).unwrap();
        let sp = SpatialParams::uniform(
            Material::new(0.15, isotropic_permeability(1e-12)).with_vg(vg),
            2,
        )
        .unwrap();
        TwoP::new(
            Arc::new(sp),
            Fluid::water(),
            Fluid::nitrogen(),
            ProblemDefinition::new(2),
        )
        .unwrap()
        .with_gravity(Vec3::xy(0.0, -9.81))
    }

    #[test]
    fn storage_example() {
        let gg = two_cells();
        let ctx = VolumeContext {
            gg: &gg,
            scv: gg.scv(0),
            vars: &[1e5, 0.0],
        };
        let mut s = [0.0; 2];
        model().storage(&ctx, &mut s);
        assert!((s[0] - 0.15 * 1000.0).abs() < 1e-12);
        assert_eq!(s[1], 0.0);
    }

    #[test]
    fn mobility_is_taken_from_the_higher_potential_cell() {
        let gg = two_cells();
        let m = model();
        // cell 0 wetter but at higher pressure: water flows 0 -> 1
        let u = [2e5, 0.1, 1e5, 0.6];
        let ctx = FaceContext {
            gg: &gg,
            scvf: interior_face(&gg, 0),
            vars: DofVars {
                data: &u,
                num_eq: 2,
            },
            boundary_vars: None,
            t: 0.0,
        };
        let mut f = [0.0; 2];
        m.flux(&ctx, &mut f).unwrap();
        let s0 = m.state(0, &u[0..2]);
        let t = 1e-12; // harmonic of two 2e-12 halves
        let expected = t * (2e5 - 1e5) * s0.rho_w * s0.mob_w;
        assert!((f[0] - expected).abs() < 1e-12 * expected);

        let rev = [1e5, 0.1, 2e5, 0.6];
        let ctx = FaceContext {
            vars: DofVars {
                data: &rev,
                num_eq: 2,
            },
            ..ctx
        };
        m.flux(&ctx, &mut f).unwrap();
        let s1 = m.state(1, &rev[2..4]);
        let expected = -t * 1e5 * s1.rho_w * s1.mob_w;
        assert!((f[0] - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn flux_antisymmetry_random_states() {
        use rand::{Rng, SeedableRng};
        let gg = two_cells();
        let m = model();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let u = [
                rng.random_range(0.9e5..2e5),
                rng.random_range(0.0..1.0),
                rng.random_range(0.9e5..2e5),
                rng.random_range(0.0..1.0),
            ];
            let mut fa = [0.0; 2];
            let mut fb = [0.0; 2];
            for (e, out) in [(0, &mut fa), (1, &mut fb)] {
                let ctx = FaceContext {
                    gg: &gg,
                    scvf: interior_face(&gg, e),
                    vars: DofVars {
                        data: &u,
                        num_eq: 2,
                    },
                    boundary_vars: None,
                    t: 0.0,
                };
                m.flux(&ctx, out).unwrap();
            }
            for k in 0..2 {
                assert!((fa[k] + fb[k]).abs() <= 1e-12 * fa[k].abs() + 1e-20);
            }
        }
    }
}

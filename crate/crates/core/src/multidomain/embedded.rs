use std::sync::Arc;

use super::glue::{coupling_stencils_from_glue, glue, CouplingStencils, Glue};
use crate::error::{Error, Result};
use crate::fvgeom::{GridGeometry, Scheme};
use crate::geometry::Vec3;
use crate::models::{root_uptake_qw, Physics, Richards, Xylem};
use crate::solvers::{CouplingContext, CouplingManager};

/// Root piece inside one soil element.
#[derive(Clone, Debug)]
struct Piece {
    root: usize,
    soil: usize,
    length: f64,
    /// Weights of the soil element dofs giving the averaged soil pressure
    /// (and distributing the sink).
    weights: Vec<f64>,
}

/// Non-conforming coupling of a root xylem network (domain 1) embedded in
/// soil (domain 0) by line sources.
///
/// Per glue piece of length `L` the radial flux `q_w` from the soil-side
/// pressure and relative permeability enters the soil residual as `-q_w L`
/// (distributed with the interpolation weights) and the root residual as
/// `+q_w L`. The tracer does not cross the root surface.
pub struct EmbeddedCoupling {
    soil: Arc<GridGeometry>,
    richards: Arc<Richards>,
    xylem: Arc<Xylem>,
    glue: Glue,
    pieces: Vec<Piece>,
    by_soil: Vec<Vec<usize>>,
    by_root: Vec<Vec<usize>>,
    stencils: CouplingStencils,
}

impl EmbeddedCoupling {
    /// `circle_average` samples the soil pressure at eight points on the
    /// root surface around each piece midpoint instead of the midpoint.
    pub fn new(
        soil: Arc<GridGeometry>,
        richards: Arc<Richards>,
        root: Arc<GridGeometry>,
        xylem: Arc<Xylem>,
        circle_average: bool,
    ) -> Result<Self> {
        if root.scheme() != Scheme::Tpfa {
            return Err(Error::InvalidArgument(
                "the root network must use tpfa".into(),
            ));
        }
        let glue = glue(&root, &soil)?;
        for &(s, l) in &glue.uncovered {
            log::warn!("root segment {s}: {l:e} m outside the soil domain, exchange dropped there");
        }
        let stencils = coupling_stencils_from_glue(&glue, &root, &soil);
        let mut pieces = Vec::new();
        for is in &glue.intersections {
            let share = is.measure() / is.targets.len() as f64;
            let r = is.domain_element;
            let xm = is.midpoint();
            let points = if circle_average {
                let dir = (is.b - is.a).normalized();
                let across = Vec3::xy(-dir.y, dir.x);
                let radius = xylem.radius(r);
                (0..8)
                    .map(|k| {
                        let th = std::f64::consts::PI * k as f64 / 4.0;
                        xm + across * (radius * th.cos())
                    })
                    .collect()
            } else {
                vec![xm]
            };
            for &t in &is.targets {
                let weights = match soil.scheme() {
                    Scheme::Tpfa => vec![1.0],
                    Scheme::Box => {
                        let mut w = vec![0.0; soil.mesh().element(t).len()];
                        for &p in &points {
                            for (wi, ni) in w.iter_mut().zip(soil.shape_values_at(t, p)?) {
                                *wi += ni / points.len() as f64;
                            }
                        }
                        w
                    }
                };
                pieces.push(Piece {
                    root: r,
                    soil: t,
                    length: share,
                    weights,
                });
            }
        }
        let mut by_soil = vec![Vec::new(); soil.num_elements()];
        let mut by_root = vec![Vec::new(); root.num_elements()];
        for (i, p) in pieces.iter().enumerate() {
            by_soil[p.soil].push(i);
            by_root[p.root].push(i);
        }
        Ok(EmbeddedCoupling {
            soil,
            richards,
            xylem,
            glue,
            pieces,
            by_soil,
            by_root,
            stencils,
        })
    }

    pub fn glue(&self) -> &Glue {
        &self.glue
    }

    fn soil_dofs(&self, t: usize) -> Vec<usize> {
        match self.soil.scheme() {
            Scheme::Tpfa => vec![t],
            Scheme::Box => self.soil.mesh().element(t).to_vec(),
        }
    }

    /// Radial water exchange of one piece in mol/s, positive into the soil.
    fn piece_exchange(&self, ctx: &CouplingContext, p: &Piece) -> f64 {
        let dofs = self.soil_dofs(p.soil);
        let ps: f64 = dofs
            .iter()
            .zip(&p.weights)
            .map(|(&d, w)| w * ctx.vars(0, d)[0])
            .sum();
        let pr = ctx.vars(1, p.root)[0];
        let krw = self.richards.krw(p.soil, ps);
        let rho_m = self.richards.water().molar_density(ps);
        root_uptake_qw(
            ps,
            pr,
            self.xylem.radius(p.root),
            krw,
            self.xylem.k_rad(),
            rho_m,
        ) * p.length
    }

    /// Exchange per root segment (mol/s, positive into the soil).
    pub fn root_exchange(&self, ctx: &CouplingContext) -> Vec<f64> {
        self.by_root
            .iter()
            .map(|ps| {
                ps.iter()
                    .map(|&i| self.piece_exchange(ctx, &self.pieces[i]))
                    .sum()
            })
            .collect()
    }

    /// Exchange distributed to soil dofs (mol/s, positive into the soil).
    pub fn soil_exchange(&self, ctx: &CouplingContext) -> Vec<f64> {
        let mut out = vec![0.0; self.soil.num_dofs()];
        for p in &self.pieces {
            let q = self.piece_exchange(ctx, p);
            for (&d, w) in self.soil_dofs(p.soil).iter().zip(&p.weights) {
                out[d] += w * q;
            }
        }
        out
    }
}

impl CouplingManager for EmbeddedCoupling {
    fn stencil(&self, domain: usize, element: usize, other: usize) -> &[usize] {
        match (domain, other) {
            (0, 1) => &self.stencils.bulk_to_low[element],
            (1, 0) => &self.stencils.low_to_bulk[element],
            _ => &[],
        }
    }

    fn add_coupling(
        &self,
        ctx: &CouplingContext,
        domain: usize,
        element: usize,
        out: &mut [f64],
    ) -> Result<()> {
        match domain {
            0 => {
                let neq = self.richards.num_eq();
                for &i in &self.by_soil[element] {
                    let p = &self.pieces[i];
                    let q = self.piece_exchange(ctx, p);
                    for (l, w) in p.weights.iter().enumerate() {
                        out[l * neq] -= w * q;
                    }
                }
            }
            1 => {
                for &i in &self.by_root[element] {
                    out[0] += self.piece_exchange(ctx, &self.pieces[i]);
                }
            }
            _ => {}
        }
        Ok(())
    }
}

use crate::error::{Error, Result};
use crate::fvgeom::{GridGeometry, Scheme};
use crate::solvers::{CouplingContext, CouplingManager};

/// Linear exchange `Q = c (p_1 - p_2) V` between cell pairs of two
/// cell-centered single-equation domains, `V` the domain-0 cell volume.
pub struct PointSourceCoupling {
    pairs: Vec<(usize, usize)>,
    coefficient: f64,
    volumes: Vec<f64>,
    stencil0: Vec<Vec<usize>>,
    stencil1: Vec<Vec<usize>>,
    by0: Vec<Vec<usize>>,
    by1: Vec<Vec<usize>>,
}

impl PointSourceCoupling {
    pub fn new(
        gg0: &GridGeometry,
        gg1: &GridGeometry,
        pairs: Vec<(usize, usize)>,
        coefficient: f64,
    ) -> Result<Self> {
        if gg0.scheme() != Scheme::Tpfa || gg1.scheme() != Scheme::Tpfa {
            return Err(Error::InvalidArgument(
                "point coupling expects tpfa domains".into(),
            ));
        }
        let (n0, n1) = (gg0.num_elements(), gg1.num_elements());
        let mut stencil0 = vec![Vec::new(); n0];
        let mut stencil1 = vec![Vec::new(); n1];
        let mut by0 = vec![Vec::new(); n0];
        let mut by1 = vec![Vec::new(); n1];
        let mut volumes = Vec::with_capacity(pairs.len());
        for (k, &(a, b)) in pairs.iter().enumerate() {
            if a >= n0 || b >= n1 {
                return Err(Error::OutOfRange {
                    what: "coupled cell",
                    index: a.max(b),
                    len: n0.min(n1),
                });
            }
            stencil0[a].push(b);
            stencil1[b].push(a);
            by0[a].push(k);
            by1[b].push(k);
            volumes.push(gg0.scv(a).volume);
        }
        for v in stencil0.iter_mut().chain(stencil1.iter_mut()) {
            v.sort_unstable();
            v.dedup();
        }
        Ok(PointSourceCoupling {
            pairs,
            coefficient,
            volumes,
            stencil0,
            stencil1,
            by0,
            by1,
        })
    }

    fn exchange(&self, ctx: &CouplingContext, k: usize) -> f64 {
        let (a, b) = self.pairs[k];
        self.coefficient * (ctx.vars(0, a)[0] - ctx.vars(1, b)[0]) * self.volumes[k]
    }
}

impl CouplingManager for PointSourceCoupling {
    fn stencil(&self, domain: usize, element: usize, other: usize) -> &[usize] {
        match (domain, other) {
            (0, 1) => &self.stencil0[element],
            (1, 0) => &self.stencil1[element],
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
            0 => self.by0[element]
                .iter()
                .for_each(|&k| out[0] += self.exchange(ctx, k)),
            1 => self.by1[element]
                .iter()
                .for_each(|&k| out[0] -= self.exchange(ctx, k)),
            _ => {}
        }
        Ok(())
    }
}

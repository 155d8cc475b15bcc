use std::sync::Arc;

use super::newton::NonlinearSystem;
use super::sparse::{BlockSystem, CsrMatrix, TripletMatrix};
use crate::error::{Error, Result};
use crate::fvgeom::{GridGeometry, Scheme, SubControlVolumeFace};
use crate::models::{BcKind, DofVars, FaceContext, Physics, VolumeContext};

/// A grid geometry together with the physics solved on it.
#[derive(Clone)]
pub struct Subdomain {
    pub gg: Arc<GridGeometry>,
    pub physics: Arc<dyn Physics>,
}

impl Subdomain {
    pub fn new(gg: Arc<GridGeometry>, physics: Arc<dyn Physics>) -> Self {
        Subdomain { gg, physics }
    }

    pub fn num_eq(&self) -> usize {
        self.physics.num_eq()
    }

    /// Number of scalar unknowns.
    pub fn size(&self) -> usize {
        self.gg.num_dofs() * self.num_eq()
    }
}

/// Current state of all subdomains as seen by a coupling manager.
#[derive(Clone, Copy)]
pub struct CouplingContext<'a> {
    pub domains: &'a [Subdomain],
    pub states: &'a [Vec<f64>],
    pub t: f64,
}

impl<'a> CouplingContext<'a> {
    pub fn vars(&self, domain: usize, dof: usize) -> &'a [f64] {
        let n = self.domains[domain].num_eq();
        &self.states[domain][dof * n..(dof + 1) * n]
    }
}

/// Connects subdomains through element residual contributions.
pub trait CouplingManager: Send + Sync {
    /// Sorted dofs of domain `other` the residual of `element` in `domain`
    /// depends on. Empty for uncoupled pairs.
    fn stencil(&self, domain: usize, element: usize, other: usize) -> &[usize] {
        let _ = (domain, element, other);
        &[]
    }

    /// Faces whose regular flux is replaced by the coupling.
    fn skip_scvf(&self, domain: usize, scvf: &SubControlVolumeFace) -> bool {
        let _ = (domain, scvf);
        false
    }

    /// Adds coupling terms to the residual rows of `element` (laid out as
    /// `element_dofs(element) x num_eq`).
    fn add_coupling(
        &self,
        ctx: &CouplingContext,
        domain: usize,
        element: usize,
        out: &mut [f64],
    ) -> Result<()> {
        let _ = (ctx, domain, element, out);
        Ok(())
    }
}

pub struct NoCoupling;

impl CouplingManager for NoCoupling {}

/// Numeric differentiation settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericDiff {
    pub central: bool,
    /// Step is `rel_step * max(|u|, 1)`.
    pub rel_step: f64,
}

impl Default for NumericDiff {
    fn default() -> Self {
        NumericDiff {
            central: false,
            rel_step: 1e-8,
        }
    }
}

impl NumericDiff {
    pub fn central(rel_step: f64) -> Self {
        NumericDiff {
            central: true,
            rel_step,
        }
    }
}

/// Residual split by origin, per scalar unknown.
///
/// `boundary` holds boundary face fluxes (positive outward), `source` is
/// `-q vol`, `storage` the accumulation term. Box Dirichlet rows are not
/// replaced here.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResidualParts {
    pub storage: Vec<f64>,
    pub flux: Vec<f64>,
    pub boundary: Vec<f64>,
    pub source: Vec<f64>,
    pub coupling: Vec<f64>,
}

impl ResidualParts {
    fn zeros(n: usize) -> Self {
        ResidualParts {
            storage: vec![0.0; n],
            flux: vec![0.0; n],
            boundary: vec![0.0; n],
            source: vec![0.0; n],
            coupling: vec![0.0; n],
        }
    }

    pub fn total(&self) -> Vec<f64> {
        (0..self.storage.len())
            .map(|i| {
                self.storage[i]
                    + self.flux[i]
                    + self.boundary[i]
                    + self.source[i]
                    + self.coupling[i]
            })
            .collect()
    }

    /// Sums over all dofs of equation `eq`.
    pub fn sums(&self, eq: usize, num_eq: usize) -> [f64; 5] {
        let s = |v: &[f64]| v.iter().skip(eq).step_by(num_eq).sum::<f64>();
        [
            s(&self.storage),
            s(&self.flux),
            s(&self.boundary),
            s(&self.source),
            s(&self.coupling),
        ]
    }
}

struct LocalResidual {
    rows: Vec<usize>,
    parts: ResidualParts,
    /// Interior face fluxes with their inside and (box) outside row offsets.
    faces: Vec<(usize, Option<usize>, Vec<f64>)>,
}

/// Element-wise residual and numeric Jacobian assembly over one or more
/// coupled subdomains, with backward Euler in time.
pub struct Assembler {
    domains: Vec<Subdomain>,
    coupling: Arc<dyn CouplingManager>,
    offsets: Vec<usize>,
    t: f64,
    dt: Option<f64>,
    u_old: Vec<Vec<f64>>,
    diff: NumericDiff,
}

impl Assembler {
    pub fn new(domains: Vec<Subdomain>, coupling: Arc<dyn CouplingManager>) -> Result<Self> {
        if domains.is_empty() {
            return Err(Error::InvalidArgument(
                "assembler needs at least one subdomain".into(),
            ));
        }
        let mut offsets = vec![0];
        for d in &domains {
            offsets.push(offsets.last().unwrap() + d.size());
        }
        let u_old = domains.iter().map(|d| vec![0.0; d.size()]).collect();
        Ok(Assembler {
            domains,
            coupling,
            offsets,
            t: 0.0,
            dt: None,
            u_old,
            diff: NumericDiff::default(),
        })
    }

    pub fn single(gg: Arc<GridGeometry>, physics: Arc<dyn Physics>) -> Self {
        Self::new(vec![Subdomain::new(gg, physics)], Arc::new(NoCoupling)).expect("one domain")
    }

    pub fn with_differencing(mut self, diff: NumericDiff) -> Self {
        self.diff = diff;
        self
    }

    pub fn set_differencing(&mut self, diff: NumericDiff) {
        self.diff = diff;
    }

    pub fn differencing(&self) -> NumericDiff {
        self.diff
    }

    pub fn domains(&self) -> &[Subdomain] {
        &self.domains
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn size(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn time_step(&self) -> Option<f64> {
        self.dt
    }

    /// Steady residual (no storage) evaluated at time `t`.
    pub fn set_steady(&mut self, t: f64) {
        self.t = t;
        self.dt = None;
    }

    /// Transient residual for the step ending at `t_new` from state `u_old`.
    pub fn set_transient(&mut self, t_new: f64, dt: f64, u_old: &[f64]) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "time step size must be positive, got {dt}"
            )));
        }
        self.u_old = self.split(u_old)?;
        self.t = t_new;
        self.dt = Some(dt);
        Ok(())
    }

    pub fn split(&self, u: &[f64]) -> Result<Vec<Vec<f64>>> {
        if u.len() != self.size() {
            return Err(Error::LengthMismatch {
                what: "solution vector",
                expected: self.size(),
                got: u.len(),
            });
        }
        Ok(self
            .offsets
            .windows(2)
            .map(|w| u[w[0]..w[1]].to_vec())
            .collect())
    }

    fn element_residual(
        &self,
        i: usize,
        e: usize,
        states: &[Vec<f64>],
        coupling_only: bool,
    ) -> Result<LocalResidual> {
        let dom = &self.domains[i];
        let gg = &*dom.gg;
        let phys = &*dom.physics;
        let neq = phys.num_eq();
        let rows = gg.element_dofs(e);
        let mut parts = ResidualParts::zeros(rows.len() * neq);
        let mut faces = Vec::new();
        let local = |dof: usize| -> usize {
            if rows.len() == 1 {
                0
            } else {
                rows.iter()
                    .position(|&r| r == dof)
                    .expect("dof of the element")
            }
        };
        if !coupling_only {
            let u = &states[i];
            let vars = DofVars {
                data: u,
                num_eq: neq,
            };
            let view = gg.local_view(e)?;
            let mut buf = vec![0.0; neq];
            let mut buf_old = vec![0.0; neq];
            for scv in view.scvs() {
                let r = local(scv.dof) * neq;
                if let Some(dt) = self.dt {
                    let ctx = VolumeContext {
                        gg,
                        scv,
                        vars: vars.get(scv.dof),
                    };
                    phys.storage(&ctx, &mut buf);
                    let old = DofVars {
                        data: &self.u_old[i],
                        num_eq: neq,
                    };
                    let ctx_old = VolumeContext {
                        gg,
                        scv,
                        vars: old.get(scv.dof),
                    };
                    phys.storage(&ctx_old, &mut buf_old);
                    for k in 0..neq {
                        parts.storage[r + k] += (buf[k] - buf_old[k]) * scv.volume / dt;
                    }
                }
                let ctx = VolumeContext {
                    gg,
                    scv,
                    vars: vars.get(scv.dof),
                };
                buf.iter_mut().for_each(|v| *v = 0.0);
                phys.source(&ctx, self.t, &mut buf);
                for (s, b) in parts.source[r..r + neq].iter_mut().zip(&buf) {
                    *s -= b * scv.volume;
                }
            }
            for scvf in view.scvfs() {
                if self.coupling.skip_scvf(i, scvf) {
                    continue;
                }
                let ctx = FaceContext {
                    gg,
                    scvf,
                    vars,
                    boundary_vars: None,
                    t: self.t,
                };
                let r_in = local(gg.scv(scvf.inside_scv).dof) * neq;
                if !scvf.boundary {
                    phys.flux(&ctx, &mut buf)?;
                    for (f, b) in parts.flux[r_in..r_in + neq].iter_mut().zip(&buf) {
                        *f += b;
                    }
                    let mut r_out = None;
                    if gg.scheme() == Scheme::Box {
                        let o = scvf
                            .outside_scv()
                            .expect("box interior face has one neighbor");
                        let r = local(gg.scv(o).dof) * neq;
                        for (f, b) in parts.flux[r..r + neq].iter_mut().zip(&buf) {
                            *f -= b;
                        }
                        r_out = Some(r);
                    }
                    faces.push((r_in, r_out, buf.clone()));
                    continue;
                }
                let types = phys.boundary_types(scvf.marker, scvf.center)?;
                if types.len() != neq {
                    return Err(Error::LengthMismatch {
                        what: "boundary types",
                        expected: neq,
                        got: types.len(),
                    });
                }
                let mut g = vec![0.0; neq];
                if types.contains(&BcKind::Neumann) {
                    phys.neumann(&ctx, &mut g);
                }
                let any_dirichlet = types.contains(&BcKind::Dirichlet);
                match gg.scheme() {
                    Scheme::Tpfa => {
                        let mut f = vec![0.0; neq];
                        if any_dirichlet {
                            let mut bv = vec![0.0; neq];
                            phys.dirichlet(scvf.center, self.t, &mut bv);
                            let inside = ctx.inside_vars();
                            for k in 0..neq {
                                if types[k] == BcKind::Neumann {
                                    bv[k] = inside[k];
                                }
                            }
                            let bctx = FaceContext {
                                boundary_vars: Some(&bv),
                                ..ctx
                            };
                            phys.flux(&bctx, &mut f)?;
                        }
                        for k in 0..neq {
                            if types[k] == BcKind::Neumann {
                                f[k] = g[k] * scvf.area;
                            }
                            parts.boundary[r_in + k] += f[k];
                        }
                    }
                    Scheme::Box => {
                        for k in 0..neq {
                            if types[k] == BcKind::Neumann {
                                parts.boundary[r_in + k] += g[k] * scvf.area;
                            }
                        }
                    }
                }
            }
        }
        let ctx = CouplingContext {
            domains: &self.domains,
            states,
            t: self.t,
        };
        self.coupling
            .add_coupling(&ctx, i, e, &mut parts.coupling)?;
        Ok(LocalResidual { rows, parts, faces })
    }

    /// Box dofs with a Dirichlet condition, as `(dof, eq)` pairs, sorted.
    pub fn dirichlet_dofs(&self, i: usize) -> Result<Vec<(usize, usize)>> {
        let dom = &self.domains[i];
        let gg = &*dom.gg;
        if gg.scheme() != Scheme::Box {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for scvf in gg.scvfs().iter().filter(|f| f.boundary) {
            let types = dom.physics.boundary_types(scvf.marker, scvf.center)?;
            let dof = gg.scv(scvf.inside_scv).dof;
            for (k, t) in types.iter().enumerate() {
                if *t == BcKind::Dirichlet {
                    out.push((dof, k));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    fn apply_dirichlet_residual(&self, i: usize, u: &[f64], r: &mut [f64]) -> Result<()> {
        let dom = &self.domains[i];
        let neq = dom.num_eq();
        let mut val = vec![0.0; neq];
        for (dof, k) in self.dirichlet_dofs(i)? {
            dom.physics
                .dirichlet(dom.gg.dof_positions()[dof], self.t, &mut val);
            r[dof * neq + k] = u[dof * neq + k] - val[k];
        }
        Ok(())
    }

    /// Residual contributions per domain, before Dirichlet row replacement.
    pub fn residual_parts(&self, u: &[f64]) -> Result<Vec<ResidualParts>> {
        let states = self.split(u)?;
        self.parts_of(&states)
    }

    fn parts_of(&self, states: &[Vec<f64>]) -> Result<Vec<ResidualParts>> {
        let mut out = Vec::with_capacity(self.domains.len());
        for (i, dom) in self.domains.iter().enumerate() {
            let neq = dom.num_eq();
            let mut p = ResidualParts::zeros(dom.size());
            for e in 0..dom.gg.num_elements() {
                let lr = self.element_residual(i, e, states, false)?;
                for (l, &dof) in lr.rows.iter().enumerate() {
                    for k in 0..neq {
                        let (g, s) = (dof * neq + k, l * neq + k);
                        p.storage[g] += lr.parts.storage[s];
                        p.flux[g] += lr.parts.flux[s];
                        p.boundary[g] += lr.parts.boundary[s];
                        p.source[g] += lr.parts.source[s];
                        p.coupling[g] += lr.parts.coupling[s];
                    }
                }
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Residual blocks per domain.
    pub fn residual_blocks(&self, u: &[f64]) -> Result<Vec<Vec<f64>>> {
        let states = self.split(u)?;
        let parts = self.parts_of(&states)?;
        let mut out = Vec::with_capacity(parts.len());
        for (i, p) in parts.iter().enumerate() {
            let mut r = p.total();
            self.apply_dirichlet_residual(i, &states[i], &mut r)?;
            out.push(r);
        }
        Ok(out)
    }

    pub fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.residual_blocks(u)?.concat())
    }

    /// Residual and block Jacobian by element-wise numeric differentiation.
    pub fn assemble(&self, u: &[f64]) -> Result<BlockSystem> {
        let mut states = self.split(u)?;
        let n = self.domains.len();
        let mut trip: Vec<Vec<TripletMatrix>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| TripletMatrix::new(self.domains[i].size(), self.domains[j].size()))
                    .collect()
            })
            .collect();
        let mut residuals: Vec<Vec<f64>> =
            self.domains.iter().map(|d| vec![0.0; d.size()]).collect();

        for i in 0..n {
            let dom = &self.domains[i];
            let neq = dom.num_eq();
            let dir = self.dirichlet_dofs(i)?;
            let mut fixed = vec![false; dom.size()];
            for &(d, k) in &dir {
                fixed[d * neq + k] = true;
            }
            for e in 0..dom.gg.num_elements() {
                let base = self.element_residual(i, e, &states, false)?;
                let r0 = base.parts.total();
                for (l, &dof) in base.rows.iter().enumerate() {
                    for k in 0..neq {
                        residuals[i][dof * neq + k] += r0[l * neq + k];
                    }
                }
                let stencil = dom.gg.element_stencil(e).to_vec();
                for &d in &stencil {
                    for kc in 0..neq {
                        let col = d * neq + kc;
                        let deriv = self.derivative(i, e, i, col, &mut states, &base, false)?;
                        scatter(&mut trip[i][i], &base.rows, neq, col, &deriv, &fixed);
                    }
                }
                for j in (0..n).filter(|&j| j != i) {
                    let cs = self.coupling.stencil(i, e, j);
                    if cs.is_empty() {
                        continue;
                    }
                    let cs = cs.to_vec();
                    let neq_j = self.domains[j].num_eq();
                    for &d in &cs {
                        if d >= self.domains[j].gg.num_dofs() {
                            return Err(Error::StencilMismatch(format!(
                                "domain {i} element {e} references dof {d} of domain {j}"
                            )));
                        }
                        for kc in 0..neq_j {
                            let col = d * neq_j + kc;
                            let deriv = self.derivative(i, e, j, col, &mut states, &base, true)?;
                            scatter(&mut trip[i][j], &base.rows, neq, col, &deriv, &fixed);
                        }
                    }
                }
            }
            self.apply_dirichlet_residual(i, &states[i], &mut residuals[i])?;
            for &(d, k) in &dir {
                trip[i][i].push(d * neq + k, d * neq + k, 1.0);
            }
        }
        Ok(BlockSystem {
            blocks: trip
                .iter()
                .map(|row| row.iter().map(TripletMatrix::to_csr).collect())
                .collect(),
            residuals,
        })
    }

    /// Column of the element residual with respect to `states[j][col]`.
    /// Terms are differenced one by one (each face flux separately) so that
    /// large unchanged contributions do not swamp small ones in roundoff.
    #[allow(clippy::too_many_arguments)]
    fn derivative(
        &self,
        i: usize,
        e: usize,
        j: usize,
        col: usize,
        states: &mut [Vec<f64>],
        base: &LocalResidual,
        coupling_only: bool,
    ) -> Result<Vec<f64>> {
        let eval = |s: &[Vec<f64>]| self.element_residual(i, e, s, coupling_only);
        let diff = |a: &LocalResidual, b: &LocalResidual, h: f64| -> Vec<f64> {
            let (pa, pb) = (&a.parts, &b.parts);
            let mut out: Vec<f64> = (0..pa.coupling.len())
                .map(|k| {
                    let mut d = pa.coupling[k] - pb.coupling[k];
                    if !coupling_only {
                        d += (pa.storage[k] - pb.storage[k])
                            + (pa.boundary[k] - pb.boundary[k])
                            + (pa.source[k] - pb.source[k]);
                    }
                    d
                })
                .collect();
            if !coupling_only {
                for ((r_in, r_out, fa), (_, _, fb)) in a.faces.iter().zip(&b.faces) {
                    for k in 0..fa.len() {
                        let d = fa[k] - fb[k];
                        out[r_in + k] += d;
                        if let Some(r) = r_out {
                            out[r + k] -= d;
                        }
                    }
                }
            }
            out.iter_mut().for_each(|v| *v /= h);
            out
        };
        let orig = states[j][col];
        let h = self.diff.rel_step * orig.abs().max(1.0);
        states[j][col] = orig + h;
        let rp = eval(states);
        let out = if self.diff.central {
            states[j][col] = orig - h;
            let rm = eval(states);
            states[j][col] = orig;
            diff(&rp?, &rm?, 2.0 * h)
        } else {
            states[j][col] = orig;
            diff(&rp?, base, h)
        };
        Ok(out)
    }

    /// Monolithic Jacobian only, for oracle comparisons.
    pub fn jacobian(&self, u: &[f64]) -> Result<CsrMatrix> {
        Ok(self.assemble(u)?.monolithic_matrix())
    }
}

fn scatter(
    t: &mut TripletMatrix,
    rows: &[usize],
    neq: usize,
    col: usize,
    deriv: &[f64],
    fixed: &[bool],
) {
    for (l, &dof) in rows.iter().enumerate() {
        for k in 0..neq {
            let row = dof * neq + k;
            let v = deriv[l * neq + k];
            if !fixed[row] && v != 0.0 {
                t.push(row, col, v);
            }
        }
    }
}

impl NonlinearSystem for Assembler {
    fn size(&self) -> usize {
        Assembler::size(self)
    }

    fn residual(&mut self, u: &[f64]) -> Result<Vec<f64>> {
        Assembler::residual(self, u)
    }

    fn linearize(&mut self, u: &[f64]) -> Result<(CsrMatrix, Vec<f64>)> {
        let sys = self.assemble(u)?;
        Ok((sys.monolithic_matrix(), sys.monolithic_residual()))
    }
}

//! Local residual terms (storage, flux, source) of the flow and transport
//! models and the boundary/initial condition records they are solved with.

mod onep;
mod richards;
mod tracer;
mod twop;
mod xylem;

pub use onep::OneP;
pub use richards::Richards;
pub use tracer::Tracer;
pub use twop::TwoP;
pub use xylem::Xylem;

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fvgeom::{GridGeometry, Scheme, SubControlVolume, SubControlVolumeFace};
use crate::geometry::{Mat3, Vec3};

/// Standard gravitational acceleration in m/s^2.
pub const GRAVITY: f64 = 9.81;

/// Gravity vector: along -y in a 2D world, along -z in 3D.
pub fn gravity_vector(dim_world: usize) -> Vec3 {
    if dim_world == 3 {
        Vec3::new(0.0, 0.0, -GRAVITY)
    } else {
        Vec3::xy(0.0, -GRAVITY)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcKind {
    Dirichlet,
    Neumann,
}

type MarkerSelector = dyn Fn(i32, Vec3) -> Option<Vec<BcKind>> + Send + Sync;
type PointFn = dyn Fn(Vec3, f64, &mut [f64]) + Send + Sync;
type NeumannFn = dyn Fn(i32, Vec3, f64, &[f64], &mut [f64]) + Send + Sync;
type InitialFn = dyn Fn(Vec3, &mut [f64]) + Send + Sync;
type SourceFn = dyn Fn(usize, Vec3, f64, &[f64], &mut [f64]) + Send + Sync;

/// Boundary conditions, initial values and sources of one subdomain.
///
/// Neumann values are fluxes per unit face measure, positive outward.
/// Sources are per unit control-volume measure.
#[derive(Clone)]
pub struct ProblemDefinition {
    num_eq: usize,
    markers: HashMap<i32, Vec<BcKind>>,
    selector: Option<Arc<MarkerSelector>>,
    dirichlet: Arc<PointFn>,
    neumann: Arc<NeumannFn>,
    initial: Arc<InitialFn>,
    source: Arc<SourceFn>,
}

impl std::fmt::Debug for ProblemDefinition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemDefinition")
            .field("num_eq", &self.num_eq)
            .field("markers", &self.markers)
            .finish_non_exhaustive()
    }
}

impl ProblemDefinition {
    /// No boundary markers, zero values and sources.
    pub fn new(num_eq: usize) -> Self {
        ProblemDefinition {
            num_eq,
            markers: HashMap::new(),
            selector: None,
            dirichlet: Arc::new(|_, _, out| out.fill(0.0)),
            neumann: Arc::new(|_, _, _, _, out| out.fill(0.0)),
            initial: Arc::new(|_, out| out.fill(0.0)),
            source: Arc::new(|_, _, _, _, out| out.fill(0.0)),
        }
    }

    pub fn num_eq(&self) -> usize {
        self.num_eq
    }

    pub fn with_boundary(mut self, marker: i32, kinds: Vec<BcKind>) -> Result<Self> {
        if kinds.len() != self.num_eq {
            return Err(Error::LengthMismatch {
                what: "boundary condition kinds",
                expected: self.num_eq,
                got: kinds.len(),
            });
        }
        self.markers.insert(marker, kinds);
        Ok(self)
    }

    /// Same kind for all equations on each listed marker.
    pub fn with_uniform_boundary(mut self, markers: &[i32], kind: BcKind) -> Self {
        for &m in markers {
            self.markers.insert(m, vec![kind; self.num_eq]);
        }
        self
    }

    /// Position-dependent override, consulted before the marker table.
    pub fn with_selector(
        mut self,
        f: impl Fn(i32, Vec3) -> Option<Vec<BcKind>> + Send + Sync + 'static,
    ) -> Self {
        self.selector = Some(Arc::new(f));
        self
    }

    pub fn with_dirichlet(
        mut self,
        f: impl Fn(Vec3, f64, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.dirichlet = Arc::new(f);
        self
    }

    /// `f(marker, x, t, inside_vars, out)`
    pub fn with_neumann(
        mut self,
        f: impl Fn(i32, Vec3, f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.neumann = Arc::new(f);
        self
    }

    pub fn with_initial(mut self, f: impl Fn(Vec3, &mut [f64]) + Send + Sync + 'static) -> Self {
        self.initial = Arc::new(f);
        self
    }

    /// `f(element, x, t, vars, out)`
    pub fn with_source(
        mut self,
        f: impl Fn(usize, Vec3, f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.source = Arc::new(f);
        self
    }

    pub fn boundary_types(&self, marker: i32, x: Vec3) -> Result<Vec<BcKind>> {
        if let Some(sel) = &self.selector {
            if let Some(k) = sel(marker, x) {
                return Ok(k);
            }
        }
        self.markers
            .get(&marker)
            .cloned()
            .ok_or(Error::MissingBoundaryCondition(marker))
    }

    pub fn dirichlet(&self, x: Vec3, t: f64, out: &mut [f64]) {
        (self.dirichlet)(x, t, out)
    }

    pub fn neumann(&self, marker: i32, x: Vec3, t: f64, inside: &[f64], out: &mut [f64]) {
        (self.neumann)(marker, x, t, inside, out)
    }

    pub fn initial(&self, x: Vec3, out: &mut [f64]) {
        (self.initial)(x, out)
    }

    pub fn source(&self, element: usize, x: Vec3, t: f64, vars: &[f64], out: &mut [f64]) {
        (self.source)(element, x, t, vars, out)
    }
}

/// Flat per-dof primary variables.
#[derive(Clone, Copy, Debug)]
pub struct DofVars<'a> {
    pub data: &'a [f64],
    pub num_eq: usize,
}

impl<'a> DofVars<'a> {
    pub fn get(&self, dof: usize) -> &'a [f64] {
        &self.data[dof * self.num_eq..(dof + 1) * self.num_eq]
    }
}

/// A value location in a flux stencil.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Node {
    Dof(usize),
    /// Dirichlet values on a TPFA boundary face.
    Boundary,
}

/// A point where a coefficient is evaluated.
#[derive(Clone, Copy, Debug)]
pub struct Site<'a> {
    pub element: usize,
    pub vars: &'a [f64],
    pub position: Vec3,
}

/// Linear flux stencil `F = sum_k w_k phi(node_k)` of one face.
#[derive(Clone, Debug)]
pub struct FaceStencil {
    pub entries: Vec<(Node, f64)>,
    pub inside: Node,
    /// Downstream candidates with mixing weights summing to 1.
    pub outside: Vec<(Node, f64)>,
}

impl FaceStencil {
    pub fn apply(&self, mut phi: impl FnMut(Node) -> f64) -> f64 {
        self.entries.iter().map(|&(n, w)| w * phi(n)).sum()
    }

    /// Inside value for nonnegative flux, otherwise the weighted outside
    /// value.
    pub fn upstream(&self, flux: f64, mut value: impl FnMut(Node) -> f64) -> f64 {
        if flux >= 0.0 {
            value(self.inside)
        } else {
            self.outside.iter().map(|&(n, w)| w * value(n)).sum()
        }
    }
}

/// `t = area * (n^T K n) / d`
pub fn half_transmissibility(area: f64, normal: Vec3, k: &Mat3, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "center-to-face distance {d} must be positive"
        )));
    }
    Ok(area * k.quad_form(normal) / d)
}

/// Harmonic combination of two half transmissibilities.
pub fn tpfa_transmissibility(t_in: f64, t_out: f64) -> f64 {
    if t_in + t_out == 0.0 {
        0.0
    } else {
        t_in * t_out / (t_in + t_out)
    }
}

/// Volumetric xylem flow `K_ax (psi_in - psi_out) / d` in m^3/s.
pub fn xylem_flux(k_ax: f64, psi_in: f64, psi_out: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "segment distance {d} must be positive"
        )));
    }
    Ok(k_ax * (psi_in - psi_out) / d)
}

/// Radial root water exchange per unit root length in mol/(m s), positive
/// into the soil: `-2 pi R krw K_rad (p_soil - p_root) rho_m`.
pub fn root_uptake_qw(
    p_soil: f64,
    p_root: f64,
    radius: f64,
    krw: f64,
    k_rad: f64,
    rho_m: f64,
) -> f64 {
    -2.0 * std::f64::consts::PI * radius * krw * k_rad * (p_soil - p_root) * rho_m
}

/// Matrix-fracture interface transmissibility per unit area across half
/// the aperture, `K_perp / (a / 2)`.
pub fn interface_transmissibility_per_area(k_perp: f64, aperture: f64) -> Result<f64> {
    if !(aperture > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "aperture {aperture} must be positive"
        )));
    }
    Ok(k_perp / (0.5 * aperture))
}

/// Geometric and state context of one SCV.
#[derive(Clone, Copy, Debug)]
pub struct VolumeContext<'a> {
    pub gg: &'a GridGeometry,
    pub scv: &'a SubControlVolume,
    pub vars: &'a [f64],
}

impl<'a> VolumeContext<'a> {
    pub fn element(&self) -> usize {
        self.scv.element
    }
}

/// Geometric and state context of one SCVF.
#[derive(Clone, Copy)]
pub struct FaceContext<'a> {
    pub gg: &'a GridGeometry,
    pub scvf: &'a SubControlVolumeFace,
    pub vars: DofVars<'a>,
    /// Face values on Dirichlet boundary faces (TPFA).
    pub boundary_vars: Option<&'a [f64]>,
    pub t: f64,
}

impl<'a> FaceContext<'a> {
    pub fn element(&self) -> usize {
        self.scvf.element
    }

    pub fn inside_dof(&self) -> usize {
        self.gg.scv(self.scvf.inside_scv).dof
    }

    pub fn inside_vars(&self) -> &'a [f64] {
        self.vars.get(self.inside_dof())
    }

    pub fn node_vars(&self, node: Node) -> &'a [f64] {
        match node {
            Node::Dof(d) => self.vars.get(d),
            Node::Boundary => self
                .boundary_vars
                .expect("boundary node requested on a face without boundary values"),
        }
    }

    pub fn node_position(&self, node: Node) -> Vec3 {
        match node {
            Node::Dof(d) => self.gg.dof_positions()[d],
            Node::Boundary => self.scvf.center,
        }
    }

    /// Element whose parameters apply at a node.
    pub fn node_element(&self, node: Node) -> usize {
        match (self.gg.scheme(), node) {
            (Scheme::Tpfa, Node::Dof(d)) => d,
            _ => self.scvf.element,
        }
    }

    /// Nodes across the face: the outside dofs, or the boundary node.
    pub fn far_nodes(&self) -> Vec<Node> {
        if self.scvf.boundary {
            vec![Node::Boundary]
        } else {
            self.scvf
                .outside_scvs
                .iter()
                .map(|&s| Node::Dof(self.gg.scv(s).dof))
                .collect()
        }
    }

    /// Arithmetic mean of a nodal quantity over the inside and far nodes.
    pub fn face_average(&self, mut value: impl FnMut(Node) -> f64) -> f64 {
        let far = self.far_nodes();
        let sum: f64 =
            far.iter().map(|&n| value(n)).sum::<f64>() + value(Node::Dof(self.inside_dof()));
        sum / (far.len() + 1) as f64
    }

    /// Flux stencil for a diffusion tensor supplied per site.
    ///
    /// TPFA uses `n^T K n` half transmissibilities combined harmonically
    /// (or by face-value elimination at branching points, or with the half
    /// transmissibility alone on Dirichlet faces). Box uses
    /// `-area n^T K grad N_v` with `K` evaluated at the face.
    pub fn stencil(&self, coef: impl Fn(&Site) -> Mat3) -> Result<FaceStencil> {
        let f = self.scvf;
        match self.gg.scheme() {
            Scheme::Tpfa => {
                let e = f.element;
                let xc = self.gg.scv(e).center;
                let site = Site {
                    element: e,
                    vars: self.vars.get(e),
                    position: xc,
                };
                let t_in = half_transmissibility(
                    f.area,
                    f.normal,
                    &coef(&site),
                    (f.center - xc).dot(f.normal),
                )?;
                if f.boundary {
                    if self.boundary_vars.is_none() {
                        return Err(Error::InvalidArgument(
                            "flux stencil on a boundary face without Dirichlet values".into(),
                        ));
                    }
                    return Ok(FaceStencil {
                        entries: vec![(Node::Dof(e), t_in), (Node::Boundary, -t_in)],
                        inside: Node::Dof(e),
                        outside: vec![(Node::Boundary, 1.0)],
                    });
                }
                let network = self.gg.mesh().dim_grid() == 1;
                let mut outs = Vec::with_capacity(f.outside_scvs.len());
                for &o in &f.outside_scvs {
                    let xo = self.gg.scv(o).center;
                    let (n_o, d_o) = if network {
                        let v = f.center - xo;
                        (v.normalized(), v.norm())
                    } else {
                        (-f.normal, (xo - f.center).dot(f.normal))
                    };
                    let site = Site {
                        element: o,
                        vars: self.vars.get(o),
                        position: xo,
                    };
                    outs.push((o, half_transmissibility(f.area, n_o, &coef(&site), d_o)?));
                }
                let sum_out: f64 = outs.iter().map(|o| o.1).sum();
                let total = t_in + sum_out;
                let mut entries = Vec::with_capacity(outs.len() + 1);
                if total == 0.0 {
                    entries.push((Node::Dof(e), 0.0));
                } else {
                    entries.push((Node::Dof(e), t_in * sum_out / total));
                    for &(o, t) in &outs {
                        entries.push((Node::Dof(o), -t_in * t / total));
                    }
                }
                let outside = outs
                    .iter()
                    .map(|&(o, t)| {
                        let w = if sum_out > 0.0 {
                            t / sum_out
                        } else {
                            1.0 / outs.len() as f64
                        };
                        (Node::Dof(o), w)
                    })
                    .collect();
                Ok(FaceStencil {
                    entries,
                    inside: Node::Dof(e),
                    outside,
                })
            }
            Scheme::Box => {
                let verts = self.gg.mesh().element(f.element);
                let neq = self.vars.num_eq;
                let mut face_vars = vec![0.0; neq];
                for (&v, &w) in verts.iter().zip(&f.shape_values) {
                    for (k, x) in self.vars.get(v).iter().enumerate() {
                        face_vars[k] += w * x;
                    }
                }
                let k = coef(&Site {
                    element: f.element,
                    vars: &face_vars,
                    position: f.center,
                });
                let kn = k.mul_vec(f.normal);
                let entries = verts
                    .iter()
                    .zip(&f.shape_gradients)
                    .map(|(&v, g)| (Node::Dof(v), -f.area * kn.dot(*g)))
                    .collect();
                let inside = Node::Dof(self.gg.scv(f.inside_scv).dof);
                let outside = match f.outside_scv() {
                    Some(o) => vec![(Node::Dof(self.gg.scv(o).dof), 1.0)],
                    None => vec![(inside, 1.0)],
                };
                Ok(FaceStencil {
                    entries,
                    inside,
                    outside,
                })
            }
        }
    }
}

/// Element-local physics of one subdomain.
///
/// Storage and sources are amounts per unit control-volume measure, fluxes
/// are totals through the face, positive out of the inside SCV.
pub trait Physics: Send + Sync {
    fn num_eq(&self) -> usize;

    fn var_names(&self) -> Vec<&'static str>;

    fn problem(&self) -> &ProblemDefinition;

    fn storage(&self, ctx: &VolumeContext, out: &mut [f64]);

    fn flux(&self, ctx: &FaceContext, out: &mut [f64]) -> Result<()>;

    fn source(&self, ctx: &VolumeContext, t: f64, out: &mut [f64]) {
        self.problem()
            .source(ctx.element(), ctx.scv.dof_position, t, ctx.vars, out)
    }

    fn boundary_types(&self, marker: i32, x: Vec3) -> Result<Vec<BcKind>> {
        self.problem().boundary_types(marker, x)
    }

    fn dirichlet(&self, x: Vec3, t: f64, out: &mut [f64]) {
        self.problem().dirichlet(x, t, out)
    }

    fn neumann(&self, ctx: &FaceContext, out: &mut [f64]) {
        self.problem().neumann(
            ctx.scvf.marker,
            ctx.scvf.center,
            ctx.t,
            ctx.inside_vars(),
            out,
        )
    }

    fn initial(&self, x: Vec3, out: &mut [f64]) {
        self.problem().initial(x, out)
    }
}

/// Initial solution vector of a subdomain from its problem definition.
pub fn initial_solution(gg: &GridGeometry, physics: &dyn Physics) -> Vec<f64> {
    let neq = physics.num_eq();
    let mut u = vec![0.0; gg.num_dofs() * neq];
    for (d, &x) in gg.dof_positions().iter().enumerate() {
        physics.initial(x, &mut u[d * neq..(d + 1) * neq]);
    }
    u
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::fvgeom::build_tpfa_geometry;
    use crate::mesh::build_structured_quad;

    /// Two unit cells side by side.
    pub fn two_cells() -> GridGeometry {
        let m = build_structured_quad(2, 1, Vec3::xy(0.0, 0.0), Vec3::xy(2.0, 1.0)).unwrap();
        build_tpfa_geometry(Arc::new(m)).unwrap()
    }

    /// The SCVF of element 0 on the shared facet.
    pub fn interior_face(gg: &GridGeometry, element: usize) -> &SubControlVolumeFace {
        gg.local_view(element)
            .unwrap()
            .scvfs()
            .iter()
            .find(|f| !f.boundary)
            .unwrap()
    }
}

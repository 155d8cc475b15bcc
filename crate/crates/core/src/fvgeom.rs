//! Finite-volume grid geometry: sub-control-volumes (SCVs), their faces
//! (SCVFs) and the dof map, for the cell-centered two-point scheme (TPFA)
//! and the vertex-centered box scheme.

use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{polygon_centroid, polygon_signed_area, Vec3};
use crate::mesh::{ElementKind, Mesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Tpfa,
    Box,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Tpfa => "tpfa",
            Scheme::Box => "box",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Scheme> {
        match s.to_ascii_lowercase().as_str() {
            "tpfa" | "cctpfa" => Ok(Scheme::Tpfa),
            "box" => Ok(Scheme::Box),
            _ => Err(Error::InvalidArgument(format!("unknown scheme '{s}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SubControlVolume {
    pub index: usize,
    pub dof: usize,
    pub element: usize,
    /// Local index within the element (the element vertex for box).
    pub local_index: usize,
    pub volume: f64,
    pub center: Vec3,
    pub dof_position: Vec3,
}

#[derive(Clone, Debug)]
pub struct SubControlVolumeFace {
    pub index: usize,
    pub element: usize,
    pub area: f64,
    pub center: Vec3,
    pub normal: Vec3,
    pub inside_scv: usize,
    /// Empty on the boundary. More than one entry only at network branching
    /// points.
    pub outside_scvs: Vec<usize>,
    pub boundary: bool,
    /// Facet marker on the boundary, 0 otherwise.
    pub marker: i32,
    /// Mesh facet the face lies on, if any (box interior faces lie inside
    /// elements).
    pub facet: Option<usize>,
    /// Box only: element basis values and gradients at `center`, in local
    /// vertex order.
    pub shape_values: Vec<f64>,
    pub shape_gradients: Vec<Vec3>,
}

impl SubControlVolumeFace {
    pub fn outside_scv(&self) -> Option<usize> {
        if self.outside_scvs.len() == 1 {
            Some(self.outside_scvs[0])
        } else {
            None
        }
    }
}

/// Cached finite-volume geometry over a mesh.
#[derive(Clone, Debug)]
pub struct GridGeometry {
    scheme: Scheme,
    mesh: Arc<Mesh>,
    scvs: Vec<SubControlVolume>,
    scvfs: Vec<SubControlVolumeFace>,
    element_scvs: Vec<Range<usize>>,
    element_scvfs: Vec<Range<usize>>,
    dof_positions: Vec<Vec3>,
    stencils: Vec<Vec<usize>>,
}

/// Element-bound view on the geometry.
#[derive(Clone, Copy, Debug)]
pub struct LocalView<'a> {
    pub element: usize,
    gg: &'a GridGeometry,
}

impl<'a> LocalView<'a> {
    pub fn scvs(&self) -> &'a [SubControlVolume] {
        &self.gg.scvs[self.gg.element_scvs[self.element].clone()]
    }

    pub fn scvfs(&self) -> &'a [SubControlVolumeFace] {
        &self.gg.scvfs[self.gg.element_scvfs[self.element].clone()]
    }

    pub fn scv(&self, global: usize) -> &'a SubControlVolume {
        &self.gg.scvs[global]
    }

    pub fn dofs(&self) -> Vec<usize> {
        self.scvs().iter().map(|s| s.dof).collect()
    }

    pub fn geometry(&self) -> &'a GridGeometry {
        self.gg
    }
}

pub fn build_tpfa_geometry(mesh: Arc<Mesh>) -> Result<GridGeometry> {
    let ne = mesh.num_elements();
    let mut scvs = Vec::with_capacity(ne);
    let mut scvfs = Vec::new();
    let mut element_scvs = Vec::with_capacity(ne);
    let mut element_scvfs = Vec::with_capacity(ne);
    let mut dof_positions = Vec::with_capacity(ne);
    let mut stencils = Vec::with_capacity(ne);

    for e in 0..ne {
        let center = mesh.element_center(e);
        scvs.push(SubControlVolume {
            index: e,
            dof: e,
            element: e,
            local_index: 0,
            volume: mesh.element_measure(e),
            center,
            dof_position: center,
        });
        element_scvs.push(e..e + 1);
        dof_positions.push(center);

        let start = scvfs.len();
        let verts = mesh.element(e);
        let mut stencil = vec![e];
        for (local, &f) in mesh.element_facets(e).iter().enumerate() {
            let facet = mesh.facet(f);
            let (normal, area, fc) = if mesh.dim_grid() == 1 {
                let this = verts[local];
                let other = verts[1 - local];
                let n = (mesh.vertex(this) - mesh.vertex(other)).normalized();
                (n, 1.0, mesh.vertex(this))
            } else {
                let a = mesh.vertex(verts[local]);
                let b = mesh.vertex(verts[(local + 1) % verts.len()]);
                ((b - a).perp_cw().normalized(), a.distance(b), a.midpoint(b))
            };
            if (fc - center).dot(normal) <= 0.0 {
                return Err(Error::DegenerateGeometry(format!(
                    "element {e}: center does not lie inside facet {f}"
                )));
            }
            let outside: Vec<usize> = facet.elements.iter().copied().filter(|&n| n != e).collect();
            stencil.extend(outside.iter().copied());
            let boundary = outside.is_empty();
            scvfs.push(SubControlVolumeFace {
                index: scvfs.len(),
                element: e,
                area,
                center: fc,
                normal,
                inside_scv: e,
                outside_scvs: outside,
                boundary,
                marker: if boundary { facet.marker } else { 0 },
                facet: Some(f),
                shape_values: Vec::new(),
                shape_gradients: Vec::new(),
            });
        }
        element_scvfs.push(start..scvfs.len());
        stencil[1..].sort_unstable();
        stencil.dedup();
        stencils.push(stencil);
    }

    Ok(GridGeometry {
        scheme: Scheme::Tpfa,
        mesh,
        scvs,
        scvfs,
        element_scvs,
        element_scvfs,
        dof_positions,
        stencils,
    })
}

pub fn build_box_geometry(mesh: Arc<Mesh>) -> Result<GridGeometry> {
    if mesh.dim_grid() != 2 {
        return Err(Error::UnsupportedElement(
            "box geometry needs triangles or quadrilaterals".into(),
        ));
    }
    let ne = mesh.num_elements();
    let mut scvs = Vec::new();
    let mut scvfs = Vec::new();
    let mut element_scvs = Vec::with_capacity(ne);
    let mut element_scvfs = Vec::with_capacity(ne);
    let mut stencils = Vec::with_capacity(ne);

    for e in 0..ne {
        let verts = mesh.element(e);
        let pts = mesh.element_points(e);
        let k = pts.len();
        let kind = mesh.element_kind(e);
        let refs = reference_vertices(kind);
        let c = pts.iter().fold(Vec3::ZERO, |acc, &p| acc + p) * (1.0 / k as f64);
        let c_ref = refs.iter().fold(Vec3::ZERO, |acc, &p| acc + p) * (1.0 / k as f64);
        let mid: Vec<Vec3> = (0..k).map(|j| pts[j].midpoint(pts[(j + 1) % k])).collect();
        let mid_ref: Vec<Vec3> = (0..k)
            .map(|j| refs[j].midpoint(refs[(j + 1) % k]))
            .collect();

        let scv_start = scvs.len();
        for j in 0..k {
            let poly = [pts[j], mid[j], c, mid[(j + k - 1) % k]];
            let volume = polygon_signed_area(&poly);
            if volume <= 0.0 {
                return Err(Error::DegenerateGeometry(format!(
                    "element {e}: box sub-volume {j} has nonpositive area"
                )));
            }
            scvs.push(SubControlVolume {
                index: scvs.len(),
                dof: verts[j],
                element: e,
                local_index: j,
                volume,
                center: polygon_centroid(&poly),
                dof_position: pts[j],
            });
        }
        element_scvs.push(scv_start..scvs.len());

        let scvf_start = scvfs.len();
        for j in 0..k {
            let jn = (j + 1) % k;
            let d = c - mid[j];
            let mut n = d.perp_cw().normalized();
            if n.dot(pts[jn] - pts[j]) < 0.0 {
                n = -n;
            }
            let x_ref = mid_ref[j].midpoint(c_ref);
            let (values, grads) = shape_at_reference(kind, &pts, x_ref)?;
            scvfs.push(SubControlVolumeFace {
                index: scvfs.len(),
                element: e,
                area: d.norm(),
                center: mid[j].midpoint(c),
                normal: n,
                inside_scv: scv_start + j,
                outside_scvs: vec![scv_start + jn],
                boundary: false,
                marker: 0,
                facet: None,
                shape_values: values,
                shape_gradients: grads,
            });
        }
        for (j, &f) in mesh.element_facets(e).iter().enumerate() {
            let facet = mesh.facet(f);
            if !facet.is_boundary() {
                continue;
            }
            let jn = (j + 1) % k;
            let n = (pts[jn] - pts[j]).perp_cw().normalized();
            let half = 0.5 * pts[j].distance(pts[jn]);
            for (local, a, a_ref) in [(j, pts[j], refs[j]), (jn, pts[jn], refs[jn])] {
                let x_ref = a_ref.midpoint(mid_ref[j]);
                let (values, grads) = shape_at_reference(kind, &pts, x_ref)?;
                scvfs.push(SubControlVolumeFace {
                    index: scvfs.len(),
                    element: e,
                    area: half,
                    center: a.midpoint(mid[j]),
                    normal: n,
                    inside_scv: scv_start + local,
                    outside_scvs: Vec::new(),
                    boundary: true,
                    marker: facet.marker,
                    facet: Some(f),
                    shape_values: values,
                    shape_gradients: grads,
                });
            }
        }
        element_scvfs.push(scvf_start..scvfs.len());
        stencils.push(verts.to_vec());
    }

    Ok(GridGeometry {
        scheme: Scheme::Box,
        dof_positions: mesh.vertices().to_vec(),
        mesh,
        scvs,
        scvfs,
        element_scvs,
        element_scvfs,
        stencils,
    })
}

pub fn build_geometry(mesh: Arc<Mesh>, scheme: Scheme) -> Result<GridGeometry> {
    match scheme {
        Scheme::Tpfa => build_tpfa_geometry(mesh),
        Scheme::Box => build_box_geometry(mesh),
    }
}

fn reference_vertices(kind: ElementKind) -> Vec<Vec3> {
    match kind {
        ElementKind::Triangle => vec![Vec3::xy(0.0, 0.0), Vec3::xy(1.0, 0.0), Vec3::xy(0.0, 1.0)],
        ElementKind::Quadrilateral => vec![
            Vec3::xy(0.0, 0.0),
            Vec3::xy(1.0, 0.0),
            Vec3::xy(1.0, 1.0),
            Vec3::xy(0.0, 1.0),
        ],
        ElementKind::Segment => vec![Vec3::xy(0.0, 0.0), Vec3::xy(1.0, 0.0)],
    }
}

fn reference_basis(kind: ElementKind, r: Vec3) -> (Vec<f64>, Vec<Vec3>) {
    let (u, v) = (r.x, r.y);
    match kind {
        ElementKind::Triangle => (
            vec![1.0 - u - v, u, v],
            vec![Vec3::xy(-1.0, -1.0), Vec3::xy(1.0, 0.0), Vec3::xy(0.0, 1.0)],
        ),
        _ => (
            vec![(1.0 - u) * (1.0 - v), u * (1.0 - v), u * v, (1.0 - u) * v],
            vec![
                Vec3::xy(-(1.0 - v), -(1.0 - u)),
                Vec3::xy(1.0 - v, -u),
                Vec3::xy(v, u),
                Vec3::xy(-v, 1.0 - u),
            ],
        ),
    }
}

/// Basis values and physical gradients at a reference point.
fn shape_at_reference(kind: ElementKind, pts: &[Vec3], r: Vec3) -> Result<(Vec<f64>, Vec<Vec3>)> {
    let (values, dref) = reference_basis(kind, r);
    // J[a][b] = d x_a / d r_b
    let mut j = [[0.0; 2]; 2];
    for (p, g) in pts.iter().zip(&dref) {
        j[0][0] += p.x * g.x;
        j[0][1] += p.x * g.y;
        j[1][0] += p.y * g.x;
        j[1][1] += p.y * g.y;
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if !(det.abs() > 0.0) {
        return Err(Error::DegenerateGeometry(
            "singular element Jacobian".into(),
        ));
    }
    // grad N = J^{-T} grad_ref N
    let grads = dref
        .iter()
        .map(|g| {
            Vec3::xy(
                (j[1][1] * g.x - j[1][0] * g.y) / det,
                (-j[0][1] * g.x + j[0][0] * g.y) / det,
            )
        })
        .collect();
    Ok((values, grads))
}

fn map_to_physical(kind: ElementKind, pts: &[Vec3], r: Vec3) -> Vec3 {
    let (values, _) = reference_basis(kind, r);
    pts.iter()
        .zip(&values)
        .fold(Vec3::ZERO, |acc, (&p, &w)| acc + p * w)
}

impl GridGeometry {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<Mesh> {
        Arc::clone(&self.mesh)
    }

    pub fn num_dofs(&self) -> usize {
        self.dof_positions.len()
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_elements()
    }

    pub fn scvs(&self) -> &[SubControlVolume] {
        &self.scvs
    }

    pub fn scvfs(&self) -> &[SubControlVolumeFace] {
        &self.scvfs
    }

    pub fn scv(&self, i: usize) -> &SubControlVolume {
        &self.scvs[i]
    }

    pub fn scvf(&self, i: usize) -> &SubControlVolumeFace {
        &self.scvfs[i]
    }

    pub fn dof_positions(&self) -> &[Vec3] {
        &self.dof_positions
    }

    pub fn local_view(&self, element: usize) -> Result<LocalView<'_>> {
        if element >= self.num_elements() {
            return Err(Error::OutOfRange {
                what: "element",
                index: element,
                len: self.num_elements(),
            });
        }
        Ok(LocalView { element, gg: self })
    }

    /// Dofs the residual rows of an element depend on. TPFA: the cell first,
    /// then its face neighbors in ascending order. Box: the element vertices.
    pub fn element_stencil(&self, element: usize) -> &[usize] {
        &self.stencils[element]
    }

    /// Dofs whose residual rows an element writes to.
    pub fn element_dofs(&self, element: usize) -> Vec<usize> {
        match self.scheme {
            Scheme::Tpfa => vec![element],
            Scheme::Box => self.mesh.element(element).to_vec(),
        }
    }

    /// Control-volume measure per dof.
    pub fn dof_volumes(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.num_dofs()];
        for scv in &self.scvs {
            v[scv.dof] += scv.volume;
        }
        v
    }

    /// `sum_scv field[dof] * weight * volume`.
    pub fn integrate_dof_field(&self, field: &[f64], weight: f64) -> Result<f64> {
        if field.len() != self.num_dofs() {
            return Err(Error::LengthMismatch {
                what: "dof field",
                expected: self.num_dofs(),
                got: field.len(),
            });
        }
        Ok(self
            .scvs
            .iter()
            .map(|s| field[s.dof] * weight * s.volume)
            .sum())
    }

    /// Reference coordinates of a physical point in a 2D element. Newton
    /// iteration on the bilinear map for quadrilaterals.
    pub fn reference_coordinates(&self, element: usize, x: Vec3) -> Result<Vec3> {
        let kind = self.mesh.element_kind(element);
        let pts = self.mesh.element_points(element);
        let mut r = match kind {
            ElementKind::Segment => {
                return Err(Error::UnsupportedElement(
                    "no reference map for segments".into(),
                ))
            }
            ElementKind::Triangle => Vec3::xy(1.0 / 3.0, 1.0 / 3.0),
            ElementKind::Quadrilateral => Vec3::xy(0.5, 0.5),
        };
        for _ in 0..30 {
            let res = map_to_physical(kind, &pts, r) - x;
            let (_, dref) = reference_basis(kind, r);
            let mut j = [[0.0; 2]; 2];
            for (p, g) in pts.iter().zip(&dref) {
                j[0][0] += p.x * g.x;
                j[0][1] += p.x * g.y;
                j[1][0] += p.y * g.x;
                j[1][1] += p.y * g.y;
            }
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 {
                return Err(Error::DegenerateGeometry(
                    "singular element Jacobian".into(),
                ));
            }
            let du = (j[1][1] * res.x - j[0][1] * res.y) / det;
            let dv = (-j[1][0] * res.x + j[0][0] * res.y) / det;
            r = Vec3::xy(r.x - du, r.y - dv);
            if du.abs() + dv.abs() < 1e-15 {
                break;
            }
        }
        Ok(r)
    }

    /// Element basis values at a physical point, in local vertex order.
    pub fn shape_values_at(&self, element: usize, x: Vec3) -> Result<Vec<f64>> {
        let r = self.reference_coordinates(element, x)?;
        Ok(reference_basis(self.mesh.element_kind(element), r).0)
    }

    /// Basis gradients at a physical point, in local vertex order.
    pub fn shape_gradients_at(&self, element: usize, x: Vec3) -> Result<Vec<Vec3>> {
        let r = self.reference_coordinates(element, x)?;
        let pts = self.mesh.element_points(element);
        Ok(shape_at_reference(self.mesh.element_kind(element), &pts, r)?.1)
    }

    /// Value of a dof field at a point inside an element: the cell value for
    /// TPFA, the basis interpolant for box.
    pub fn evaluate_at(
        &self,
        element: usize,
        x: Vec3,
        field: impl Fn(usize) -> f64,
    ) -> Result<f64> {
        match self.scheme {
            Scheme::Tpfa => Ok(field(element)),
            Scheme::Box => {
                let w = self.shape_values_at(element, x)?;
                Ok(self
                    .mesh
                    .element(element)
                    .iter()
                    .zip(&w)
                    .map(|(&v, &wi)| wi * field(v))
                    .sum())
            }
        }
    }
}

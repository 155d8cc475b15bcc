//! Mesh containers for 2D bulk grids (triangles, quadrilaterals) and 1D
//! segment networks, with facet enumeration and boundary markers.

mod msh;

pub use msh::{read_msh, write_msh, MshMesh};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{polygon_centroid, polygon_signed_area, Aabb, Vec3};

/// Boundary marker of the left side of structured grids.
pub const MARKER_LEFT: i32 = 0;
pub const MARKER_RIGHT: i32 = 1;
pub const MARKER_BOTTOM: i32 = 2;
pub const MARKER_TOP: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementKind {
    Segment,
    Triangle,
    Quadrilateral,
}

impl ElementKind {
    pub fn num_vertices(self) -> usize {
        match self {
            ElementKind::Segment => 2,
            ElementKind::Triangle => 3,
            ElementKind::Quadrilateral => 4,
        }
    }
}

/// A codimension-one entity: an edge of a 2D grid or a vertex of a network.
#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub vertices: Vec<usize>,
    /// Adjacent elements in ascending order. One entry on the boundary, two
    /// on interior facets, more only at branching points of networks.
    pub elements: Vec<usize>,
    pub marker: i32,
}

impl Facet {
    /// The adjacent element with the lowest index.
    pub fn inside(&self) -> usize {
        self.elements[0]
    }

    /// The second element if the facet separates exactly two elements.
    pub fn outside(&self) -> Option<usize> {
        if self.elements.len() == 2 {
            Some(self.elements[1])
        } else {
            None
        }
    }

    pub fn is_boundary(&self) -> bool {
        self.elements.len() == 1
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    dim_world: usize,
    dim_grid: usize,
    vertices: Vec<Vec3>,
    elements: Vec<Vec<usize>>,
    element_markers: Vec<i32>,
    facets: Vec<Facet>,
    element_facets: Vec<Vec<usize>>,
    vertex_elements: Vec<Vec<usize>>,
}

impl Mesh {
    /// Builds a mesh and its facet set. 2D elements are reoriented
    /// counter-clockwise; all boundary markers start at 0.
    pub fn new(
        dim_world: usize,
        dim_grid: usize,
        vertices: Vec<Vec3>,
        mut elements: Vec<Vec<usize>>,
        element_markers: Vec<i32>,
    ) -> Result<Mesh> {
        if !(dim_world == 2 || dim_world == 3) {
            return Err(Error::InvalidMesh(format!("world dimension {dim_world}")));
        }
        if !(dim_grid == 1 || dim_grid == 2) || dim_grid > dim_world {
            return Err(Error::InvalidMesh(format!("grid dimension {dim_grid}")));
        }
        if dim_grid == 2 && dim_world != 2 {
            return Err(Error::InvalidMesh(
                "2D elements are only supported in a 2D world".into(),
            ));
        }
        if element_markers.len() != elements.len() {
            return Err(Error::LengthMismatch {
                what: "element markers",
                expected: elements.len(),
                got: element_markers.len(),
            });
        }
        if elements.is_empty() {
            return Err(Error::InvalidMesh("mesh has no elements".into()));
        }
        for (e, el) in elements.iter_mut().enumerate() {
            let ok = match dim_grid {
                1 => el.len() == 2,
                _ => el.len() == 3 || el.len() == 4,
            };
            if !ok {
                return Err(Error::UnsupportedElement(format!(
                    "element {e} with {} vertices in a {dim_grid}D grid",
                    el.len()
                )));
            }
            for &v in el.iter() {
                if v >= vertices.len() {
                    return Err(Error::InvalidMesh(format!(
                        "element {e} references missing vertex {v}"
                    )));
                }
            }
            if dim_grid == 2 {
                let pts: Vec<Vec3> = el.iter().map(|&v| vertices[v]).collect();
                let a = polygon_signed_area(&pts);
                if a < 0.0 {
                    el.reverse();
                }
                if a == 0.0 || !a.is_finite() {
                    return Err(Error::InvalidMesh(format!("element {e} has zero area")));
                }
            } else {
                let len = vertices[el[0]].distance(vertices[el[1]]);
                if len <= 0.0 || !len.is_finite() {
                    return Err(Error::InvalidMesh(format!("element {e} has zero length")));
                }
            }
        }

        let mut vertex_elements = vec![Vec::new(); vertices.len()];
        for (e, el) in elements.iter().enumerate() {
            for &v in el {
                vertex_elements[v].push(e);
            }
        }

        let mut facets: Vec<Facet> = Vec::new();
        let mut lookup: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut element_facets = Vec::with_capacity(elements.len());
        for (e, el) in elements.iter().enumerate() {
            let local: Vec<Vec<usize>> = if dim_grid == 1 {
                vec![vec![el[0]], vec![el[1]]]
            } else {
                (0..el.len())
                    .map(|i| vec![el[i], el[(i + 1) % el.len()]])
                    .collect()
            };
            let mut ids = Vec::with_capacity(local.len());
            for verts in local {
                let mut key = verts.clone();
                key.sort_unstable();
                let id = *lookup.entry(key).or_insert_with(|| {
                    facets.push(Facet {
                        vertices: verts,
                        elements: Vec::new(),
                        marker: 0,
                    });
                    facets.len() - 1
                });
                if facets[id].elements.last() != Some(&e) {
                    facets[id].elements.push(e);
                }
                ids.push(id);
            }
            element_facets.push(ids);
        }
        if dim_grid == 2 {
            if let Some((i, f)) = facets
                .iter()
                .enumerate()
                .find(|(_, f)| f.elements.len() > 2)
            {
                return Err(Error::InvalidMesh(format!(
                    "facet {i} is shared by {} elements",
                    f.elements.len()
                )));
            }
        }

        Ok(Mesh {
            dim_world,
            dim_grid,
            vertices,
            elements,
            element_markers,
            facets,
            element_facets,
            vertex_elements,
        })
    }

    pub fn dim_world(&self) -> usize {
        self.dim_world
    }

    pub fn dim_grid(&self) -> usize {
        self.dim_grid
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Vec3 {
        self.vertices[v]
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    pub fn element(&self, e: usize) -> &[usize] {
        &self.elements[e]
    }

    pub fn element_markers(&self) -> &[i32] {
        &self.element_markers
    }

    pub fn element_marker(&self, e: usize) -> i32 {
        self.element_markers[e]
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet(&self, f: usize) -> &Facet {
        &self.facets[f]
    }

    /// Facets of an element in local order: edge `(v_i, v_{i+1})` for 2D,
    /// the two end vertices for segments.
    pub fn element_facets(&self, e: usize) -> &[usize] {
        &self.element_facets[e]
    }

    pub fn vertex_elements(&self, v: usize) -> &[usize] {
        &self.vertex_elements[v]
    }

    pub fn element_kind(&self, e: usize) -> ElementKind {
        match (self.dim_grid, self.elements[e].len()) {
            (1, _) => ElementKind::Segment,
            (_, 3) => ElementKind::Triangle,
            _ => ElementKind::Quadrilateral,
        }
    }

    pub fn element_points(&self, e: usize) -> Vec<Vec3> {
        self.elements[e].iter().map(|&v| self.vertices[v]).collect()
    }

    /// Area (2D) or length (1D).
    pub fn element_measure(&self, e: usize) -> f64 {
        let pts = self.element_points(e);
        if self.dim_grid == 1 {
            pts[0].distance(pts[1])
        } else {
            polygon_signed_area(&pts)
        }
    }

    /// Area centroid (2D) or midpoint (1D).
    pub fn element_center(&self, e: usize) -> Vec3 {
        let pts = self.element_points(e);
        if self.dim_grid == 1 {
            pts[0].midpoint(pts[1])
        } else {
            polygon_centroid(&pts)
        }
    }

    pub fn element_bounding_box(&self, e: usize) -> Aabb {
        Aabb::from_points(self.elements[e].iter().map(|&v| &self.vertices[v]))
    }

    pub fn facet_center(&self, f: usize) -> Vec3 {
        let fv = &self.facets[f].vertices;
        if fv.len() == 1 {
            self.vertices[fv[0]]
        } else {
            self.vertices[fv[0]].midpoint(self.vertices[fv[1]])
        }
    }

    /// Edge length, or 1 for network vertices.
    pub fn facet_measure(&self, f: usize) -> f64 {
        let fv = &self.facets[f].vertices;
        if fv.len() == 1 {
            1.0
        } else {
            self.vertices[fv[0]].distance(self.vertices[fv[1]])
        }
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.num_elements())
            .map(|e| self.element_measure(e))
            .sum()
    }

    pub fn bounding_box(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    pub fn set_facet_marker(&mut self, f: usize, marker: i32) {
        self.facets[f].marker = marker;
    }

    /// Assigns markers to all boundary facets from their center.
    pub fn mark_boundary(&mut self, marker_at: impl Fn(Vec3) -> i32) {
        for f in 0..self.facets.len() {
            if self.facets[f].is_boundary() {
                let c = self.facet_center(f);
                self.facets[f].marker = marker_at(c);
            }
        }
    }

    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut on = vec![false; self.vertices.len()];
        for f in self.facets.iter().filter(|f| f.is_boundary()) {
            for &v in &f.vertices {
                on[v] = true;
            }
        }
        on
    }

    /// Returns a copy with interior vertices moved by `offset(vertex, position)`.
    /// Topology and markers are kept.
    pub fn displace_interior_vertices(
        &self,
        mut offset: impl FnMut(usize, Vec3) -> Vec3,
    ) -> Result<Mesh> {
        let on_boundary = self.boundary_vertices();
        let vertices = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, &p)| if on_boundary[i] { p } else { p + offset(i, p) })
            .collect();
        let mut m = Mesh::new(
            self.dim_world,
            self.dim_grid,
            vertices,
            self.elements.clone(),
            self.element_markers.clone(),
        )?;
        for (f, facet) in self.facets.iter().enumerate() {
            m.facets[f].marker = facet.marker;
        }
        Ok(m)
    }

    /// Plain-text dump used by golden tests.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "mesh dim_world={} dim_grid={}",
            self.dim_world, self.dim_grid
        );
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(s, "{i} {:?} {:?} {:?}", v.x, v.y, v.z);
        }
        let _ = writeln!(s, "elements {}", self.elements.len());
        for (i, el) in self.elements.iter().enumerate() {
            let _ = writeln!(s, "{i} marker={} {:?}", self.element_markers[i], el);
        }
        let _ = writeln!(s, "facets {}", self.facets.len());
        for (i, f) in self.facets.iter().enumerate() {
            let _ = writeln!(
                s,
                "{i} marker={} {:?} {:?}",
                f.marker, f.vertices, f.elements
            );
        }
        s
    }
}

/// Structured `nx` x `ny` quadrilateral grid on the box `[lower, upper]`.
/// Boundary markers: 0 left, 1 right, 2 bottom, 3 top.
pub fn build_structured_quad(nx: usize, ny: usize, lower: Vec3, upper: Vec3) -> Result<Mesh> {
    let (vertices, _) = structured_vertices(nx, ny, lower, upper)?;
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            elements.push(vec![
                idx(i, j),
                idx(i + 1, j),
                idx(i + 1, j + 1),
                idx(i, j + 1),
            ]);
        }
    }
    let mut mesh = Mesh::new(2, 2, vertices, elements, vec![0; nx * ny])?;
    mark_box_sides(&mut mesh, lower, upper);
    Ok(mesh)
}

/// Structured triangle grid: each cell of the quad grid split along its
/// lower-left to upper-right diagonal.
pub fn build_structured_triangles(nx: usize, ny: usize, lower: Vec3, upper: Vec3) -> Result<Mesh> {
    let (vertices, _) = structured_vertices(nx, ny, lower, upper)?;
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut elements = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            elements.push(vec![idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            elements.push(vec![idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    let n = elements.len();
    let mut mesh = Mesh::new(2, 2, vertices, elements, vec![0; n])?;
    mark_box_sides(&mut mesh, lower, upper);
    Ok(mesh)
}

fn structured_vertices(nx: usize, ny: usize, lower: Vec3, upper: Vec3) -> Result<(Vec<Vec3>, f64)> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(format!(
            "structured grid needs at least one cell per direction, got {nx}x{ny}"
        )));
    }
    if !(upper.x > lower.x && upper.y > lower.y) {
        return Err(Error::InvalidArgument(format!(
            "degenerate extent {lower:?} .. {upper:?}"
        )));
    }
    let hx = (upper.x - lower.x) / nx as f64;
    let hy = (upper.y - lower.y) / ny as f64;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = if i == nx {
                upper.x
            } else {
                lower.x + i as f64 * hx
            };
            let y = if j == ny {
                upper.y
            } else {
                lower.y + j as f64 * hy
            };
            vertices.push(Vec3::xy(x, y));
        }
    }
    Ok((vertices, hx.min(hy)))
}

fn mark_box_sides(mesh: &mut Mesh, lower: Vec3, upper: Vec3) {
    let tol = 1e-10 * (upper - lower).norm();
    mesh.mark_boundary(|c| {
        if (c.x - lower.x).abs() < tol {
            MARKER_LEFT
        } else if (c.x - upper.x).abs() < tol {
            MARKER_RIGHT
        } else if (c.y - lower.y).abs() < tol {
            MARKER_BOTTOM
        } else {
            MARKER_TOP
        }
    });
}

/// A 1D network mesh with optional per-segment radius and aperture.
#[derive(Clone, Debug)]
pub struct SegmentNetwork {
    pub mesh: Mesh,
    pub radius: Option<Vec<f64>>,
    pub aperture: Option<Vec<f64>>,
}

impl SegmentNetwork {
    pub fn from_mesh(mesh: Mesh) -> Result<Self> {
        if mesh.dim_grid() != 1 {
            return Err(Error::InvalidMesh("segment network needs a 1D grid".into()));
        }
        Ok(SegmentNetwork {
            mesh,
            radius: None,
            aperture: None,
        })
    }

    pub fn with_aperture(mut self, aperture: f64) -> Result<Self> {
        if aperture <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "aperture {aperture} must be positive"
            )));
        }
        self.aperture = Some(vec![aperture; self.mesh.num_elements()]);
        Ok(self)
    }

    pub fn num_segments(&self) -> usize {
        self.mesh.num_elements()
    }

    pub fn segment_length(&self, s: usize) -> f64 {
        self.mesh.element_measure(s)
    }

    pub fn total_length(&self) -> f64 {
        self.mesh.total_measure()
    }

    /// Number of segments meeting at a vertex.
    pub fn degree(&self, vertex: usize) -> usize {
        self.mesh.vertex_elements(vertex).len()
    }

    pub fn radius(&self, s: usize) -> Option<f64> {
        self.radius.as_ref().map(|r| r[s])
    }
}

/// Builds a segment network. The world dimension is 3 if any point has a
/// nonzero z component, 2 otherwise.
pub fn build_segment_network(
    points: &[Vec3],
    segments: &[[usize; 2]],
    radii: &[f64],
) -> Result<SegmentNetwork> {
    if radii.len() != segments.len() {
        return Err(Error::LengthMismatch {
            what: "segment radii",
            expected: segments.len(),
            got: radii.len(),
        });
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::InvalidArgument(format!("nonpositive radius {r}")));
    }
    for (s, seg) in segments.iter().enumerate() {
        for &v in seg {
            if v >= points.len() {
                return Err(Error::OutOfRange {
                    what: "network point",
                    index: v,
                    len: points.len(),
                });
            }
        }
        if points[seg[0]].distance(points[seg[1]]) == 0.0 {
            return Err(Error::DegenerateGeometry(format!(
                "segment {s} has zero length"
            )));
        }
    }
    let dim_world = if points.iter().any(|p| p.z != 0.0) {
        3
    } else {
        2
    };
    let elements = segments.iter().map(|s| vec![s[0], s[1]]).collect();
    let mesh = Mesh::new(
        dim_world,
        1,
        points.to_vec(),
        elements,
        vec![0; segments.len()],
    )?;
    Ok(SegmentNetwork {
        mesh,
        radius: Some(radii.to_vec()),
        aperture: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> (Vec3, Vec3) {
        (Vec3::xy(0.0, 0.0), Vec3::xy(1.0, 1.0))
    }

    /// Counts distinct undirected edges by brute force.
    fn brute_force_edge_count(mesh: &Mesh) -> usize {
        let mut edges = Vec::new();
        for el in mesh.elements() {
            for i in 0..el.len() {
                let (a, b) = (el[i], el[(i + 1) % el.len()]);
                let e = (a.min(b), a.max(b));
                if !edges.contains(&e) {
                    edges.push(e);
                }
            }
        }
        edges.len()
    }

    #[test]
    fn smallest_structured_grid() {
        let (lo, hi) = unit();
        let m = build_structured_quad(1, 1, lo, hi).unwrap();
        assert_eq!(m.num_elements(), 1);
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.facets().iter().filter(|f| f.is_boundary()).count(), 4);
        let markers: Vec<i32> = m
            .element_facets(0)
            .iter()
            .map(|&f| m.facet(f).marker)
            .collect();
        assert_eq!(
            markers,
            vec![MARKER_BOTTOM, MARKER_RIGHT, MARKER_TOP, MARKER_LEFT]
        );
    }

    #[test]
    fn two_cells_share_one_facet() {
        let (lo, hi) = unit();
        let m = build_structured_quad(2, 1, lo, hi).unwrap();
        let interior: Vec<&Facet> = m.facets().iter().filter(|f| !f.is_boundary()).collect();
        assert_eq!(interior.len(), 1);
        assert_eq!(interior[0].elements, vec![0, 1]);
        assert_eq!(interior[0].inside(), 0);
        assert_eq!(interior[0].outside(), Some(1));
    }

    #[test]
    fn facet_count_matches_enumeration() {
        let (lo, hi) = unit();
        let m = build_structured_quad(4, 4, lo, hi).unwrap();
        assert_eq!(m.num_elements(), 16);
        assert_eq!(brute_force_edge_count(&m), 40);
        assert_eq!(m.num_facets(), 40);
        let t = build_structured_triangles(3, 2, lo, hi).unwrap();
        assert_eq!(t.num_facets(), brute_force_edge_count(&t));
    }

    #[test]
    fn structured_measure_and_facet_completeness() {
        let m = build_structured_quad(5, 3, Vec3::xy(-1.0, 2.0), Vec3::xy(2.0, 4.5)).unwrap();
        assert!((m.total_measure() - 7.5).abs() < 1e-12);
        for e in 0..m.num_elements() {
            assert_eq!(m.element_facets(e).len(), m.element(e).len());
        }
        for f in m.facets() {
            assert!(f.elements.len() == 1 || f.elements.len() == 2);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let (lo, hi) = unit();
        assert!(build_structured_quad(0, 3, lo, hi).is_err());
        assert!(build_structured_quad(2, 2, hi, lo).is_err());
        let r = Mesh::new(2, 2, vec![Vec3::ZERO; 3], vec![vec![0, 1, 7]], vec![0]);
        assert!(matches!(r, Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn clockwise_elements_are_reoriented() {
        let v = vec![Vec3::xy(0.0, 0.0), Vec3::xy(1.0, 0.0), Vec3::xy(0.0, 1.0)];
        let m = Mesh::new(2, 2, v, vec![vec![0, 2, 1]], vec![0]).unwrap();
        assert!(m.element_measure(0) > 0.0);
    }

    #[test]
    fn segment_network_basics() {
        let n = build_segment_network(
            &[Vec3::xy(0.0, 0.0), Vec3::xy(3.0, 4.0)],
            &[[0, 1]],
            &[1e-3],
        )
        .unwrap();
        assert_eq!(n.segment_length(0), 5.0);
        assert_eq!(n.mesh.dim_world(), 2);

        let y = build_segment_network(
            &[
                Vec3::xy(0.0, 0.0),
                Vec3::xy(0.0, 1.0),
                Vec3::xy(-1.0, 2.0),
                Vec3::xy(1.0, 2.0),
            ],
            &[[0, 1], [1, 2], [1, 3]],
            &[1e-3; 3],
        )
        .unwrap();
        assert_eq!(y.degree(1), 3);
        let junction = y
            .mesh
            .facets()
            .iter()
            .find(|f| f.vertices == vec![1])
            .unwrap();
        assert_eq!(junction.elements, vec![0, 1, 2]);

        let pts: Vec<Vec3> = (0..=10).map(|i| Vec3::new(i as f64, 0.0, 1.0)).collect();
        let segs: Vec<[usize; 2]> = (0..10).map(|i| [i, i + 1]).collect();
        let chain = build_segment_network(&pts, &segs, &[0.1; 10]).unwrap();
        assert_eq!(chain.mesh.dim_world(), 3);
        let oracle: f64 = segs.iter().map(|s| pts[s[0]].distance(pts[s[1]])).sum();
        assert!((chain.total_length() - oracle).abs() < 1e-12);
        assert!((chain.total_length() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn segment_network_errors() {
        let p = [Vec3::xy(0.0, 0.0), Vec3::xy(0.0, 0.0), Vec3::xy(1.0, 0.0)];
        assert!(matches!(
            build_segment_network(&p, &[[0, 1]], &[1.0]),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(build_segment_network(&p, &[[0, 2]], &[0.0]).is_err());
        assert!(build_segment_network(&p, &[[0, 5]], &[1.0]).is_err());
    }

    #[test]
    fn displaced_mesh_keeps_markers_and_boundary() {
        let (lo, hi) = unit();
        let m = build_structured_quad(4, 4, lo, hi).unwrap();
        let d = m
            .displace_interior_vertices(|_, _| Vec3::xy(0.05, -0.03))
            .unwrap();
        assert!((d.total_measure() - 1.0).abs() < 1e-12);
        for f in 0..m.num_facets() {
            assert_eq!(m.facet(f).marker, d.facet(f).marker);
        }
        assert_ne!(m.vertex(6), d.vertex(6));
        assert_eq!(m.vertex(0), d.vertex(0));
    }
}

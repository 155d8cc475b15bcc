use std::fmt::Write as _;

use super::bvh::BvhTree;
use crate::error::{Error, Result};
use crate::fvgeom::{GridGeometry, Scheme};
use crate::geometry::{Aabb, Vec3};
use crate::mesh::Mesh;

/// One clipped piece of a low-dimensional segment inside bulk elements.
/// Pieces shared by several bulk elements (a segment on a facet) appear
/// once with all of them as targets.
#[derive(Clone, Debug, PartialEq)]
pub struct Intersection {
    pub domain_element: usize,
    /// Sorted bulk elements.
    pub targets: Vec<usize>,
    pub a: Vec3,
    pub b: Vec3,
}

impl Intersection {
    pub fn measure(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn midpoint(&self) -> Vec3 {
        self.a.midpoint(self.b)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Glue {
    pub intersections: Vec<Intersection>,
    /// Segments not fully covered by the bulk, with the missing length.
    pub uncovered: Vec<(usize, f64)>,
}

impl Glue {
    pub fn is_empty(&self) -> bool {
        self.intersections.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intersections.len()
    }

    pub fn total_measure(&self) -> f64 {
        self.intersections.iter().map(Intersection::measure).sum()
    }

    /// Point/line VTK dump of the intersection pieces with their number of
    /// targets as cell data.
    pub fn to_vtk(&self) -> String {
        let n = self.intersections.len();
        let mut s =
            String::from("# vtk DataFile Version 3.0\nglue\nASCII\nDATASET UNSTRUCTURED_GRID\n");
        let _ = writeln!(s, "POINTS {} double", 2 * n);
        for is in &self.intersections {
            for p in [is.a, is.b] {
                let _ = writeln!(s, "{:.12e} {:.12e} {:.12e}", p.x, p.y, p.z);
            }
        }
        let _ = writeln!(s, "CELLS {} {}", n, 3 * n);
        for i in 0..n {
            let _ = writeln!(s, "2 {} {}", 2 * i, 2 * i + 1);
        }
        let _ = writeln!(s, "CELL_TYPES {n}");
        for _ in 0..n {
            s.push_str("3\n");
        }
        let _ = writeln!(
            s,
            "CELL_DATA {n}\nSCALARS num_targets int 1\nLOOKUP_TABLE default"
        );
        for is in &self.intersections {
            let _ = writeln!(s, "{}", is.targets.len());
        }
        s
    }
}

/// Parameter range of segment `a -> b` inside a convex counter-clockwise
/// polygon (Cyrus-Beck).
pub fn clip_segment(a: Vec3, b: Vec3, polygon: &[Vec3]) -> Option<(f64, f64)> {
    let d = b - a;
    let len = d.norm();
    let scale = polygon
        .iter()
        .fold(len, |m, p| m.max(p.distance(polygon[0])))
        .max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for i in 0..polygon.len() {
        let v = polygon[i];
        let w = polygon[(i + 1) % polygon.len()];
        let n = (w - v).perp_cw().normalized();
        let num = n.dot(a - v);
        let den = n.dot(d);
        if den.abs() <= 1e-14 * len {
            if num > tol {
                return None;
            }
            continue;
        }
        let t = -num / den;
        if den < 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
        if lo > hi {
            return None;
        }
    }
    if (hi - lo) * len > tol {
        Some((lo, hi))
    } else {
        None
    }
}

#[derive(Clone, Copy)]
enum Candidates<'a> {
    Tree(&'a BvhTree),
    All,
}

fn check_dimensions(low: &Mesh, bulk: &Mesh) -> Result<()> {
    if low.dim_grid() != 1 || bulk.dim_grid() != 2 {
        return Err(Error::InvalidArgument(format!(
            "glue needs a segment network and a 2D bulk grid, got {}D and {}D",
            low.dim_grid(),
            bulk.dim_grid()
        )));
    }
    if bulk.dim_world() != 2 || low.vertices().iter().any(|v| v.z != 0.0) {
        return Err(Error::InvalidArgument(
            "glue requires both grids in the same two-dimensional world".into(),
        ));
    }
    Ok(())
}

fn glue_with(low: &Mesh, bulk: &Mesh, cand: Candidates) -> Result<Glue> {
    check_dimensions(low, bulk)?;
    let polys: Vec<Vec<Vec3>> = (0..bulk.num_elements())
        .map(|e| bulk.element_points(e))
        .collect();
    let mut glue = Glue::default();
    for s in 0..low.num_elements() {
        let seg = low.element(s);
        let (a, b) = (low.vertex(seg[0]), low.vertex(seg[1]));
        let len = a.distance(b);
        let elements = match cand {
            Candidates::Tree(t) => t.query(&Aabb::from_points(&[a, b]).inflated(1e-10 * len)),
            Candidates::All => (0..bulk.num_elements()).collect(),
        };
        // (t_lo, t_hi, targets)
        let mut pieces: Vec<(f64, f64, Vec<usize>)> = Vec::new();
        for e in elements {
            if let Some((lo, hi)) = clip_segment(a, b, &polys[e]) {
                let tol = 1e-12;
                match pieces
                    .iter_mut()
                    .find(|p| (p.0 - lo).abs() <= tol && (p.1 - hi).abs() <= tol)
                {
                    Some(p) => p.2.push(e),
                    None => pieces.push((lo, hi, vec![e])),
                }
            }
        }
        pieces.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
        let mut covered = 0.0;
        for (lo, hi, mut targets) in pieces {
            targets.sort_unstable();
            covered += (hi - lo) * len;
            glue.intersections.push(Intersection {
                domain_element: s,
                targets,
                a: a + (b - a) * lo,
                b: a + (b - a) * hi,
            });
        }
        if len - covered > 1e-10 * len {
            glue.uncovered.push((s, len - covered));
        }
    }
    Ok(glue)
}

/// Intersections of a segment network with a 2D bulk grid, candidates from
/// a bounding-box hierarchy.
pub fn glue_meshes(low: &Mesh, bulk: &Mesh) -> Result<Glue> {
    let tree = BvhTree::from_mesh(bulk);
    glue_with(low, bulk, Candidates::Tree(&tree))
}

/// Same as [`glue_meshes`] testing every bulk element.
pub fn glue_brute_force(low: &Mesh, bulk: &Mesh) -> Result<Glue> {
    glue_with(low, bulk, Candidates::All)
}

pub fn glue(low: &GridGeometry, bulk: &GridGeometry) -> Result<Glue> {
    glue_meshes(low.mesh(), bulk.mesh())
}

/// Per-element sorted dof lists of the other domain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CouplingStencils {
    /// Indexed by low-dimensional element: bulk dofs.
    pub low_to_bulk: Vec<Vec<usize>>,
    /// Indexed by bulk element: low-dimensional dofs.
    pub bulk_to_low: Vec<Vec<usize>>,
}

fn element_dofs(gg: &GridGeometry, e: usize) -> Vec<usize> {
    match gg.scheme() {
        Scheme::Tpfa => vec![e],
        Scheme::Box => gg.mesh().element(e).to_vec(),
    }
}

pub fn coupling_stencils_from_glue(
    glue: &Glue,
    low: &GridGeometry,
    bulk: &GridGeometry,
) -> CouplingStencils {
    let mut st = CouplingStencils {
        low_to_bulk: vec![Vec::new(); low.num_elements()],
        bulk_to_low: vec![Vec::new(); bulk.num_elements()],
    };
    for is in &glue.intersections {
        let s = is.domain_element;
        for &t in &is.targets {
            st.low_to_bulk[s].extend(element_dofs(bulk, t));
            st.bulk_to_low[t].extend(element_dofs(low, s));
        }
    }
    for v in st.low_to_bulk.iter_mut().chain(st.bulk_to_low.iter_mut()) {
        v.sort_unstable();
        v.dedup();
    }
    st
}

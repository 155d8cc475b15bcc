//! Legacy ASCII VTK output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fvgeom::{GridGeometry, Scheme};
use crate::mesh::{ElementKind, Mesh};

/// A named per-dof scalar field.
#[derive(Clone, Debug)]
pub struct Field {
    pub name: String,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Field {
            name: name.into(),
            values,
        }
    }
}

/// Splits an interleaved solution vector into one field per equation.
pub fn split_fields(names: &[&str], u: &[f64]) -> Vec<Field> {
    let neq = names.len();
    names
        .iter()
        .enumerate()
        .map(|(k, n)| Field::new(*n, u.iter().skip(k).step_by(neq).copied().collect()))
        .collect()
}

fn cell_type(kind: ElementKind) -> u8 {
    match kind {
        ElementKind::Segment => 3,
        ElementKind::Triangle => 5,
        ElementKind::Quadrilateral => 9,
    }
}

fn write_mesh(s: &mut String, mesh: &Mesh) {
    let _ = writeln!(s, "POINTS {} double", mesh.num_vertices());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:e} {:e} {:e}", v.x, v.y, v.z);
    }
    let size: usize = mesh.elements().iter().map(|e| e.len() + 1).sum();
    let _ = writeln!(s, "CELLS {} {}", mesh.num_elements(), size);
    for el in mesh.elements() {
        let _ = write!(s, "{}", el.len());
        for v in el {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {}", mesh.num_elements());
    for e in 0..mesh.num_elements() {
        let _ = writeln!(s, "{}", cell_type(mesh.element_kind(e)));
    }
}

/// Renders the grid with its dof fields: cell data for TPFA, point data
/// for box.
pub fn vtk_string(gg: &GridGeometry, fields: &[Field], title: &str) -> Result<String> {
    let n = gg.num_dofs();
    for f in fields {
        if f.values.len() != n {
            return Err(Error::LengthMismatch {
                what: "output field",
                expected: n,
                got: f.values.len(),
            });
        }
    }
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    let _ = writeln!(s, "{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    write_mesh(&mut s, gg.mesh());
    if !fields.is_empty() {
        let section = match gg.scheme() {
            Scheme::Tpfa => "CELL_DATA",
            Scheme::Box => "POINT_DATA",
        };
        let _ = writeln!(s, "{section} {n}");
        for f in fields {
            let name: String = f
                .name
                .chars()
                .map(|c| if c.is_whitespace() { '_' } else { c })
                .collect();
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in &f.values {
                let _ = writeln!(s, "{v:e}");
            }
        }
    }
    Ok(s)
}

pub fn write_vtk(gg: &GridGeometry, fields: &[Field], path: impl AsRef<Path>) -> Result<()> {
    let text = vtk_string(gg, fields, "fervor output")?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Numbered VTK files `<dir>/<name>_<step>.vtk`.
#[derive(Debug)]
pub struct OutputSeries {
    dir: PathBuf,
    name: String,
    step: usize,
}

impl OutputSeries {
    pub fn new(dir: impl Into<PathBuf>, name: impl Into<String>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(OutputSeries {
            dir,
            name: name.into(),
            step: 0,
        })
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn write(&mut self, gg: &GridGeometry, fields: &[Field]) -> Result<PathBuf> {
        let path = self.dir.join(format!("{}_{}.vtk", self.name, self.step));
        write_vtk(gg, fields, &path)?;
        self.step += 1;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fvgeom::build_geometry;
    use crate::geometry::Vec3;
    use crate::mesh::{build_segment_network, build_structured_quad};
    use std::sync::Arc;

    fn grid(n: usize, scheme: Scheme) -> GridGeometry {
        let m = build_structured_quad(n, n, Vec3::xy(0.0, 0.0), Vec3::xy(1.0, 1.0)).unwrap();
        build_geometry(Arc::new(m), scheme).unwrap()
    }

    #[test]
    fn cell_and_point_sections() {
        let s = vtk_string(&grid(1, Scheme::Tpfa), &[Field::new("p", vec![1.0])], "t").unwrap();
        assert!(s.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(s.contains("DATASET UNSTRUCTURED_GRID"));
        assert!(s.contains("CELLS 1 5\n"));
        assert!(s.contains("CELL_DATA 1\n"));
        let s = vtk_string(&grid(2, Scheme::Box), &[Field::new("p", vec![0.0; 9])], "t").unwrap();
        assert!(s.contains("POINT_DATA 9\n"));
        assert!(vtk_string(&grid(2, Scheme::Box), &[Field::new("p", vec![0.0; 4])], "t").is_err());
    }

    #[test]
    fn network_as_lines() {
        let net = build_segment_network(
            &[Vec3::xy(0.0, 0.0), Vec3::xy(1.0, 0.0), Vec3::xy(1.0, 1.0)],
            &[[0, 1], [1, 2]],
            &[1e-3, 1e-3],
        )
        .unwrap();
        let gg = build_geometry(Arc::new(net.mesh), Scheme::Tpfa).unwrap();
        let s = vtk_string(&gg, &[], "net").unwrap();
        assert!(s.contains("CELL_TYPES 2\n3\n3\n"));
    }

    #[test]
    fn coordinates_round_trip() {
        let m = build_structured_quad(3, 2, Vec3::xy(0.1, -0.3), Vec3::xy(1.0 / 3.0, 2.7)).unwrap();
        let gg = build_geometry(Arc::new(m), Scheme::Tpfa).unwrap();
        let s = vtk_string(&gg, &[], "c").unwrap();
        let lines: Vec<&str> = s.lines().collect();
        let start = lines.iter().position(|l| l.starts_with("POINTS")).unwrap() + 1;
        for (i, v) in gg.mesh().vertices().iter().enumerate() {
            let xyz: Vec<f64> = lines[start + i]
                .split(' ')
                .map(|t| t.parse().unwrap())
                .collect();
            for (a, b) in xyz.iter().zip([v.x, v.y, v.z]) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn series_numbering() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputSeries::new(dir.path(), "run").unwrap();
        let gg = grid(2, Scheme::Tpfa);
        let fields = split_fields(&["a", "b"], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert_eq!(fields[1].values, vec![2.0, 4.0, 6.0, 8.0]);
        let p0 = out.write(&gg, &fields).unwrap();
        let p1 = out.write(&gg, &fields).unwrap();
        assert!(p0.ends_with("run_0.vtk") && p1.ends_with("run_1.vtk"));
        assert!(std::fs::read_to_string(p1)
            .unwrap()
            .contains("SCALARS b double 1"));
        assert!(write_vtk(&gg, &[], dir.path().join("missing/dir/x.vtk")).is_err());
    }
}

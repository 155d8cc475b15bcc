//! Gmsh MSH 2.2 ASCII subset: nodes, and elements of type 1 (line),
//! 2 (triangle), 3 (quadrangle) and 15 (point, ignored).

use std::collections::HashMap;
use std::fmt::Write;

use super::{Mesh, SegmentNetwork};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Content of a mixed-dimensional MSH file.
///
/// Lines lying on boundary facets of the bulk grid become boundary markers.
/// All other lines form the network; for each network element the matching
/// bulk facet (conforming case) is recorded.
#[derive(Clone, Debug)]
pub struct MshMesh {
    pub bulk: Option<Mesh>,
    pub network: Option<SegmentNetwork>,
    /// Bulk vertex index of every network vertex.
    pub network_vertex_to_bulk: Vec<usize>,
    /// Bulk facet coinciding with each network element, if any.
    pub network_element_to_facet: Vec<Option<usize>>,
}

impl MshMesh {
    /// Splits `lines` (pairs of bulk vertex indices with a physical tag)
    /// into boundary markers and a network, as the reader does.
    pub fn from_bulk_and_lines(mut bulk: Mesh, lines: &[([usize; 2], i32)]) -> Result<MshMesh> {
        let points = bulk.vertices().to_vec();
        let mut facet_of: HashMap<(usize, usize), usize> = HashMap::new();
        for (f, facet) in bulk.facets().iter().enumerate() {
            let (a, b) = (facet.vertices[0], facet.vertices[1]);
            facet_of.insert((a.min(b), a.max(b)), f);
        }
        let mut network_lines = Vec::new();
        for &([a, b], tag) in lines {
            if a >= points.len() || b >= points.len() {
                return Err(Error::InvalidMesh(format!(
                    "line references missing vertex {}",
                    a.max(b)
                )));
            }
            match facet_of.get(&(a.min(b), a.max(b))) {
                Some(&f) if bulk.facet(f).is_boundary() => bulk.set_facet_marker(f, tag),
                found => network_lines.push(([a, b], tag, found.copied())),
            }
        }
        let (network, map, facets) = build_network(&points, &network_lines)?;
        Ok(MshMesh {
            bulk: Some(bulk),
            network,
            network_vertex_to_bulk: map,
            network_element_to_facet: facets,
        })
    }
}

type NetworkLine = ([usize; 2], i32, Option<usize>);
type NetworkParts = (Option<SegmentNetwork>, Vec<usize>, Vec<Option<usize>>);

fn build_network(points: &[Vec3], lines: &[NetworkLine]) -> Result<NetworkParts> {
    if lines.is_empty() {
        return Ok((None, Vec::new(), Vec::new()));
    }
    let mut local: HashMap<usize, usize> = HashMap::new();
    let mut map = Vec::new();
    let mut elements = Vec::with_capacity(lines.len());
    let mut markers = Vec::with_capacity(lines.len());
    for (verts, tag, _) in lines {
        let mut el = Vec::with_capacity(2);
        for &v in verts {
            let id = *local.entry(v).or_insert_with(|| {
                map.push(v);
                map.len() - 1
            });
            el.push(id);
        }
        elements.push(el);
        markers.push(*tag);
    }
    let pts: Vec<Vec3> = map.iter().map(|&v| points[v]).collect();
    let dim_world = if pts.iter().any(|p| p.z != 0.0) { 3 } else { 2 };
    let mesh = Mesh::new(dim_world, 1, pts, elements, markers)?;
    let facets = lines.iter().map(|l| l.2).collect();
    Ok((Some(SegmentNetwork::from_mesh(mesh)?), map, facets))
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<&'a str> {
        for (i, l) in self.it.by_ref() {
            let t = l.trim();
            if !t.is_empty() {
                self.line = i + 1;
                return Some(t);
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<&'a str> {
        let line = self.line;
        self.next().ok_or_else(|| Error::MshParse {
            line,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::MshParse {
            line: self.line,
            msg: msg.into(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(lines: &Lines, tok: Option<&str>, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| lines.err(format!("invalid {what}")))
}

struct RawElement {
    kind: u32,
    tag: i32,
    nodes: Vec<usize>,
    line: usize,
}

/// Parses an MSH 2.2 ASCII file.
pub fn read_msh(text: &str) -> Result<MshMesh> {
    let mut lines = Lines {
        it: text.lines().enumerate(),
        line: 0,
    };
    let mut seen_format = false;
    let mut nodes: Option<(Vec<Vec3>, HashMap<usize, usize>)> = None;
    let mut raw: Option<Vec<RawElement>> = None;

    while let Some(header) = lines.next() {
        if !header.starts_with('$') || header.starts_with("$End") {
            return Err(lines.err(format!("malformed section header '{header}'")));
        }
        let name = &header[1..];
        match name {
            "MeshFormat" => {
                let l = lines.expect("format line")?;
                let mut tok = l.split_whitespace();
                let version = tok.next().unwrap_or("");
                let file_type = tok.next().unwrap_or("");
                if !version.starts_with("2.") {
                    return Err(lines.err(format!(
                        "MSH version {version} not supported, only 2.2 ASCII"
                    )));
                }
                if file_type != "0" {
                    return Err(lines.err("binary MSH files are not supported"));
                }
                seen_format = true;
            }
            "Nodes" => {
                let l = lines.expect("node count")?;
                let n: usize = parse_num(&lines, Some(l), "node count")?;
                let mut pts = Vec::with_capacity(n);
                let mut ids = HashMap::with_capacity(n);
                for _ in 0..n {
                    let l = lines.expect("node line")?;
                    let mut tok = l.split_whitespace();
                    let id: usize = parse_num(&lines, tok.next(), "node id")?;
                    let mut c = [0.0; 3];
                    for v in c.iter_mut() {
                        *v = parse_num(&lines, tok.next(), "node coordinate")?;
                    }
                    if ids.insert(id, pts.len()).is_some() {
                        return Err(lines.err(format!("duplicate node id {id}")));
                    }
                    pts.push(Vec3::new(c[0], c[1], c[2]));
                }
                nodes = Some((pts, ids));
            }
            "Elements" => {
                let l = lines.expect("element count")?;
                let n: usize = parse_num(&lines, Some(l), "element count")?;
                let mut els = Vec::with_capacity(n);
                for _ in 0..n {
                    let l = lines.expect("element line")?;
                    let tok: Vec<&str> = l.split_whitespace().collect();
                    let _id: usize = parse_num(&lines, tok.first().copied(), "element id")?;
                    let kind: u32 = parse_num(&lines, tok.get(1).copied(), "element type")?;
                    let ntags: usize = parse_num(&lines, tok.get(2).copied(), "tag count")?;
                    let tag: i32 = if ntags > 0 {
                        parse_num(&lines, tok.get(3).copied(), "physical tag")?
                    } else {
                        0
                    };
                    let nn = match kind {
                        1 => 2,
                        2 => 3,
                        3 => 4,
                        15 => 1,
                        _ => {
                            return Err(Error::UnsupportedElement(format!(
                                "MSH element type {kind} on line {}",
                                lines.line
                            )))
                        }
                    };
                    let start = 3 + ntags;
                    if tok.len() != start + nn {
                        return Err(lines.err(format!(
                            "element of type {kind} needs {nn} nodes, found {}",
                            tok.len().saturating_sub(start)
                        )));
                    }
                    let mut el = Vec::with_capacity(nn);
                    for t in &tok[start..] {
                        el.push(parse_num(&lines, Some(t), "element node")?);
                    }
                    els.push(RawElement {
                        kind,
                        tag,
                        nodes: el,
                        line: lines.line,
                    });
                }
                raw = Some(els);
            }
            _ => {}
        }
        let end = format!("$End{name}");
        loop {
            let l = lines.expect(&end)?;
            if l == end {
                break;
            }
            if !matches!(name, "MeshFormat" | "Nodes" | "Elements") {
                continue;
            }
            return Err(lines.err(format!("expected '{end}', found '{l}'")));
        }
    }

    if !seen_format {
        return Err(Error::MshParse {
            line: 0,
            msg: "missing $MeshFormat section".into(),
        });
    }
    let (points, ids) = nodes.ok_or_else(|| Error::MshParse {
        line: 0,
        msg: "missing $Nodes section".into(),
    })?;
    let raw = raw.ok_or_else(|| Error::MshParse {
        line: 0,
        msg: "missing $Elements section".into(),
    })?;

    let mut bulk_elements = Vec::new();
    let mut bulk_markers = Vec::new();
    let mut line_elements = Vec::new();
    for el in &raw {
        let mut idx = Vec::with_capacity(el.nodes.len());
        for &n in &el.nodes {
            let v = *ids.get(&n).ok_or_else(|| Error::MshParse {
                line: el.line,
                msg: format!("element references undefined node {n}"),
            })?;
            idx.push(v);
        }
        match el.kind {
            2 | 3 => {
                bulk_elements.push(idx);
                bulk_markers.push(el.tag);
            }
            1 => line_elements.push(([idx[0], idx[1]], el.tag)),
            _ => {}
        }
    }
    let dim_world = if points.iter().any(|p| p.z != 0.0) {
        3
    } else {
        2
    };

    if bulk_elements.is_empty() {
        let lines: Vec<NetworkLine> = line_elements.iter().map(|&(v, t)| (v, t, None)).collect();
        let (network, map, facets) = build_network(&points, &lines)?;
        if network.is_none() {
            return Err(Error::InvalidMesh("MSH file contains no elements".into()));
        }
        return Ok(MshMesh {
            bulk: None,
            network,
            network_vertex_to_bulk: map,
            network_element_to_facet: facets,
        });
    }
    if dim_world != 2 {
        return Err(Error::InvalidMesh(
            "2D elements with nonzero z coordinates are not supported".into(),
        ));
    }
    let bulk = Mesh::new(2, 2, points, bulk_elements, bulk_markers)?;
    MshMesh::from_bulk_and_lines(bulk, &line_elements)
}

/// Writes an MSH 2.2 ASCII file. Boundary facets are written as lines
/// carrying their marker, followed by the network lines, so that
/// [`read_msh`] restores markers and coordinates exactly.
pub fn write_msh(m: &MshMesh) -> Result<String> {
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");

    let (points, net_map): (Vec<Vec3>, Vec<usize>) = match (&m.bulk, &m.network) {
        (Some(b), _) => (b.vertices().to_vec(), m.network_vertex_to_bulk.clone()),
        (None, Some(n)) => (
            n.mesh.vertices().to_vec(),
            (0..n.mesh.num_vertices()).collect(),
        ),
        (None, None) => return Err(Error::InvalidMesh("nothing to write".into())),
    };
    let _ = writeln!(s, "$Nodes\n{}", points.len());
    for (i, p) in points.iter().enumerate() {
        let _ = writeln!(s, "{} {:?} {:?} {:?}", i + 1, p.x, p.y, p.z);
    }
    s.push_str("$EndNodes\n");

    let mut body = String::new();
    let mut count = 0usize;
    let mut push = |kind: u32, tag: i32, verts: &[usize]| {
        count += 1;
        let _ = write!(body, "{count} {kind} 2 {tag} {tag}");
        for v in verts {
            let _ = write!(body, " {}", v + 1);
        }
        body.push('\n');
    };
    if let Some(b) = &m.bulk {
        for e in 0..b.num_elements() {
            let kind = if b.element(e).len() == 3 { 2 } else { 3 };
            push(kind, b.element_marker(e), b.element(e));
        }
        for f in b.facets().iter().filter(|f| f.is_boundary()) {
            push(1, f.marker, &f.vertices);
        }
    }
    if let Some(n) = &m.network {
        if net_map.len() != n.mesh.num_vertices() {
            return Err(Error::LengthMismatch {
                what: "network vertex map",
                expected: n.mesh.num_vertices(),
                got: net_map.len(),
            });
        }
        for e in 0..n.mesh.num_elements() {
            let verts: Vec<usize> = n.mesh.element(e).iter().map(|&v| net_map[v]).collect();
            push(1, n.mesh.element_marker(e), &verts);
        }
    }
    let _ = write!(s, "$Elements\n{count}\n{body}$EndElements\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_quad;

    const ONE_QUAD: &str = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n\
$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n\
$Elements\n1\n1 3 2 7 1 1 2 3 4\n$EndElements\n";

    const TWO_TRIANGLES: &str = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n\
$PhysicalNames\n1\n1 9 \"frac\"\n$EndPhysicalNames\n\
$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n\
$Elements\n4\n1 2 2 1 1 1 2 3\n2 2 2 1 1 1 3 4\n3 1 2 9 2 1 3\n4 15 2 5 5 1\n$EndElements\n";

    #[test]
    fn minimal_quad_file() {
        let m = read_msh(ONE_QUAD).unwrap();
        let b = m.bulk.unwrap();
        assert_eq!(b.num_elements(), 1);
        assert_eq!(b.element_marker(0), 7);
        assert!(m.network.is_none());
    }

    #[test]
    fn interior_line_becomes_network() {
        let m = read_msh(TWO_TRIANGLES).unwrap();
        let b = m.bulk.as_ref().unwrap();
        let n = m.network.as_ref().unwrap();
        assert_eq!(b.num_elements(), 2);
        assert_eq!(n.num_segments(), 1);
        assert_eq!(n.mesh.element_marker(0), 9);
        let f = m.network_element_to_facet[0].unwrap();
        assert_eq!(b.facet(f).elements, vec![0, 1]);
        // shared edge runs from (0,0) to (1,1)
        let a = n.mesh.vertex(n.mesh.element(0)[0]);
        let c = n.mesh.vertex(n.mesh.element(0)[1]);
        assert_eq!(a.to_array(), [0.0, 0.0, 0.0]);
        assert_eq!(c.to_array(), [1.0, 1.0, 0.0]);
        for (i, &bv) in m.network_vertex_to_bulk.iter().enumerate() {
            assert_eq!(n.mesh.vertex(i), b.vertex(bv));
        }
    }

    #[test]
    fn missing_nodes_section_is_named() {
        let text = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Elements\n0\n$EndElements\n";
        let err = read_msh(text).unwrap_err().to_string();
        assert!(err.contains("$Nodes"), "{err}");
    }

    #[test]
    fn rejects_other_formats_and_types() {
        let v4 = ONE_QUAD.replace("2.2 0 8", "4.1 0 8");
        assert!(read_msh(&v4).unwrap_err().to_string().contains("4.1"));
        let bin = ONE_QUAD.replace("2.2 0 8", "2.2 1 8");
        assert!(read_msh(&bin).unwrap_err().to_string().contains("binary"));
        let tet = ONE_QUAD.replace("1 3 2 7 1 1 2 3 4", "1 4 2 7 1 1 2 3 4");
        assert!(matches!(read_msh(&tet), Err(Error::UnsupportedElement(_))));
        let dangling = ONE_QUAD.replace("1 2 3 4\n$End", "1 2 3 8\n$End");
        assert!(read_msh(&dangling)
            .unwrap_err()
            .to_string()
            .contains("undefined node 8"));
        let bad = ONE_QUAD.replace("$EndNodes", "$EndNode");
        assert!(read_msh(&bad).is_err());
    }

    #[test]
    fn round_trip_markers_and_coordinates() {
        let mut b = build_structured_quad(3, 2, Vec3::xy(0.1, -0.3), Vec3::xy(1.7, 0.9)).unwrap();
        let d = b
            .displace_interior_vertices(|i, _| Vec3::xy(0.013 * i as f64, -0.007))
            .unwrap();
        b = d;
        let lines = vec![([1, 5], 11), ([5, 9], 11)];
        let m = MshMesh::from_bulk_and_lines(b, &lines).unwrap();
        let text = write_msh(&m).unwrap();
        assert!(text.starts_with("$MeshFormat\n2.2 0 8\n"));
        let r = read_msh(&text).unwrap();
        let (b0, b1) = (m.bulk.as_ref().unwrap(), r.bulk.as_ref().unwrap());
        assert_eq!(b0.dump(), b1.dump());
        let (n0, n1) = (m.network.as_ref().unwrap(), r.network.as_ref().unwrap());
        assert_eq!(n0.mesh.dump(), n1.mesh.dump());
        assert_eq!(m.network_vertex_to_bulk, r.network_vertex_to_bulk);
        assert_eq!(m.network_element_to_facet, r.network_element_to_facet);
    }
}

//! Wavefront OBJ subset: `v`, `vt`, triangular `f` records with 1-based
//! (or negative relative) indices. Normals, texture coordinates, groups and
//! materials are ignored on input.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use log::warn;

use super::{MeshError, TriMesh, Vec3};
use crate::param::PlanarParam;

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriMesh, MeshError> {
    read_obj(File::open(path)?)
}

pub fn read_obj<R: Read>(reader: R) -> Result<TriMesh, MeshError> {
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let parse_err = |msg: String| MeshError::Parse { line: lineno, msg };
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>().map_err(|e| parse_err(format!("bad coordinate {t:?}: {e}"))))
                    .collect::<Result<_, _>>()?;
                if coords.len() != 3 || coords.iter().any(|c| !c.is_finite()) {
                    return Err(parse_err("vertex needs three finite coordinates".into()));
                }
                positions.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(parse_err(format!("only triangles are supported, got {} vertices", refs.len())));
                }
                let mut tri = [0usize; 3];
                for (k, r) in refs.iter().enumerate() {
                    let idx = r.split('/').next().unwrap_or("");
                    let idx: i64 = idx.parse().map_err(|_| parse_err(format!("bad face index {r:?}")))?;
                    let n = positions.len() as i64;
                    let resolved = match idx {
                        0 => return Err(parse_err("face index 0 (OBJ indices are 1-based)".into())),
                        i if i > 0 => i - 1,
                        i => n + i,
                    };
                    if resolved < 0 {
                        return Err(parse_err(format!("face index {idx} out of range")));
                    }
                    tri[k] = resolved as usize;
                }
                triangles.push(tri);
            }
            _ => {}
        }
    }
    for (t, tri) in triangles.iter().enumerate() {
        if let Some(&v) = tri.iter().find(|&&v| v >= positions.len()) {
            return Err(MeshError::Parse {
                line: 0,
                msg: format!("face {} references vertex {} of {}", t + 1, v + 1, positions.len()),
            });
        }
    }

    // Drop vertices that no face references.
    let mut used = vec![false; positions.len()];
    for tri in &triangles {
        for &v in tri {
            used[v] = true;
        }
    }
    let isolated = used.iter().filter(|u| !**u).count();
    if isolated > 0 {
        warn!("dropping {isolated} isolated vertices");
        let mut remap = vec![usize::MAX; positions.len()];
        let mut kept = Vec::with_capacity(positions.len() - isolated);
        for (v, p) in positions.iter().enumerate() {
            if used[v] {
                remap[v] = kept.len();
                kept.push(*p);
            }
        }
        positions = kept;
        for tri in &mut triangles {
            for v in tri.iter_mut() {
                *v = remap[*v];
            }
        }
    }
    TriMesh::new(positions, triangles)
}

pub fn save_obj(mesh: &TriMesh, uv: Option<&PlanarParam>, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_obj(mesh, uv, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_obj<W: Write>(mesh: &TriMesh, uv: Option<&PlanarParam>, w: &mut W) -> Result<(), MeshError> {
    if let Some(uv) = uv {
        if uv.len() != mesh.num_vertices() {
            return Err(MeshError::LengthMismatch { got: uv.len(), expected: mesh.num_vertices() });
        }
    }
    for p in mesh.positions() {
        writeln!(w, "v {} {} {}", fmt_g6(p.x), fmt_g6(p.y), fmt_g6(p.z))?;
    }
    if let Some(uv) = uv {
        for t in uv.coords() {
            writeln!(w, "vt {} {}", fmt_g6(t.x), fmt_g6(t.y))?;
        }
    }
    for t in mesh.triangles() {
        let [a, b, c] = t.map(|v| v + 1);
        if uv.is_some() {
            writeln!(w, "f {a}/{a} {b}/{b} {c}/{c}")?;
        } else {
            writeln!(w, "f {a} {b} {c}")?;
        }
    }
    Ok(())
}

/// Formats like C's `%g`: six significant digits, trailing zeros removed.
pub fn fmt_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    const CUBE: &str = "\
# unit cube
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
vn 0 0 1
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 2 3 7
f 2 7 6
f 3 4 8
f 3 8 7
f 4 1 5
f 4 5 8
";

    #[test]
    fn reads_cube() {
        let m = read_obj(CUBE.as_bytes()).unwrap();
        assert_eq!(m.num_vertices(), 8);
        assert_eq!(m.num_triangles(), 12);
        assert_eq!(m.genus().unwrap(), 0);
    }

    #[test]
    fn zero_index_is_parse_error() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n";
        assert!(matches!(read_obj(src.as_bytes()), Err(MeshError::Parse { line: 4, .. })));
    }

    #[test]
    fn quads_and_garbage_are_rejected() {
        let quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        assert!(matches!(read_obj(quad.as_bytes()), Err(MeshError::Parse { .. })));
        let bad = "v 0 zero 0\n";
        assert!(matches!(read_obj(bad.as_bytes()), Err(MeshError::Parse { line: 1, .. })));
    }

    #[test]
    fn slashed_and_negative_indices() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nvt 0 0\n\
                   f 1/1 3/1 2/1\nf 1//1 2//1 4//1\nf -3/1/1 -2 -1\nf 1 4 3\n";
        let m = read_obj(src.as_bytes()).unwrap();
        assert_eq!(m.num_triangles(), 4);
        assert!(m.is_closed());
    }

    #[test]
    fn isolated_vertices_are_dropped() {
        let mut shifted = String::from("v 9 9 9\n");
        for line in CUBE.lines() {
            if let Some(rest) = line.strip_prefix("f ") {
                let idx: Vec<String> =
                    rest.split_whitespace().map(|i| (i.parse::<usize>().unwrap() + 1).to_string()).collect();
                shifted.push_str(&format!("f {}\n", idx.join(" ")));
            } else {
                shifted.push_str(line);
                shifted.push('\n');
            }
        }
        let m = read_obj(shifted.as_bytes()).unwrap();
        assert_eq!(m.num_vertices(), 8);
        assert!(m.positions().iter().all(|p| p.x <= 1.0));
    }

    #[test]
    fn non_manifold_input_is_rejected() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nv 0 -1 0\nf 1 2 3\nf 2 1 4\nf 2 1 5\n";
        assert!(matches!(read_obj(src.as_bytes()), Err(MeshError::NonManifoldEdge(0, 1))));
    }

    #[test]
    fn tetrahedron_line_counts() {
        let mut buf = Vec::new();
        write_obj(&shapes::tetrahedron(), None, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 4);
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 4);
    }

    #[test]
    fn cube_round_trip() {
        let m = shapes::subdivided_cube(3);
        let mut buf = Vec::new();
        write_obj(&m, None, &mut buf).unwrap();
        let back = read_obj(buf.as_slice()).unwrap();
        assert_eq!(back.triangles(), m.triangles());
        let err = m.positions().iter().zip(back.positions()).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
        assert!(err < 1e-6, "max position error {err}");
    }

    #[test]
    fn uv_records_match_vertex_count() {
        let tet = shapes::tetrahedron();
        let path = crate::cutgen::shortest_edge_path(&tet, 0, 1).unwrap();
        // Extend to a two-edge path so the cut opens the surface.
        let topo = crate::mesh::MeshTopology::new(&tet);
        let c = topo.neighbors(1).iter().copied().find(|&w| w != 0).unwrap();
        let mut vs = path.vertices.clone();
        vs.push(c);
        let disk = crate::mesh::cut_along(&tet, &crate::mesh::EdgePath::open(vs)).unwrap();
        let uv = crate::param::tutte_embed(&disk).unwrap();
        let mut buf = Vec::new();
        write_obj(&disk, Some(&uv), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("vt ")).count(), disk.num_vertices());
        assert_eq!(disk.num_vertices(), 5);
    }

    #[test]
    fn g6_formatting() {
        assert_eq!(fmt_g6(0.0), "0");
        assert_eq!(fmt_g6(1.0), "1");
        assert_eq!(fmt_g6(-0.5), "-0.5");
        assert_eq!(fmt_g6(0.123456789), "0.123457");
        assert_eq!(fmt_g6(123456.7), "123457");
        assert_eq!(fmt_g6(1234567.0), "1.23457e+06");
        assert_eq!(fmt_g6(0.00001234), "1.234e-05");
        assert_eq!(fmt_g6(0.0001234), "0.0001234");
    }
}

//! Plain-text mesh dump.
//!
//! ```text
//! V E T
//! x y flag        (V lines, flag = 1 on the boundary)
//! i j k           (T lines)
//! ```

use std::fmt::Write as _;

use kvflow_core::TriangleMesh;

use crate::error::{CliError, CliResult};

pub fn write_mesh(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {} {}", mesh.n_vertices(), mesh.n_edges(), mesh.n_triangles());
    for (v, &b) in mesh.vertices().iter().zip(mesh.boundary_vertex_flags()) {
        let _ = writeln!(s, "{:.17e} {:.17e} {}", v[0], v[1], u8::from(b));
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    s
}

fn parse_err(line: usize, what: &str) -> CliError {
    CliError::Config(format!("mesh line {line}: {what}"))
}

fn fields<T: std::str::FromStr>(line: &str, no: usize, count: usize) -> CliResult<Vec<T>> {
    let v: Vec<T> = line
        .split_whitespace()
        .map(|f| f.parse::<T>().map_err(|_| parse_err(no, "malformed number")))
        .collect::<CliResult<_>>()?;
    if v.len() != count {
        return Err(parse_err(no, &format!("expected {count} fields")));
    }
    Ok(v)
}

/// Parse a dump. The mesh size is the largest axis-aligned edge extent.
pub fn read_mesh(text: &str) -> CliResult<TriangleMesh> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (no, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let counts: Vec<usize> = fields(header, no + 1, 3)?;
    let (nv, ne, nt) = (counts[0], counts[1], counts[2]);
    let mut vertices = Vec::with_capacity(nv);
    let mut flags = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (no, l) = lines.next().ok_or_else(|| parse_err(0, "missing vertex line"))?;
        let f: Vec<f64> = fields(l, no + 1, 3)?;
        vertices.push([f[0], f[1]]);
        flags.push(f[2] != 0.0);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (no, l) = lines.next().ok_or_else(|| parse_err(0, "missing triangle line"))?;
        let f: Vec<usize> = fields(l, no + 1, 3)?;
        triangles.push([f[0], f[1], f[2]]);
    }
    if let Some((no, _)) = lines.next() {
        return Err(parse_err(no + 1, "trailing content"));
    }
    let mut h: f64 = 0.0;
    for t in &triangles {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            let (p, q) = (vertices.get(a), vertices.get(b));
            if let (Some(p), Some(q)) = (p, q) {
                h = h.max((p[0] - q[0]).abs().max((p[1] - q[1]).abs()));
            }
        }
    }
    let mesh = TriangleMesh::from_parts(vertices, triangles, h)?;
    if mesh.n_edges() != ne {
        return Err(CliError::Config(format!("header lists {ne} edges, mesh has {}", mesh.n_edges())));
    }
    if mesh.boundary_vertex_flags() != flags.as_slice() {
        return Err(CliError::Config("boundary flags do not match the mesh".into()));
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for n in [1, 3, 8] {
            let mesh = TriangleMesh::build_structured(n).unwrap();
            let text = write_mesh(&mesh);
            assert!(text.starts_with(&format!("{} {} {}\n", (n + 1) * (n + 1), mesh.n_edges(), 2 * n * n)));
            let back = read_mesh(&text).unwrap();
            assert_eq!(back.vertices(), mesh.vertices());
            assert_eq!(back.triangles(), mesh.triangles());
            assert!((back.h() - mesh.h()).abs() < 1e-15);
        }
    }

    #[test]
    fn malformed_input() {
        assert!(read_mesh("").is_err());
        assert!(read_mesh("1 0 0\n0 0\n").is_err());
        let mut text = write_mesh(&TriangleMesh::build_structured(1).unwrap());
        text = text.replacen("4 5 2", "4 6 2", 1);
        assert!(read_mesh(&text).is_err());
    }
}

//! Whitespace-separated text mesh format.
//!
//! Line 1: `nv nt nh`. Then `nv` lines `x y z`, `nt` lines of 4 zero-based
//! vertex indices, `nh` lines of 8 indices in the reference hexahedron
//! ordering (faces follow from the fixed template).

use std::fmt::Write as _;
use std::path::Path;

use super::{HybridMesh, MeshError};

pub fn write_mesh_string(mesh: &HybridMesh) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {}",
        mesh.n_vertices(),
        mesh.tets.len(),
        mesh.hexes.len()
    );
    for v in &mesh.vertices {
        let _ = writeln!(out, "{} {} {}", v[0], v[1], v[2]);
    }
    for t in &mesh.tets {
        let _ = writeln!(out, "{} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    for h in &mesh.hexes {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7]
        );
    }
    out
}

pub fn write_mesh(path: &Path, mesh: &HybridMesh) -> std::io::Result<()> {
    std::fs::write(path, write_mesh_string(mesh))
}

pub fn read_mesh(path: &Path) -> Result<HybridMesh, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|e| MeshError::Parse {
        line: 0,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    read_mesh_str(&text)
}

pub fn read_mesh_str(text: &str) -> Result<HybridMesh, MeshError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut next_line = |what: &str| -> Result<(usize, &str), MeshError> {
        lines.next().map(|(i, l)| (i + 1, l)).ok_or(MeshError::Parse {
            line: 0,
            message: format!("unexpected end of file, expected {what}"),
        })
    };

    let (header_line, header) = next_line("header `nv nt nh`")?;
    let counts = parse_fields::<usize>(header, header_line, 3, "header `nv nt nh`")?;
    let (nv, nt, nh) = (counts[0], counts[1], counts[2]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = next_line("a vertex line `x y z`")?;
        let c = parse_fields::<f64>(l, ln, 3, "vertex coordinates `x y z`")?;
        vertices.push([c[0], c[1], c[2]]);
    }
    let mut tets = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = next_line("a tetrahedron line (4 indices)")?;
        let c = parse_fields::<usize>(l, ln, 4, "4 tetrahedron vertex indices")?;
        tets.push([c[0], c[1], c[2], c[3]]);
    }
    let mut hexes = Vec::with_capacity(nh);
    for _ in 0..nh {
        let (ln, l) = next_line("a hexahedron line (8 indices)")?;
        let c = parse_fields::<usize>(l, ln, 8, "8 hexahedron vertex indices")?;
        hexes.push([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]);
    }
    if let Some((i, _)) = lines.next() {
        return Err(MeshError::Parse {
            line: i + 1,
            message: "trailing content after the declared cells".into(),
        });
    }
    HybridMesh::new(vertices, tets, hexes)
}

fn parse_fields<T: std::str::FromStr>(
    line: &str,
    line_no: usize,
    expected: usize,
    what: &str,
) -> Result<Vec<T>, MeshError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != expected {
        return Err(MeshError::Parse {
            line: line_no,
            message: format!("expected {what}, found {} field(s)", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<T>().map_err(|_| MeshError::Parse {
                line: line_no,
                message: format!("cannot parse `{f}` in {what}"),
            })
        })
        .collect()
}

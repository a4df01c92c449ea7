//! Combinatorial hybrid hexahedral-tetrahedral mesh.
//!
//! A mesh stores vertices, tetrahedra (4 vertex indices) and hexahedra
//! (8 vertex indices in the reference ordering of [`crate::refelem`]; the 6
//! faces follow from [`crate::refelem::HEX_FACES`]). Connectivity is
//! restricted to conforming tet-tet and hex-hex contacts plus the one
//! supported non-conforming case: a hexahedron quad face covered by two
//! tetrahedron faces split along a quad diagonal.

mod interfaces;
mod io;
pub mod samples;
mod validate;

pub use interfaces::{
    build_interfaces, tet_edge_classification, BoundaryFace, EdgeInfo, EdgeLabel, InterfaceRecord,
    Interfaces, Junction, TetEdgeClassification,
};
pub use io::{read_mesh, read_mesh_str, write_mesh, write_mesh_string};
pub use validate::{validate_spec, ValidationReport, Violation};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::linalg::Vec3;
use crate::refelem::{HEX_EDGES, HEX_FACES, TET_FACES};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("{cell}: vertex index {index} out of range (mesh has {n_vertices} vertices)")]
    VertexIndexOutOfRange {
        cell: CellId,
        index: usize,
        n_vertices: usize,
    },
    #[error("{cell}: repeated vertex within the cell")]
    DegenerateCell { cell: CellId },
    #[error("mesh violates the supported connectivity rules ({violations} violation(s); first: {first})")]
    InvalidMesh { violations: usize, first: String },
    #[error("hex {hex}: quad face cannot be reduced to a single diagonal split")]
    AmbiguousJunction { hex: usize },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Identifies one cell of the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellId {
    Tet(usize),
    Hex(usize),
}

impl std::fmt::Display for CellId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CellId::Tet(i) => write!(f, "tet {i}"),
            CellId::Hex(i) => write!(f, "hex {i}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HybridMesh {
    pub vertices: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
    pub hexes: Vec<[usize; 8]>,
    /// Optional per-boundary-face tags keyed by the sorted face tuple;
    /// faces without an entry carry the default tag 1.
    pub boundary_tags: BTreeMap<Vec<usize>, u32>,
}

impl HybridMesh {
    /// Build a mesh, checking index ranges and intra-cell degeneracy.
    pub fn new(
        vertices: Vec<Vec3>,
        tets: Vec<[usize; 4]>,
        hexes: Vec<[usize; 8]>,
    ) -> Result<Self, MeshError> {
        let n = vertices.len();
        for (i, tet) in tets.iter().enumerate() {
            for &v in tet {
                if v >= n {
                    return Err(MeshError::VertexIndexOutOfRange {
                        cell: CellId::Tet(i),
                        index: v,
                        n_vertices: n,
                    });
                }
            }
            let mut s = *tet;
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(MeshError::DegenerateCell { cell: CellId::Tet(i) });
            }
        }
        for (i, hex) in hexes.iter().enumerate() {
            for &v in hex {
                if v >= n {
                    return Err(MeshError::VertexIndexOutOfRange {
                        cell: CellId::Hex(i),
                        index: v,
                        n_vertices: n,
                    });
                }
            }
            let mut s = *hex;
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(MeshError::DegenerateCell { cell: CellId::Hex(i) });
            }
        }
        Ok(HybridMesh {
            vertices,
            tets,
            hexes,
            boundary_tags: BTreeMap::new(),
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.tets.len() + self.hexes.len()
    }

    /// Flat cell index: tets first, then hexes.
    pub fn flat_index(&self, cell: CellId) -> usize {
        match cell {
            CellId::Tet(i) => i,
            CellId::Hex(i) => self.tets.len() + i,
        }
    }

    pub fn cell_from_flat(&self, flat: usize) -> CellId {
        if flat < self.tets.len() {
            CellId::Tet(flat)
        } else {
            CellId::Hex(flat - self.tets.len())
        }
    }

    pub fn cell_ids(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.tets.len())
            .map(CellId::Tet)
            .chain((0..self.hexes.len()).map(CellId::Hex))
    }

    pub fn cell_vertices(&self, cell: CellId) -> &[usize] {
        match cell {
            CellId::Tet(i) => &self.tets[i],
            CellId::Hex(i) => &self.hexes[i],
        }
    }

    /// Global vertex 4-tuples of a hex's faces, cyclic order from the template.
    pub fn hex_faces(&self, hex: usize) -> [[usize; 4]; 6] {
        let h = &self.hexes[hex];
        HEX_FACES.map(|f| f.map(|l| h[l]))
    }

    /// Global vertex pairs of a hex's 12 edges.
    pub fn hex_edges(&self, hex: usize) -> [[usize; 2]; 12] {
        let h = &self.hexes[hex];
        HEX_EDGES.map(|e| e.map(|l| h[l]))
    }

    /// Global vertex triples of a tet's faces (face k opposite local vertex k).
    pub fn tet_faces(&self, tet: usize) -> [[usize; 3]; 4] {
        let t = &self.tets[tet];
        TET_FACES.map(|f| f.map(|l| t[l]))
    }

    pub fn boundary_tag(&self, sorted_face: &[usize]) -> u32 {
        self.boundary_tags.get(sorted_face).copied().unwrap_or(1)
    }
}

/// Canonical (sorted) key of a triangular face.
pub(crate) fn tri_key(f: [usize; 3]) -> [usize; 3] {
    let mut k = f;
    k.sort_unstable();
    k
}

/// Canonical (sorted) key of a quadrilateral face.
pub(crate) fn quad_key(f: [usize; 4]) -> [usize; 4] {
    let mut k = f;
    k.sort_unstable();
    k
}

/// Canonical (sorted) key of an edge.
pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_rejects_bad_indices_and_degenerate_cells() {
        let verts = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(
            HybridMesh::new(verts.clone(), vec![[0, 1, 2, 4]], vec![]),
            Err(MeshError::VertexIndexOutOfRange { .. })
        ));
        assert!(matches!(
            HybridMesh::new(verts.clone(), vec![[0, 1, 2, 2]], vec![]),
            Err(MeshError::DegenerateCell { .. })
        ));
        assert!(HybridMesh::new(verts, vec![[0, 1, 2, 3]], vec![]).is_ok());
    }

    #[test]
    fn flat_indexing_round_trips() {
        let verts: Vec<_> = (0..12).map(|i| [i as f64, 0.0, 0.0]).collect();
        let mesh = HybridMesh::new(
            verts,
            vec![[0, 1, 2, 3], [4, 5, 6, 7]],
            vec![[0, 1, 2, 3, 4, 5, 6, 7]],
        )
        .unwrap();
        for cell in mesh.cell_ids() {
            assert_eq!(mesh.cell_from_flat(mesh.flat_index(cell)), cell);
        }
        assert_eq!(mesh.flat_index(CellId::Hex(0)), 2);
    }
}

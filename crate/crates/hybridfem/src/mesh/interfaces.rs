//! Interior interface classification and tetrahedron edge labeling.

use std::collections::{BTreeMap, BTreeSet};

use super::{edge_key, quad_key, tri_key, HybridMesh, MeshError};
use crate::refelem::TET_EDGES;

/// One interior interface of the mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InterfaceRecord {
    /// Two tetrahedra sharing a full triangular face (sorted vertex triple).
    TetTet { tets: [usize; 2], tri: [usize; 3] },
    /// Two hexahedra sharing a full quad face (cyclic order from `hexes[0]`).
    HexHex { hexes: [usize; 2], quad: [usize; 4] },
    /// A hexahedron face covered by two tetrahedron faces.
    HybridJunction(Junction),
}

/// A non-conforming hexahedron-tetrahedra junction: the quad face of `hex`
/// equals the union of one triangular face of each tetrahedron in `tets`,
/// split along `diagonal`. `tets[0]` owns the triangle
/// `{diagonal[0], diagonal[1], others[0]}` and `tets[1]` the one with
/// `others[1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Junction {
    pub hex: usize,
    pub tets: [usize; 2],
    /// Quad face vertices in cyclic order from the owning hex.
    pub quad: [usize; 4],
    /// The quad diagonal shared by both tetrahedron faces.
    pub diagonal: [usize; 2],
    /// The two quad vertices not on the diagonal, matched with `tets`.
    pub others: [usize; 2],
}

/// A boundary face (exactly one incident cell).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundaryFace {
    Tri { tri: [usize; 3], tet: usize },
    /// Cyclic order from the owning hex.
    Quad { quad: [usize; 4], hex: usize },
}

#[derive(Debug, Clone, Default)]
pub struct Interfaces {
    pub records: Vec<InterfaceRecord>,
    pub boundary: Vec<BoundaryFace>,
}

impl Interfaces {
    pub fn junctions(&self) -> impl Iterator<Item = &Junction> {
        self.records.iter().filter_map(|r| match r {
            InterfaceRecord::HybridJunction(j) => Some(j),
            _ => None,
        })
    }

    /// Number of interior mesh faces covered by the records; a junction
    /// accounts for its quad face and both triangular faces.
    pub fn interior_faces_covered(&self) -> usize {
        self.records
            .iter()
            .map(|r| match r {
                InterfaceRecord::HybridJunction(_) => 3,
                _ => 1,
            })
            .sum()
    }

    pub fn boundary_vertices(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for face in &self.boundary {
            match face {
                BoundaryFace::Tri { tri, .. } => out.extend(tri.iter().copied()),
                BoundaryFace::Quad { quad, .. } => out.extend(quad.iter().copied()),
            }
        }
        out
    }

    /// Edges lying inside a boundary face: all three edges of boundary
    /// triangles and the four cyclic edges of boundary quads (a quad diagonal
    /// is not on the face surface).
    pub fn boundary_edges(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for face in &self.boundary {
            match face {
                BoundaryFace::Tri { tri, .. } => {
                    out.insert(edge_key(tri[0], tri[1]));
                    out.insert(edge_key(tri[0], tri[2]));
                    out.insert(edge_key(tri[1], tri[2]));
                }
                BoundaryFace::Quad { quad, .. } => {
                    for i in 0..4 {
                        out.insert(edge_key(quad[i], quad[(i + 1) % 4]));
                    }
                }
            }
        }
        out
    }
}

/// Classify every interior face of a valid mesh. Junction records carry the
/// quad diagonal; boundary faces are collected separately.
pub fn build_interfaces(mesh: &HybridMesh) -> Result<Interfaces, MeshError> {
    let report = super::validate_spec(mesh);
    if !report.is_valid() {
        return Err(MeshError::InvalidMesh {
            violations: report.violations.len(),
            first: report.violations[0].to_string(),
        });
    }

    let mut tri_faces: BTreeMap<[usize; 3], Vec<usize>> = BTreeMap::new();
    for t in 0..mesh.tets.len() {
        for face in mesh.tet_faces(t) {
            tri_faces.entry(tri_key(face)).or_default().push(t);
        }
    }
    // Sorted quad key -> (cyclic order of first owner, owners).
    let mut quad_faces: BTreeMap<[usize; 4], ([usize; 4], Vec<usize>)> = BTreeMap::new();
    for h in 0..mesh.hexes.len() {
        for face in mesh.hex_faces(h) {
            quad_faces
                .entry(quad_key(face))
                .or_insert((face, Vec::new()))
                .1
                .push(h);
        }
    }

    let mut records = Vec::new();
    let mut boundary = Vec::new();
    let mut consumed_tris: BTreeSet<[usize; 3]> = BTreeSet::new();

    for (key, tets) in &tri_faces {
        if tets.len() == 2 {
            records.push(InterfaceRecord::TetTet {
                tets: [tets[0], tets[1]],
                tri: *key,
            });
            consumed_tris.insert(*key);
        }
    }

    for (cyclic, hexes) in quad_faces.values() {
        if hexes.len() == 2 {
            records.push(InterfaceRecord::HexHex {
                hexes: [hexes[0], hexes[1]],
                quad: *cyclic,
            });
            continue;
        }
        // Single-owner quad: either a junction or a boundary face.
        let hex = hexes[0];
        let single_tet = |tri: [usize; 3]| -> Option<usize> {
            tri_faces.get(&tri_key(tri)).and_then(|tets| {
                if tets.len() == 1 && !consumed_tris.contains(&tri_key(tri)) {
                    Some(tets[0])
                } else {
                    None
                }
            })
        };
        let covered = |tri: [usize; 3]| tri_faces.contains_key(&tri_key(tri));
        let mut junction = None;
        let mut matches = 0;
        for d in 0..2 {
            let diag = [cyclic[d], cyclic[(d + 2) % 4]];
            let others = [cyclic[(d + 1) % 4], cyclic[(d + 3) % 4]];
            let tri_a = [diag[0], diag[1], others[0]];
            let tri_b = [diag[0], diag[1], others[1]];
            if covered(tri_a) || covered(tri_b) {
                match (single_tet(tri_a), single_tet(tri_b)) {
                    (Some(ta), Some(tb)) => {
                        matches += 1;
                        junction = Some(Junction {
                            hex,
                            tets: [ta, tb],
                            quad: *cyclic,
                            diagonal: diag,
                            others,
                        });
                    }
                    // A half-covered or doubly-covered quad cannot be reduced
                    // to one diagonal split.
                    _ => return Err(MeshError::AmbiguousJunction { hex }),
                }
            }
        }
        match (matches, junction) {
            (0, _) => boundary.push(BoundaryFace::Quad {
                quad: *cyclic,
                hex,
            }),
            (1, Some(j)) => {
                consumed_tris.insert(tri_key([j.diagonal[0], j.diagonal[1], j.others[0]]));
                consumed_tris.insert(tri_key([j.diagonal[0], j.diagonal[1], j.others[1]]));
                records.push(InterfaceRecord::HybridJunction(j));
            }
            _ => return Err(MeshError::AmbiguousJunction { hex }),
        }
    }

    for (key, tets) in &tri_faces {
        if tets.len() == 1 && !consumed_tris.contains(key) {
            boundary.push(BoundaryFace::Tri {
                tri: *key,
                tet: tets[0],
            });
        }
    }

    Ok(Interfaces { records, boundary })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeLabel {
    Plain,
    HexEdge,
    HexFaceDiagonal,
}

#[derive(Debug, Clone, Default)]
pub struct EdgeInfo {
    /// Quad faces (cyclic order) for which this edge is a diagonal, deduped
    /// by vertex set. Valid meshes have at most one entry.
    pub diagonal_quads: Vec<[usize; 4]>,
    pub on_hex_edge: bool,
}

impl EdgeInfo {
    pub fn label(&self) -> EdgeLabel {
        if !self.diagonal_quads.is_empty() {
            EdgeLabel::HexFaceDiagonal
        } else if self.on_hex_edge {
            EdgeLabel::HexEdge
        } else {
            EdgeLabel::Plain
        }
    }
}

/// Per-tet-edge labels over the whole mesh. Iteration order (sorted vertex
/// pairs) fixes the global edge numbering used by the function spaces.
#[derive(Debug, Clone, Default)]
pub struct TetEdgeClassification {
    pub edges: BTreeMap<(usize, usize), EdgeInfo>,
}

impl TetEdgeClassification {
    pub fn label(&self, a: usize, b: usize) -> Option<EdgeLabel> {
        self.edges.get(&edge_key(a, b)).map(EdgeInfo::label)
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
}

/// Label every tetrahedron edge as a hexahedron face diagonal, a hexahedron
/// edge, or plain. A diagonal label applies to any quad face of any hex, so
/// the label (and the constraint derived from it) is consistent across all
/// tetrahedra sharing the edge.
pub fn tet_edge_classification(
    mesh: &HybridMesh,
    interfaces: &Interfaces,
) -> TetEdgeClassification {
    let mut edges: BTreeMap<(usize, usize), EdgeInfo> = BTreeMap::new();
    for t in 0..mesh.tets.len() {
        let tet = mesh.tets[t];
        for [i, j] in TET_EDGES {
            edges.entry(edge_key(tet[i], tet[j])).or_default();
        }
    }
    for h in 0..mesh.hexes.len() {
        for [a, b] in mesh.hex_edges(h) {
            if let Some(info) = edges.get_mut(&edge_key(a, b)) {
                info.on_hex_edge = true;
            }
        }
        for face in mesh.hex_faces(h) {
            for d in 0..2 {
                let diag = edge_key(face[d], face[(d + 2) % 4]);
                if let Some(info) = edges.get_mut(&diag) {
                    if !info
                        .diagonal_quads
                        .iter()
                        .any(|q| quad_key(*q) == quad_key(face))
                    {
                        info.diagonal_quads.push(face);
                    }
                }
            }
        }
    }
    let class = TetEdgeClassification { edges };
    debug_assert!(interfaces.junctions().all(|j| {
        class.label(j.diagonal[0], j.diagonal[1]) == Some(EdgeLabel::HexFaceDiagonal)
    }));
    class
}

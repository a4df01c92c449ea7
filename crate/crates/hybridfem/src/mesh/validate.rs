//! Connectivity validation of the supported hybrid mesh contacts.
//!
//! The supported contacts are: two tetrahedra sharing 0-3 vertices, two
//! hexahedra sharing 0, 1, 2 (an edge) or 4 (a face) vertices, and a
//! hexahedron and a tetrahedron sharing 0-3 vertices where a 3-vertex share
//! must be half of a quad face with a partner tetrahedron covering the other
//! half. Violations are data, not errors: every offending cell pair is
//! reported.

use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{quad_key, tri_key, CellId, HybridMesh};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Two tetrahedra share all 4 vertices.
    TetTetOverlap { tets: [usize; 2] },
    /// Two hexahedra share a vertex count outside {0, 1, 2, 4}.
    HexHexSharedCount { hexes: [usize; 2], shared: usize },
    /// Two hexahedra share 2 vertices that are not a common edge.
    HexHexNotAnEdge { hexes: [usize; 2], pair: [usize; 2] },
    /// Two hexahedra share 4 vertices that are not a common face.
    HexHexNotAFace { hexes: [usize; 2] },
    /// A hexahedron and a tetrahedron share all 4 tet vertices.
    HexTetOverlap { hex: usize, tet: usize },
    /// A 3-vertex hex-tet share whose triangle is not contained in a hex face.
    HexTetNotOnHexFace { hex: usize, tet: usize },
    /// Hex-tet 3-shared-vertices without partner tetrahedron.
    HexTetUnpairedFace { hex: usize, tet: usize },
    /// A triangular face incident to more than two tetrahedra.
    NonManifoldTriFace { face: [usize; 3], count: usize },
    /// A quadrilateral face incident to more than two hexahedra.
    NonManifoldQuadFace { face: [usize; 4], count: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TetTetOverlap { tets } => {
                write!(f, "tets {} and {} share 4 vertices", tets[0], tets[1])
            }
            Violation::HexHexSharedCount { hexes, shared } => write!(
                f,
                "hexes {} and {} share {} vertices (allowed: 0, 1, 2, 4)",
                hexes[0], hexes[1], shared
            ),
            Violation::HexHexNotAnEdge { hexes, pair } => write!(
                f,
                "hexes {} and {} share vertices {:?} which are not a common edge",
                hexes[0], hexes[1], pair
            ),
            Violation::HexHexNotAFace { hexes } => write!(
                f,
                "hexes {} and {} share 4 vertices which are not a common face",
                hexes[0], hexes[1]
            ),
            Violation::HexTetOverlap { hex, tet } => {
                write!(f, "hex {hex} and tet {tet} share 4 vertices")
            }
            Violation::HexTetNotOnHexFace { hex, tet } => write!(
                f,
                "hex {hex} and tet {tet} share 3 vertices that lie on no face of the hex"
            ),
            Violation::HexTetUnpairedFace { hex, tet } => write!(
                f,
                "hex {hex} and tet {tet}: hex-tet 3-shared-vertices without partner tetrahedron"
            ),
            Violation::NonManifoldTriFace { face, count } => write!(
                f,
                "triangular face {face:?} is shared by {count} tetrahedra"
            ),
            Violation::NonManifoldQuadFace { face, count } => {
                write!(f, "quad face {face:?} is shared by {count} hexahedra")
            }
        }
    }
}

#[derive(Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Accepted-but-unusual configurations, e.g. a tetrahedron touching a
    /// hexahedron exactly along a quad face diagonal.
    pub infos: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn shared_count(a: &[usize], b: &[usize]) -> usize {
    // Both inputs sorted.
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn shared_vertices(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Check every cell pair sharing at least one vertex against the supported
/// connectivity cases. An empty violation list means the mesh is valid.
pub fn validate_spec(mesh: &HybridMesh) -> ValidationReport {
    let mut report = ValidationReport::default();

    let sorted_tets: Vec<[usize; 4]> = mesh
        .tets
        .iter()
        .map(|t| {
            let mut s = *t;
            s.sort_unstable();
            s
        })
        .collect();
    let sorted_hexes: Vec<[usize; 8]> = mesh
        .hexes
        .iter()
        .map(|h| {
            let mut s = *h;
            s.sort_unstable();
            s
        })
        .collect();

    // Vertex -> incident cells.
    let mut incidence: Vec<Vec<CellId>> = vec![Vec::new(); mesh.n_vertices()];
    for (i, t) in mesh.tets.iter().enumerate() {
        for &v in t {
            incidence[v].push(CellId::Tet(i));
        }
    }
    for (i, h) in mesh.hexes.iter().enumerate() {
        for &v in h {
            incidence[v].push(CellId::Hex(i));
        }
    }

    // Tet face incidence, used for junction-partner lookups.
    let mut tri_faces: HashMap<[usize; 3], Vec<usize>> = HashMap::new();
    for (i, _) in mesh.tets.iter().enumerate() {
        for face in mesh.tet_faces(i) {
            tri_faces.entry(tri_key(face)).or_default().push(i);
        }
    }
    for (face, tets) in &tri_faces {
        if tets.len() > 2 {
            report.violations.push(Violation::NonManifoldTriFace {
                face: *face,
                count: tets.len(),
            });
        }
    }
    let mut quad_faces: HashMap<[usize; 4], Vec<usize>> = HashMap::new();
    for (i, _) in mesh.hexes.iter().enumerate() {
        for face in mesh.hex_faces(i) {
            quad_faces.entry(quad_key(face)).or_default().push(i);
        }
    }
    for (face, hexes) in &quad_faces {
        if hexes.len() > 2 {
            report.violations.push(Violation::NonManifoldQuadFace {
                face: *face,
                count: hexes.len(),
            });
        }
    }

    let pair_code = |a: CellId, b: CellId, mesh: &HybridMesh| -> u64 {
        let fa = mesh.flat_index(a) as u64;
        let fb = mesh.flat_index(b) as u64;
        (fa.min(fb) << 32) | fa.max(fb)
    };
    let mut seen: HashSet<u64> = HashSet::new();

    for cells in &incidence {
        for i in 0..cells.len() {
            for j in (i + 1)..cells.len() {
                let (a, b) = (cells[i], cells[j]);
                if !seen.insert(pair_code(a, b, mesh)) {
                    continue;
                }
                match (a, b) {
                    (CellId::Tet(ta), CellId::Tet(tb)) => {
                        let n = shared_count(&sorted_tets[ta], &sorted_tets[tb]);
                        if n > 3 {
                            report
                                .violations
                                .push(Violation::TetTetOverlap { tets: [ta, tb] });
                        }
                    }
                    (CellId::Hex(ha), CellId::Hex(hb)) => {
                        let shared = shared_vertices(&sorted_hexes[ha], &sorted_hexes[hb]);
                        match shared.len() {
                            0 | 1 => {}
                            2 => {
                                let pair = [shared[0], shared[1]];
                                let is_edge = |hex: usize| {
                                    mesh.hex_edges(hex).iter().any(|e| {
                                        (e[0] == pair[0] && e[1] == pair[1])
                                            || (e[0] == pair[1] && e[1] == pair[0])
                                    })
                                };
                                if !is_edge(ha) || !is_edge(hb) {
                                    report.violations.push(Violation::HexHexNotAnEdge {
                                        hexes: [ha, hb],
                                        pair,
                                    });
                                }
                            }
                            4 => {
                                let key: [usize; 4] =
                                    [shared[0], shared[1], shared[2], shared[3]];
                                let is_face = |hex: usize| {
                                    mesh.hex_faces(hex).iter().any(|f| quad_key(*f) == key)
                                };
                                if !is_face(ha) || !is_face(hb) {
                                    report
                                        .violations
                                        .push(Violation::HexHexNotAFace { hexes: [ha, hb] });
                                }
                            }
                            n => {
                                report.violations.push(Violation::HexHexSharedCount {
                                    hexes: [ha, hb],
                                    shared: n,
                                });
                            }
                        }
                    }
                    (CellId::Tet(t), CellId::Hex(h)) | (CellId::Hex(h), CellId::Tet(t)) => {
                        let shared = shared_vertices(&sorted_tets[t], &sorted_hexes[h]);
                        match shared.len() {
                            0..=2 => {}
                            3 => {
                                let tri: [usize; 3] = [shared[0], shared[1], shared[2]];
                                check_junction_half(
                                    mesh,
                                    h,
                                    t,
                                    tri,
                                    &tri_faces,
                                    &mut report,
                                );
                            }
                            _ => {
                                report
                                    .violations
                                    .push(Violation::HexTetOverlap { hex: h, tet: t });
                            }
                        }
                    }
                }
            }
        }
    }

    // Informational: tetrahedra meeting a hexahedron exactly along a quad
    // face diagonal are accepted but worth surfacing.
    for (h, _) in mesh.hexes.iter().enumerate() {
        for face in mesh.hex_faces(h) {
            for diag in [[face[0], face[2]], [face[1], face[3]]] {
                for &cell in &incidence[diag[0]] {
                    if let CellId::Tet(t) = cell {
                        if !mesh.tets[t].contains(&diag[1]) {
                            continue;
                        }
                        if shared_count(&sorted_tets[t], &sorted_hexes[h]) == 2 {
                            report.infos.push(format!(
                                "tet {t} touches hex {h} exactly along face diagonal {:?}",
                                diag
                            ));
                        }
                    }
                }
            }
        }
    }
    report.infos.sort();
    report.infos.dedup();

    report
}

/// A 3-vertex hex-tet share: the triangle must lie on a hex face and the
/// complementary triangle of the split must belong to another tetrahedron.
fn check_junction_half(
    mesh: &HybridMesh,
    hex: usize,
    tet: usize,
    tri: [usize; 3],
    tri_faces: &HashMap<[usize; 3], Vec<usize>>,
    report: &mut ValidationReport,
) {
    let key = tri_key(tri);
    for face in mesh.hex_faces(hex) {
        // Position of the face vertex missing from the shared triangle.
        let missing: Vec<usize> = (0..4).filter(|&p| !key.contains(&face[p])).collect();
        if missing.len() != 1 {
            continue;
        }
        let m = missing[0];
        let partner = tri_key([face[(m + 1) % 4], face[(m + 3) % 4], face[m]]);
        let has_partner = tri_faces
            .get(&partner)
            .map(|tets| tets.iter().any(|&other| other != tet))
            .unwrap_or(false);
        if !has_partner {
            report
                .violations
                .push(Violation::HexTetUnpairedFace { hex, tet });
        }
        return;
    }
    report
        .violations
        .push(Violation::HexTetNotOnHexFace { hex, tet });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::samples;

    #[test]
    fn empty_mesh_is_valid() {
        let mesh = HybridMesh::new(vec![], vec![], vec![]).unwrap();
        assert!(validate_spec(&mesh).is_valid());
    }

    #[test]
    fn two_tets_sharing_a_face_are_valid() {
        let mesh = HybridMesh::new(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
                [1.0, 1.0, 1.0],
            ],
            vec![[0, 1, 2, 3], [1, 2, 3, 4]],
            vec![],
        )
        .unwrap();
        let report = validate_spec(&mesh);
        assert!(report.is_valid(), "{:?}", report.violations);
    }

    #[test]
    fn duplicate_tet_is_a_violation() {
        let mesh = HybridMesh::new(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
            ],
            vec![[0, 1, 2, 3], [3, 2, 1, 0]],
            vec![],
        )
        .unwrap();
        let report = validate_spec(&mesh);
        assert!(report
            .violations
            .contains(&Violation::TetTetOverlap { tets: [0, 1] }));
    }

    #[test]
    fn half_covered_hex_face_is_a_violation() {
        // One hex plus a single tet over half of its top face: no partner.
        let mesh = samples::hex_with_one_tet();
        let report = validate_spec(&mesh);
        assert_eq!(
            report.violations,
            vec![Violation::HexTetUnpairedFace { hex: 0, tet: 0 }]
        );
        assert!(report.violations[0]
            .to_string()
            .contains("without partner tetrahedron"));
    }

    #[test]
    fn full_junction_is_valid() {
        let mesh = samples::fig3b(0.0);
        let report = validate_spec(&mesh);
        assert!(report.is_valid(), "{:?}", report.violations);
    }

    #[test]
    fn two_hexes_sharing_a_face_are_valid() {
        let mesh = samples::two_hexes();
        let report = validate_spec(&mesh);
        assert!(report.is_valid(), "{:?}", report.violations);
    }

    #[test]
    fn hexes_glued_on_three_vertices_are_rejected() {
        // Second hex rotated so that only 3 vertices match the shared face.
        let mut verts = Vec::new();
        for z in [0.0, 1.0, 2.0] {
            for (x, y) in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)] {
                verts.push([x, y, z]);
            }
        }
        verts.push([2.0, 2.0, 2.0]);
        let mesh = HybridMesh::new(
            verts,
            vec![],
            vec![
                [0, 1, 2, 3, 4, 5, 6, 7],
                // Uses 3 vertices of the middle layer plus an outlier.
                [4, 5, 6, 12, 8, 9, 10, 11],
            ],
        )
        .unwrap();
        let report = validate_spec(&mesh);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::HexHexSharedCount { shared: 3, .. })));
    }

    #[test]
    fn diagonal_only_tet_contact_is_informational() {
        let mesh = samples::hex_with_diagonal_tet_pair();
        let report = validate_spec(&mesh);
        assert!(report.is_valid(), "{:?}", report.violations);
        assert!(!report.infos.is_empty());
        assert!(report.infos[0].contains("face diagonal"));
    }
}

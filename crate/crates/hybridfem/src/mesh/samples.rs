//! Small hand-built meshes used in tests and documentation.

use super::HybridMesh;

/// One unit-cube hexahedron with one tetrahedron glued over half of its top
/// face and no partner over the other half. Invalid by construction.
pub fn hex_with_one_tet() -> HybridMesh {
    let mut mesh = fig3b(0.0);
    mesh.tets.truncate(1);
    mesh
}

/// The three-cell junction configuration: a unit-cube hexahedron whose top
/// face `(a1, a2, a3, a4)` is covered by two tetrahedra sharing the diagonal
/// `(a2, a4)` and an apex `a5` above the face.
///
/// Vertex ids: 0..=3 are `a1..a4` (the quad, cyclic), 4 is the apex `a5`,
/// 5..=8 are the bottom hexahedron vertices. `warp` lifts the z-coordinate of
/// `a3`, making the quad face non-planar.
pub fn fig3b(warp: f64) -> HybridMesh {
    let vertices = vec![
        [0.0, 0.0, 1.0],        // 0: a1
        [1.0, 0.0, 1.0],        // 1: a2
        [1.0, 1.0, 1.0 + warp], // 2: a3
        [0.0, 1.0, 1.0],        // 3: a4
        [0.5, 0.5, 2.0],        // 4: a5, apex
        [0.0, 0.0, 0.0],        // 5
        [1.0, 0.0, 0.0],        // 6
        [1.0, 1.0, 0.0],        // 7
        [0.0, 1.0, 0.0],        // 8
    ];
    // L = (a1, a2, a4, a5), R = (a2, a3, a4, a5); both positively oriented.
    let tets = vec![[0, 1, 3, 4], [1, 2, 3, 4]];
    let hexes = vec![[5, 6, 7, 8, 0, 1, 2, 3]];
    HybridMesh::new(vertices, tets, hexes).unwrap()
}

/// Two unit cubes stacked along z, sharing one quad face.
pub fn two_hexes() -> HybridMesh {
    let mut vertices = Vec::new();
    for z in [0.0, 1.0, 2.0] {
        for (x, y) in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)] {
            vertices.push([x, y, z]);
        }
    }
    let hexes = vec![[0, 1, 2, 3, 4, 5, 6, 7], [4, 5, 6, 7, 8, 9, 10, 11]];
    HybridMesh::new(vertices, vec![], hexes).unwrap()
}

/// One unit hexahedron spanning [0,1]^3.
pub fn single_hex() -> HybridMesh {
    let vertices = vec![
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
        [0.0, 1.0, 1.0],
    ];
    HybridMesh::new(vertices, vec![], vec![[0, 1, 2, 3, 4, 5, 6, 7]]).unwrap()
}

/// One tetrahedron with the given vertices.
pub fn single_tet(vertices: [[f64; 3]; 4]) -> HybridMesh {
    HybridMesh::new(vertices.to_vec(), vec![[0, 1, 2, 3]], vec![]).unwrap()
}

/// A hexahedron plus two tetrahedra that touch it only along the diagonal of
/// its top face: valid, but reported as informational by validation.
pub fn hex_with_diagonal_tet_pair() -> HybridMesh {
    let vertices = vec![
        [0.0, 0.0, 1.0],  // 0: a1
        [1.0, 0.0, 1.0],  // 1: a2
        [1.0, 1.0, 1.0],  // 2: a3
        [0.0, 1.0, 1.0],  // 3: a4
        [0.0, 0.0, 0.0],  // 4
        [1.0, 0.0, 0.0],  // 5
        [1.0, 1.0, 0.0],  // 6
        [0.0, 1.0, 0.0],  // 7
        [0.5, 0.5, 1.8],  // 8
        [0.2, 0.2, 2.5],  // 9
        [0.8, 0.8, 2.5],  // 10
    ];
    // Both tets contain the top-face diagonal (a2, a4) = (1, 3) and nothing
    // else of the hexahedron.
    let tets = vec![[1, 3, 8, 9], [1, 3, 8, 10]];
    let hexes = vec![[4, 5, 6, 7, 0, 1, 2, 3]];
    HybridMesh::new(vertices, tets, hexes).unwrap()
}

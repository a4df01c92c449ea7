//! Global function spaces on hybrid meshes.
//!
//! Raw (unconstrained) degrees of freedom are one value per mesh vertex plus
//! one value per tetrahedron edge midpoint. Vertex values are shared across
//! all incident cells and edge values across all incident tetrahedra, so the
//! raw system is the piecewise Q1 (hexahedra) / P2 (tetrahedra) space that is
//! already continuous at conforming interfaces; edge basis functions are
//! always zero on hexahedra. The spaces differ in which edge values remain
//! free:
//!
//! - `DHyb12`: every edge value is free (discontinuous at hybrid junctions),
//! - `Hyb12`: edges on hexahedron face diagonals are tied to 1/4 of the four
//!   quad vertex values, edges on hexahedron edges to the mean of their
//!   endpoints; the remaining edges stay free,
//! - `Hyb1`: additionally every remaining edge is tied to the mean of its
//!   endpoints, so the space is determined by vertex values alone,
//! - `Q1` / `P1`: the classical spaces, valid on all-hex / all-tet meshes
//!   (`P1` coincides with `Hyb1` there: tying all midpoints to edge means
//!   reduces each P2 restriction to the linear interpolant).
//!
//! All constraints are encoded in a sparse prolongation operator `P` from
//! free values to raw values; the reduced stiffness matrix is `P^T A P`.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::geometry::{interface_samples, Mappings};
use crate::linalg::Vec3;
use crate::mesh::{
    edge_key, tet_edge_classification, CellId, EdgeLabel, HybridMesh, Interfaces,
};
use crate::refelem::{BasisKind, TET_EDGES};
use crate::sparse::{CooMatrix, CsrMatrix};

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("space {space} is not defined on this mesh: {reason}")]
    UnsupportedSpace { space: SpaceKind, reason: String },
    #[error("free dof {free_dof} has no support on {cell}")]
    NotInSupport { free_dof: usize, cell: CellId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Q1,
    P1,
    DHyb12,
    Hyb12,
    Hyb1,
}

impl std::fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SpaceKind::Q1 => "q1",
            SpaceKind::P1 => "p1",
            SpaceKind::DHyb12 => "dhyb12",
            SpaceKind::Hyb12 => "hyb12",
            SpaceKind::Hyb1 => "hyb1",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for SpaceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "q1" => Ok(SpaceKind::Q1),
            "p1" => Ok(SpaceKind::P1),
            "dhyb12" => Ok(SpaceKind::DHyb12),
            "hyb12" => Ok(SpaceKind::Hyb12),
            "hyb1" => Ok(SpaceKind::Hyb1),
            other => Err(format!(
                "unknown space `{other}` (expected one of: q1, p1, dhyb12, hyb12, hyb1)"
            )),
        }
    }
}

/// Global numbering plus the constraint set, realized as a prolongation
/// operator from free dofs to raw nodal values.
#[derive(Debug, Clone)]
pub struct DofSystem {
    pub space: SpaceKind,
    pub n_raw: usize,
    pub n_free: usize,
    /// Sparse `n_raw x n_free` operator; coefficients are 1, 1/2 or 1/4.
    pub prolongation: CsrMatrix,
    /// Per free dof: does its node lie on the mesh boundary?
    pub dirichlet_mask: Vec<bool>,
    /// Geometric node position of each free dof.
    pub free_positions: Vec<Vec3>,
    n_vertices: usize,
    edge_ids: BTreeMap<(usize, usize), usize>,
    tet_dofs: Vec<[usize; 10]>,
    hex_dofs: Vec<[usize; 8]>,
    /// Per flat cell index: sorted free dofs with support on the cell.
    cell_support: Vec<Vec<u32>>,
    n_tets: usize,
}

impl DofSystem {
    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Raw dof ids of a cell's local nodes (8 vertex dofs for a hex,
    /// 4 vertex + 6 edge dofs for a tet).
    pub fn cell_raw_dofs(&self, cell: CellId) -> &[usize] {
        match cell {
            CellId::Tet(i) => &self.tet_dofs[i],
            CellId::Hex(i) => &self.hex_dofs[i],
        }
    }

    pub fn cell_basis(&self, cell: CellId) -> BasisKind {
        match cell {
            CellId::Tet(_) => BasisKind::P2,
            CellId::Hex(_) => BasisKind::Q1,
        }
    }

    /// Free dofs supported on a cell (sorted).
    pub fn cell_support(&self, cell: CellId) -> &[u32] {
        let flat = match cell {
            CellId::Tet(i) => i,
            CellId::Hex(i) => self.n_tets + i,
        };
        &self.cell_support[flat]
    }

    /// Raw dof id of the midpoint value on tet edge (a, b), if the edge exists.
    pub fn edge_raw_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_ids
            .get(&edge_key(a, b))
            .map(|&e| self.n_vertices + e)
    }

    /// Prolongation coefficient P[raw, free].
    pub fn coefficient(&self, raw: usize, free: usize) -> f64 {
        self.prolongation.get(raw, free)
    }

    /// Expand free values to raw nodal values (per scalar component).
    pub fn expand(&self, free_values: &[f64]) -> Vec<f64> {
        self.prolongation.mul_vec_alloc(free_values)
    }

    /// Dump the prolongation as `row col value` lines.
    pub fn write_prolongation(&self, path: &Path) -> std::io::Result<()> {
        self.prolongation.write_triplets(path)
    }
}

/// Build the dof system for `kind` over a valid mesh with its mappings.
pub fn build_space(
    mesh: &HybridMesh,
    mappings: &Mappings,
    interfaces: &Interfaces,
    kind: SpaceKind,
) -> Result<DofSystem, SpaceError> {
    match kind {
        SpaceKind::P1 if !mesh.hexes.is_empty() => {
            return Err(SpaceError::UnsupportedSpace {
                space: kind,
                reason: format!("mesh contains {} hexahedra", mesh.hexes.len()),
            });
        }
        SpaceKind::Q1 if !mesh.tets.is_empty() => {
            return Err(SpaceError::UnsupportedSpace {
                space: kind,
                reason: format!("mesh contains {} tetrahedra", mesh.tets.len()),
            });
        }
        _ => {}
    }

    let class = tet_edge_classification(mesh, interfaces);
    let n_vertices = mesh.n_vertices();
    let edge_ids: BTreeMap<(usize, usize), usize> = class
        .edges
        .keys()
        .enumerate()
        .map(|(i, &e)| (e, i))
        .collect();
    let n_raw = n_vertices + edge_ids.len();

    // Free dofs: all vertices, plus the surviving edge midpoints.
    let edge_is_free = |label: EdgeLabel| match kind {
        SpaceKind::DHyb12 => true,
        SpaceKind::Hyb12 => label == EdgeLabel::Plain,
        SpaceKind::Hyb1 | SpaceKind::P1 | SpaceKind::Q1 => false,
    };

    let mut free_edge_index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut n_free = n_vertices;
    for (&e, info) in &class.edges {
        if edge_is_free(info.label()) {
            free_edge_index.insert(e, n_free);
            n_free += 1;
        }
    }

    let mut p = CooMatrix::new(n_raw, n_free);
    for v in 0..n_vertices {
        p.push(v, v, 1.0);
    }
    for (&(a, b), info) in &class.edges {
        let raw = n_vertices + edge_ids[&(a, b)];
        if let Some(&free) = free_edge_index.get(&(a, b)) {
            p.push(raw, free, 1.0);
            continue;
        }
        match info.label() {
            EdgeLabel::HexFaceDiagonal => {
                // The midpoint node sits at the quad face center, where the
                // hexahedron's tri-affine restriction takes the value
                // 1/4 * (sum of the four quad vertex values).
                let quad = info.diagonal_quads[0];
                for v in quad {
                    p.push(raw, v, 0.25);
                }
            }
            EdgeLabel::HexEdge | EdgeLabel::Plain => {
                p.push(raw, a, 0.5);
                p.push(raw, b, 0.5);
            }
        }
    }
    let prolongation = p.to_csr();

    // Per-cell raw dof lists.
    let mut tet_dofs = Vec::with_capacity(mesh.tets.len());
    for tet in &mesh.tets {
        let mut dofs = [0usize; 10];
        for (k, &v) in tet.iter().enumerate() {
            dofs[k] = v;
        }
        for (k, [i, j]) in TET_EDGES.iter().enumerate() {
            dofs[4 + k] = n_vertices + edge_ids[&edge_key(tet[*i], tet[*j])];
        }
        tet_dofs.push(dofs);
    }
    let hex_dofs: Vec<[usize; 8]> = mesh.hexes.clone();

    // Support: free dofs reached through any raw dof of the cell.
    let n_tets = mesh.tets.len();
    let mut cell_support = Vec::with_capacity(mesh.n_cells());
    let support_of = |raws: &[usize]| -> Vec<u32> {
        let mut out: Vec<u32> = raws
            .iter()
            .flat_map(|&r| prolongation.row(r).0.iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    };
    for dofs in &tet_dofs {
        cell_support.push(support_of(dofs));
    }
    for dofs in &hex_dofs {
        cell_support.push(support_of(dofs));
    }

    // Dirichlet flags and node positions.
    let boundary_vertices = interfaces.boundary_vertices();
    let boundary_edges = interfaces.boundary_edges();
    let mut dirichlet_mask = vec![false; n_free];
    let mut free_positions = vec![[0.0; 3]; n_free];
    for v in 0..n_vertices {
        dirichlet_mask[v] = boundary_vertices.contains(&v);
        free_positions[v] = mesh.vertices[v];
    }
    for (&e, &free) in &free_edge_index {
        dirichlet_mask[free] = boundary_edges.contains(&e);
        free_positions[free] = mappings.edge_nodes[&e];
    }

    Ok(DofSystem {
        space: kind,
        n_raw,
        n_free,
        prolongation,
        dirichlet_mask,
        free_positions,
        n_vertices,
        edge_ids,
        tet_dofs,
        hex_dofs,
        cell_support,
        n_tets,
    })
}

/// Evaluate one global basis function (a free dof) on a cell at a reference
/// point: value and physical gradient.
pub fn eval_global_basis(
    dofs: &DofSystem,
    mappings: &Mappings,
    free_dof: usize,
    cell: CellId,
    p: Vec3,
) -> Result<(f64, Vec3), SpaceError> {
    if !dofs.cell_support(cell).contains(&(free_dof as u32)) {
        return Err(SpaceError::NotInSupport { free_dof, cell });
    }
    let basis = dofs.cell_basis(cell);
    let vals = basis.eval_unchecked(p);
    let grads = basis.grad_unchecked(p);
    let mut value = 0.0;
    let mut ref_grad = [0.0; 3];
    for (n, &raw) in dofs.cell_raw_dofs(cell).iter().enumerate() {
        let c = dofs.coefficient(raw, free_dof);
        if c != 0.0 {
            value += c * vals[n];
            for k in 0..3 {
                ref_grad[k] += c * grads[n][k];
            }
        }
    }
    let (j, _) = mappings.get(cell).jacobian(p);
    let grad = j
        .inv_transpose()
        .expect("mapping jacobian must be invertible")
        .mul_vec(ref_grad);
    Ok((value, grad))
}

/// Maximum inter-element jump on one interface, with the offending free dof.
#[derive(Debug, Clone, Copy)]
pub struct InterfaceJump {
    pub max_jump: f64,
    pub worst_free_dof: Option<usize>,
}

/// Sample matched physical points across every interface and report, per
/// interface, the largest |left - right| over all basis functions supported
/// on either side (the absent side contributes zero).
pub fn continuity_audit(
    mesh: &HybridMesh,
    dofs: &DofSystem,
    mappings: &Mappings,
    interfaces: &Interfaces,
    n_samples: usize,
) -> Vec<InterfaceJump> {
    let value_on = |cell: CellId, p: Vec3, dof: u32| -> f64 {
        if !dofs.cell_support(cell).contains(&dof) {
            return 0.0;
        }
        let vals = dofs.cell_basis(cell).eval_unchecked(p);
        let mut v = 0.0;
        for (n, &raw) in dofs.cell_raw_dofs(cell).iter().enumerate() {
            let c = dofs.coefficient(raw, dof as usize);
            if c != 0.0 {
                v += c * vals[n];
            }
        }
        v
    };
    let mut out = Vec::with_capacity(interfaces.records.len());
    for record in &interfaces.records {
        let samples = interface_samples(mesh, mappings, record, n_samples);
        let mut max_jump = 0.0f64;
        let mut worst = None;
        for s in &samples {
            let mut union: Vec<u32> = dofs
                .cell_support(s.cell_a)
                .iter()
                .chain(dofs.cell_support(s.cell_b))
                .copied()
                .collect();
            union.sort_unstable();
            union.dedup();
            for &dof in &union {
                let jump = (value_on(s.cell_a, s.p_a, dof) - value_on(s.cell_b, s.p_b, dof)).abs();
                if jump > max_jump {
                    max_jump = jump;
                    worst = Some(dof as usize);
                }
            }
        }
        out.push(InterfaceJump {
            max_jump,
            worst_free_dof: worst,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mappings, MappingMode};
    use crate::mesh::{build_interfaces, samples};
    use crate::sparse::{solve_cg, CgOptions};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn fig3b_space(kind: SpaceKind) -> (HybridMesh, Interfaces, Mappings, DofSystem) {
        let mesh = samples::fig3b(0.25);
        let ifaces = build_interfaces(&mesh).unwrap();
        let maps = build_mappings(&mesh, &ifaces, MappingMode::Quadratic).unwrap();
        let dofs = build_space(&mesh, &maps, &ifaces, kind).unwrap();
        (mesh, ifaces, maps, dofs)
    }

    #[test]
    fn fig3b_dof_counts() {
        let (_, _, _, hyb1) = fig3b_space(SpaceKind::Hyb1);
        assert_eq!(hyb1.n_free, 9); // one per vertex
        assert_eq!(hyb1.n_raw, 9 + 9); // 9 vertices + 9 tet edges
        let (_, _, _, hyb12) = fig3b_space(SpaceKind::Hyb12);
        assert_eq!(hyb12.n_free, 9 + 4); // 4 plain apex edges stay free
        let (_, _, _, dhyb12) = fig3b_space(SpaceKind::DHyb12);
        assert_eq!(dhyb12.n_free, 18);
    }

    #[test]
    fn fig3b_hyb1_combination_coefficients() {
        // phi_1 on the left tet combines psi_1 + 1/2 (psi_12 + psi_14 +
        // psi_15) + 1/4 psi_24 (vertex labels a1..a5 as in fig3b).
        let (_, _, _, dofs) = fig3b_space(SpaceKind::Hyb1);
        let a1 = 0usize;
        assert_eq!(dofs.coefficient(a1, a1), 1.0);
        // Half coefficients on edges (a1,a2)=(0,1), (a1,a4)=(0,3), (a1,a5)=(0,4).
        for edge in [(0, 1), (0, 3), (0, 4)] {
            let raw = dofs.edge_raw_id(edge.0, edge.1).unwrap();
            assert_eq!(dofs.coefficient(raw, a1), 0.5, "edge {edge:?}");
        }
        // Quarter coefficient on the diagonal (a2,a4)=(1,3).
        let diag = dofs.edge_raw_id(1, 3).unwrap();
        assert_eq!(dofs.coefficient(diag, a1), 0.25);
        // The diagonal ties to all four quad vertices; the apex gets nothing.
        for v in [0, 1, 2, 3] {
            assert_eq!(dofs.coefficient(diag, v), 0.25);
        }
        assert_eq!(dofs.coefficient(diag, 4), 0.0);
    }

    #[test]
    fn fig3b_phi1_is_nonzero_on_the_far_tet() {
        // phi_1 restricted to R = (a2,a3,a4,a5) equals 1/4 psi_24 even though
        // a1 is not a vertex of R.
        let (_, _, maps, dofs) = fig3b_space(SpaceKind::Hyb1);
        let r = CellId::Tet(1);
        assert!(dofs.cell_support(r).contains(&0));
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let mut p = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            let s: f64 = p.iter().sum();
            if s > 1.0 {
                p = p.map(|x| x / s);
            }
            let (value, _) = eval_global_basis(&dofs, &maps, 0, r, p).unwrap();
            // Global edge (1,3) is local edge (0,2) of R, i.e. P2 node 5.
            let psi24 = BasisKind::P2.eval_unchecked(p)[5];
            assert!((value - 0.25 * psi24).abs() < 1e-14);
        }
    }

    #[test]
    fn fig3b_phi1_equals_one_quarter_at_the_face_center_from_both_sides() {
        let (_, _, maps, dofs) = fig3b_space(SpaceKind::Hyb1);
        // Hex side: top face center; a1 sits at local vertex 4.
        let (hex_val, _) =
            eval_global_basis(&dofs, &maps, 0, CellId::Hex(0), [0.5, 0.5, 1.0]).unwrap();
        assert!((hex_val - 0.25).abs() < 1e-14);
        // Tet side: midpoint of the diagonal edge; L=(0,1,3,4) holds the
        // global edge (1,3) as local edge (1,2), midpoint (0.5, 0.5, 0).
        let (tet_val, _) =
            eval_global_basis(&dofs, &maps, 0, CellId::Tet(0), [0.5, 0.5, 0.0]).unwrap();
        assert!((tet_val - 0.25).abs() < 1e-14);
    }

    #[test]
    fn all_hex_mesh_has_identity_prolongation() {
        let mesh = samples::two_hexes();
        let ifaces = build_interfaces(&mesh).unwrap();
        let maps = build_mappings(&mesh, &ifaces, MappingMode::Quadratic).unwrap();
        let dofs = build_space(&mesh, &maps, &ifaces, SpaceKind::Hyb1).unwrap();
        assert_eq!(dofs.n_free, mesh.n_vertices());
        assert_eq!(dofs.n_raw, mesh.n_vertices());
        for r in 0..dofs.n_raw {
            let (cols, vals) = dofs.prolongation.row(r);
            assert_eq!(cols, &[r as u32]);
            assert_eq!(vals, &[1.0]);
        }
        // Q1 builds on the same mesh, P1 does not.
        assert!(build_space(&mesh, &maps, &ifaces, SpaceKind::Q1).is_ok());
        assert!(matches!(
            build_space(&mesh, &maps, &ifaces, SpaceKind::P1),
            Err(SpaceError::UnsupportedSpace { .. })
        ));
    }

    #[test]
    fn unsupported_spaces_on_the_hybrid_mesh() {
        let mesh = samples::fig3b(0.0);
        let ifaces = build_interfaces(&mesh).unwrap();
        let maps = build_mappings(&mesh, &ifaces, MappingMode::Quadratic).unwrap();
        for kind in [SpaceKind::P1, SpaceKind::Q1] {
            assert!(matches!(
                build_space(&mesh, &maps, &ifaces, kind),
                Err(SpaceError::UnsupportedSpace { .. })
            ));
        }
    }

    #[test]
    fn kronecker_property_at_vertices() {
        let (mesh, _, maps, dofs) = fig3b_space(SpaceKind::Hyb1);
        for cell in mesh.cell_ids() {
            let verts = mesh.cell_vertices(cell);
            let nodes = dofs.cell_basis(cell).node_coords();
            for (local, &vglobal) in verts.iter().enumerate() {
                for &dof in dofs.cell_support(cell) {
                    let (value, _) =
                        eval_global_basis(&dofs, &maps, dof as usize, cell, nodes[local]).unwrap();
                    let want = if dof as usize == vglobal { 1.0 } else { 0.0 };
                    assert!(
                        (value - want).abs() < 1e-13,
                        "{cell:?}: phi_{dof} at vertex {vglobal} = {value}"
                    );
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_on_every_cell() {
        for kind in [SpaceKind::Hyb1, SpaceKind::Hyb12, SpaceKind::DHyb12] {
            let (mesh, _, maps, dofs) = fig3b_space(kind);
            let mut rng = ChaCha8Rng::seed_from_u64(33);
            for cell in mesh.cell_ids() {
                for _ in 0..100 {
                    let p = match cell {
                        CellId::Tet(_) => {
                            let mut p =
                                [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
                            let s: f64 = p.iter().sum();
                            if s > 1.0 {
                                p = p.map(|x| x / s);
                            }
                            p
                        }
                        CellId::Hex(_) => {
                            [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()]
                        }
                    };
                    let mut sum = 0.0;
                    for &dof in dofs.cell_support(cell) {
                        let (v, _) =
                            eval_global_basis(&dofs, &maps, dof as usize, cell, p).unwrap();
                        sum += v;
                    }
                    assert!(
                        (sum - 1.0).abs() < 1e-13,
                        "{kind:?} {cell:?}: partition of unity = {sum}"
                    );
                }
            }
        }
    }

    #[test]
    fn edge_dofs_never_appear_on_hexes() {
        let (_, _, _, dofs) = fig3b_space(SpaceKind::Hyb12);
        for hex_dofs in &dofs.hex_dofs {
            for &raw in hex_dofs {
                assert!(raw < dofs.n_vertices());
            }
        }
    }

    #[test]
    fn prolongation_rows_are_nonempty_and_coefficients_canonical() {
        for kind in [SpaceKind::Hyb1, SpaceKind::Hyb12, SpaceKind::DHyb12] {
            let (_, _, _, dofs) = fig3b_space(kind);
            for r in 0..dofs.n_raw {
                let (cols, vals) = dofs.prolongation.row(r);
                assert!(!cols.is_empty(), "{kind:?}: raw dof {r} is orphaned");
                for v in vals {
                    assert!(
                        [1.0, 0.5, 0.25].contains(v),
                        "{kind:?}: coefficient {v} out of the canonical set"
                    );
                }
            }
        }
    }

    #[test]
    fn continuity_audit_fig3b() {
        // Hyb1 and Hyb12 are continuous across the junction; DHyb12 is not.
        for (kind, continuous) in [
            (SpaceKind::Hyb1, true),
            (SpaceKind::Hyb12, true),
            (SpaceKind::DHyb12, false),
        ] {
            let (mesh, ifaces, maps, dofs) = fig3b_space(kind);
            let audit = continuity_audit(&mesh, &dofs, &maps, &ifaces, 25);
            let max = audit.iter().fold(0.0f64, |m, a| m.max(a.max_jump));
            if continuous {
                assert!(max <= 1e-10, "{kind:?}: jump {max}");
            } else {
                assert!(max > 0.01, "{kind:?}: expected a junction jump, got {max}");
            }
        }
    }

    #[test]
    fn q1_continuity_across_hex_hex_interface() {
        let mesh = samples::two_hexes();
        let ifaces = build_interfaces(&mesh).unwrap();
        let maps = build_mappings(&mesh, &ifaces, MappingMode::Quadratic).unwrap();
        let dofs = build_space(&mesh, &maps, &ifaces, SpaceKind::Q1).unwrap();
        let audit = continuity_audit(&mesh, &dofs, &maps, &ifaces, 25);
        assert!(audit.iter().all(|a| a.max_jump <= 1e-13));
    }

    #[test]
    fn hyb1_embeds_into_hyb12() {
        // Each Hyb1 column, seen as a raw vector, must lie in the column
        // space of the Hyb12 prolongation: least-squares residual ~ 0.
        let (_, _, _, hyb1) = fig3b_space(SpaceKind::Hyb1);
        let (_, _, _, hyb12) = fig3b_space(SpaceKind::Hyb12);
        let p12 = &hyb12.prolongation;
        let p12t = p12.transpose();
        let normal = p12t.multiply(p12);
        for col in 0..hyb1.n_free {
            let mut target = vec![0.0; hyb1.n_raw];
            for r in 0..hyb1.n_raw {
                target[r] = hyb1.prolongation.get(r, col);
            }
            let rhs = p12t.mul_vec_alloc(&target);
            let (y, _) = solve_cg(&normal, &rhs, CgOptions::default()).unwrap();
            let reconstructed = p12.mul_vec_alloc(&y);
            let residual: f64 = reconstructed
                .iter()
                .zip(&target)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(residual <= 1e-12, "column {col}: residual {residual}");
        }
    }

    #[test]
    fn not_in_support_is_reported() {
        let (_, _, maps, dofs) = fig3b_space(SpaceKind::Hyb1);
        // The apex dof has no support on the hex.
        let err = eval_global_basis(&dofs, &maps, 4, CellId::Hex(0), [0.5, 0.5, 0.5]);
        assert!(matches!(err, Err(SpaceError::NotInSupport { .. })));
    }

    #[test]
    fn dirichlet_mask_and_positions() {
        let (mesh, _, _, dofs) = fig3b_space(SpaceKind::Hyb12);
        // Every vertex of the three-cell complex is on its boundary.
        for v in 0..mesh.n_vertices() {
            assert!(dofs.dirichlet_mask[v]);
            assert_eq!(dofs.free_positions[v], mesh.vertices[v]);
        }
        // Apex edges lie in boundary triangles.
        for free in mesh.n_vertices()..dofs.n_free {
            assert!(dofs.dirichlet_mask[free]);
        }
    }

    #[test]
    fn prolongation_dump_is_parseable() {
        let (_, _, _, dofs) = fig3b_space(SpaceKind::Hyb1);
        let dir = std::env::temp_dir().join("hybridfem_spaces_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("p.txt");
        dofs.write_prolongation(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut found_quarter = false;
        for line in text.lines() {
            let f: Vec<&str> = line.split_whitespace().collect();
            assert_eq!(f.len(), 3);
            let _: usize = f[0].parse().unwrap();
            let _: usize = f[1].parse().unwrap();
            let v: f64 = f[2].parse().unwrap();
            if v == 0.25 {
                found_quarter = true;
            }
        }
        assert!(found_quarter, "diagonal constraint must appear in the dump");
        std::fs::remove_dir_all(&dir).ok();
    }
}

//! Per-cell geometric mappings and geometric continuity checks.
//!
//! Hexahedra are mapped tri-affinely from the unit cube, so their faces are
//! bi-affine quadric surfaces (hyperbolic paraboloids) and are generally not
//! planar. Tetrahedra are mapped quadratically with one control node per
//! edge. Away from hexahedra an edge node sits at the true edge midpoint (the
//! mapping then reduces to the affine one); when a tetrahedron edge is the
//! diagonal of a hexahedron quad face the node is placed at the bi-affine
//! face center `(a_j + a_k + a_l + a_f) / 4`, which curves the tetrahedron
//! faces onto the quad surface and keeps the mesh geometry watertight.
//!
//! Edge nodes are stored once per mesh edge, so tetrahedra sharing an edge
//! share the node by construction.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::linalg::{add, dist, scale, sub, Mat3, Vec3};
use crate::mesh::{
    tet_edge_classification, CellId, EdgeLabel, HybridMesh, InterfaceRecord, Interfaces,
};
use crate::refelem::{
    contains, quadrature_for, BasisKind, CellKind, HEX_FACES, HEX_VERTICES, TET_EDGES,
    TET_VERTICES,
};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("{cell}: mapping is inverted (det J = {det:.3e} at a check point)")]
    InvertedElement { cell: CellId, det: f64 },
    #[error("tet edge ({0}, {1}) has conflicting diagonal placements")]
    ConflictingDiagonal(usize, usize),
    #[error("point ({0}, {1}, {2}) lies outside the reference cell")]
    OutOfCell(f64, f64, f64),
}

/// Whether tetrahedra use the junction-aware quadratic node placement or
/// plain edge midpoints (the ablation setting).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingMode {
    Quadratic,
    Affine,
}

/// Geometric map of one cell: basis-weighted sum of control points.
#[derive(Debug, Clone)]
pub enum ElementMapping {
    /// Tri-affine hexahedron, controlled by its 8 vertices.
    TriAffineHex { cell: usize, corners: [Vec3; 8] },
    /// Quadratic tetrahedron: 4 vertices plus 6 edge nodes in the local edge
    /// order of [`TET_EDGES`].
    QuadraticTet { cell: usize, nodes: [Vec3; 10] },
}

impl ElementMapping {
    pub fn cell_kind(&self) -> CellKind {
        match self {
            ElementMapping::TriAffineHex { .. } => CellKind::Hex,
            ElementMapping::QuadraticTet { .. } => CellKind::Tet,
        }
    }

    pub fn basis(&self) -> BasisKind {
        match self {
            ElementMapping::TriAffineHex { .. } => BasisKind::Q1,
            ElementMapping::QuadraticTet { .. } => BasisKind::P2,
        }
    }

    fn coefficients(&self) -> &[Vec3] {
        match self {
            ElementMapping::TriAffineHex { corners, .. } => corners,
            ElementMapping::QuadraticTet { nodes, .. } => nodes,
        }
    }

    /// Map a reference point to physical space.
    pub fn map_point(&self, p: Vec3) -> Result<Vec3, GeometryError> {
        if !contains(self.cell_kind(), p) {
            return Err(GeometryError::OutOfCell(p[0], p[1], p[2]));
        }
        Ok(self.map_point_unchecked(p))
    }

    pub fn map_point_unchecked(&self, p: Vec3) -> Vec3 {
        let vals = self.basis().eval_unchecked(p);
        let mut out = [0.0; 3];
        for (c, v) in self.coefficients().iter().zip(vals) {
            out = add(out, scale(*c, v));
        }
        out
    }

    /// Jacobian of the mapping and its determinant at a reference point.
    pub fn jacobian(&self, p: Vec3) -> (Mat3, f64) {
        let grads = self.basis().grad_unchecked(p);
        let mut j = Mat3::zero();
        for (c, g) in self.coefficients().iter().zip(grads) {
            for r in 0..3 {
                for k in 0..3 {
                    j.0[r][k] += c[r] * g[k];
                }
            }
        }
        let det = j.det();
        (j, det)
    }
}

#[derive(Debug, Clone)]
pub struct Mappings {
    items: Vec<ElementMapping>,
    n_tets: usize,
    pub mode: MappingMode,
    /// One geometric node per tetrahedron edge (sorted vertex pair).
    pub edge_nodes: BTreeMap<(usize, usize), Vec3>,
}

impl Mappings {
    pub fn get(&self, cell: CellId) -> &ElementMapping {
        match cell {
            CellId::Tet(i) => &self.items[i],
            CellId::Hex(i) => &self.items[self.n_tets + i],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &ElementMapping> {
        self.items.iter()
    }
}

/// Build the per-cell mappings. Hexahedron coefficients are the 8 vertices;
/// tetrahedron edge nodes follow the mode and the edge classification. Every
/// mapping is checked for `det J > 0` at the default quadrature points and at
/// the reference cell corners.
pub fn build_mappings(
    mesh: &HybridMesh,
    interfaces: &Interfaces,
    mode: MappingMode,
) -> Result<Mappings, GeometryError> {
    let class = tet_edge_classification(mesh, interfaces);
    let mut edge_nodes = BTreeMap::new();
    for (&(a, b), info) in &class.edges {
        if info.diagonal_quads.len() > 1
            || (!info.diagonal_quads.is_empty() && info.on_hex_edge)
        {
            return Err(GeometryError::ConflictingDiagonal(a, b));
        }
        let node = match (mode, info.label()) {
            (MappingMode::Quadratic, EdgeLabel::HexFaceDiagonal) => {
                let q = info.diagonal_quads[0];
                let mut c = [0.0; 3];
                for v in q {
                    c = add(c, scale(mesh.vertices[v], 0.25));
                }
                c
            }
            _ => scale(add(mesh.vertices[a], mesh.vertices[b]), 0.5),
        };
        edge_nodes.insert((a, b), node);
    }

    let mut items = Vec::with_capacity(mesh.n_cells());
    for (t, tet) in mesh.tets.iter().enumerate() {
        let mut nodes = [[0.0; 3]; 10];
        for (k, &v) in tet.iter().enumerate() {
            nodes[k] = mesh.vertices[v];
        }
        for (k, [i, j]) in TET_EDGES.iter().enumerate() {
            let key = crate::mesh::edge_key(tet[*i], tet[*j]);
            nodes[4 + k] = edge_nodes[&key];
        }
        items.push(ElementMapping::QuadraticTet { cell: t, nodes });
    }
    for (h, hex) in mesh.hexes.iter().enumerate() {
        let corners = hex.map(|v| mesh.vertices[v]);
        items.push(ElementMapping::TriAffineHex { cell: h, corners });
    }

    let mappings = Mappings {
        items,
        n_tets: mesh.tets.len(),
        mode,
        edge_nodes,
    };

    // Positivity check: quadrature points of the default rules plus corners.
    let tet_rule = quadrature_for(CellKind::Tet, 4).expect("default tet rule");
    let hex_rule = quadrature_for(CellKind::Hex, 3).expect("default hex rule");
    for cell in mesh.cell_ids() {
        let m = mappings.get(cell);
        let (rule_points, corners): (&[Vec3], &[Vec3]) = match m.cell_kind() {
            CellKind::Tet => (&tet_rule.points, &TET_VERTICES),
            CellKind::Hex => (&hex_rule.points, &HEX_VERTICES),
        };
        for p in rule_points.iter().chain(corners) {
            let (_, det) = m.jacobian(*p);
            if det <= 0.0 {
                return Err(GeometryError::InvertedElement { cell, det });
            }
        }
    }
    Ok(mappings)
}

/// Bi-affine quad patch `S(s,t)` spanned by 4 corners in cyclic order.
#[derive(Debug, Clone, Copy)]
pub struct BilinearPatch {
    pub corners: [Vec3; 4],
}

impl BilinearPatch {
    pub fn from_quad(mesh: &HybridMesh, quad: [usize; 4]) -> Self {
        BilinearPatch {
            corners: quad.map(|v| mesh.vertices[v]),
        }
    }

    pub fn eval(&self, s: f64, t: f64) -> Vec3 {
        let w = bilinear_weights(s, t);
        let mut out = [0.0; 3];
        for (wi, c) in w.iter().zip(&self.corners) {
            out = add(out, scale(*c, *wi));
        }
        out
    }

    fn partials(&self, s: f64, t: f64) -> (Vec3, Vec3, Vec3) {
        let [c0, c1, c2, c3] = self.corners;
        // S_s = (1-t)(c1-c0) + t(c2-c3); S_t = (1-s)(c3-c0) + s(c2-c1).
        let s_s = add(
            scale(sub(c1, c0), 1.0 - t),
            scale(sub(c2, c3), t),
        );
        let s_t = add(
            scale(sub(c3, c0), 1.0 - s),
            scale(sub(c2, c1), s),
        );
        // Constant twist term S_st = c0 - c1 + c2 - c3.
        let s_st = add(sub(c0, c1), sub(c2, c3));
        (s_s, s_t, s_st)
    }

    /// Closest-point projection onto the (unclamped) patch surface by Newton
    /// iteration on the squared distance. Returns (s, t, distance).
    pub fn project(&self, x: Vec3) -> (f64, f64, f64) {
        let mut best = self.project_from(x, 0.5, 0.5);
        if best.2 > 1e-9 {
            // Retry from a coarse grid for strongly twisted patches.
            for i in 0..3 {
                for j in 0..3 {
                    let cand =
                        self.project_from(x, 0.25 * (i as f64 + 1.0), 0.25 * (j as f64 + 1.0));
                    if cand.2 < best.2 {
                        best = cand;
                    }
                }
            }
        }
        best
    }

    fn project_from(&self, x: Vec3, mut s: f64, mut t: f64) -> (f64, f64, f64) {
        for _ in 0..60 {
            let r = sub(self.eval(s, t), x);
            let (s_s, s_t, s_st) = self.partials(s, t);
            let g = [crate::linalg::dot(s_s, r), crate::linalg::dot(s_t, r)];
            let h00 = crate::linalg::dot(s_s, s_s);
            let h11 = crate::linalg::dot(s_t, s_t);
            let h01 = crate::linalg::dot(s_s, s_t) + crate::linalg::dot(s_st, r);
            let det = h00 * h11 - h01 * h01;
            if det.abs() < 1e-300 {
                break;
            }
            let ds = (-g[0] * h11 + g[1] * h01) / det;
            let dt = (-h00 * g[1] + h01 * g[0]) / det;
            s += ds;
            t += dt;
            if ds.abs().max(dt.abs()) < 1e-14 {
                break;
            }
        }
        let d = dist(self.eval(s, t), x);
        (s, t, d)
    }
}

pub fn bilinear_weights(s: f64, t: f64) -> [f64; 4] {
    [
        (1.0 - s) * (1.0 - t),
        s * (1.0 - t),
        s * t,
        (1.0 - s) * t,
    ]
}

/// Barycentric sample grid on a triangle with roughly `n` points
/// (vertices, edge and interior points of a regular subdivision).
fn tri_sample_bary(n: usize) -> Vec<[f64; 3]> {
    let mut k = 1usize;
    while (k + 1) * (k + 2) / 2 < n {
        k += 1;
    }
    let mut out = Vec::new();
    for i in 0..=k {
        for j in 0..=(k - i) {
            let a = i as f64 / k as f64;
            let b = j as f64 / k as f64;
            out.push([a, b, 1.0 - a - b]);
        }
    }
    out
}

fn quad_sample_params(n: usize) -> Vec<(f64, f64)> {
    let m = (n as f64).sqrt().ceil() as usize;
    let m = m.max(2);
    let mut out = Vec::new();
    for i in 0..=m {
        for j in 0..=m {
            out.push((i as f64 / m as f64, j as f64 / m as f64));
        }
    }
    out
}

/// Local vertex indices of `globals` within the cell's vertex list.
fn local_indices(cell_verts: &[usize], globals: &[usize]) -> Vec<usize> {
    globals
        .iter()
        .map(|g| {
            cell_verts
                .iter()
                .position(|v| v == g)
                .expect("vertex must belong to the cell")
        })
        .collect()
}

/// One geometrically matched sample on an interface: reference points on both
/// sides whose physical images should coincide, and the measured gap between
/// them.
#[derive(Debug, Clone, Copy)]
pub struct MatchedSample {
    pub cell_a: CellId,
    pub p_a: Vec3,
    pub cell_b: CellId,
    pub p_b: Vec3,
    pub gap: f64,
}

/// Matched samples across one interface record.
///
/// Tet-tet and hex-hex interfaces are matched through the shared vertices
/// (same barycentric/bilinear weights on both sides). For a hybrid junction,
/// points are sampled on each tetrahedron's shared reference face and
/// projected onto the hexahedron's bi-affine face surface; the projection
/// distance is the geometric gap.
pub fn interface_samples(
    mesh: &HybridMesh,
    mappings: &Mappings,
    record: &InterfaceRecord,
    n_samples: usize,
) -> Vec<MatchedSample> {
    let mut out = Vec::new();
    match record {
        InterfaceRecord::TetTet { tets, tri } => {
            let la = local_indices(&mesh.tets[tets[0]], tri);
            let lb = local_indices(&mesh.tets[tets[1]], tri);
            let (ca, cb) = (CellId::Tet(tets[0]), CellId::Tet(tets[1]));
            for bary in tri_sample_bary(n_samples) {
                let mut p_a = [0.0; 3];
                let mut p_b = [0.0; 3];
                for (w, (&ia, &ib)) in bary.iter().zip(la.iter().zip(&lb)) {
                    p_a = add(p_a, scale(TET_VERTICES[ia], *w));
                    p_b = add(p_b, scale(TET_VERTICES[ib], *w));
                }
                let xa = mappings.get(ca).map_point_unchecked(p_a);
                let xb = mappings.get(cb).map_point_unchecked(p_b);
                out.push(MatchedSample {
                    cell_a: ca,
                    p_a,
                    cell_b: cb,
                    p_b,
                    gap: dist(xa, xb),
                });
            }
        }
        InterfaceRecord::HexHex { hexes, quad } => {
            let (ca, cb) = (CellId::Hex(hexes[0]), CellId::Hex(hexes[1]));
            let face_a = hex_local_face(mesh, hexes[0], quad);
            let cyc_b = hex_cyclic_face(mesh, hexes[1], quad);
            let face_b = hex_local_face(mesh, hexes[1], &cyc_b);
            // Position of each corner of B's cyclic order within A's.
            let perm: Vec<usize> = cyc_b
                .iter()
                .map(|g| quad.iter().position(|v| v == g).unwrap())
                .collect();
            for (s, t) in quad_sample_params(n_samples) {
                let w = bilinear_weights(s, t);
                let mut p_a = [0.0; 3];
                for (k, &wk) in w.iter().enumerate() {
                    p_a = add(p_a, scale(HEX_VERTICES[face_a[k]], wk));
                }
                let mut p_b = [0.0; 3];
                for k in 0..4 {
                    p_b = add(p_b, scale(HEX_VERTICES[face_b[k]], w[perm[k]]));
                }
                let xa = mappings.get(ca).map_point_unchecked(p_a);
                let xb = mappings.get(cb).map_point_unchecked(p_b);
                out.push(MatchedSample {
                    cell_a: ca,
                    p_a,
                    cell_b: cb,
                    p_b,
                    gap: dist(xa, xb),
                });
            }
        }
        InterfaceRecord::HybridJunction(j) => {
            let patch = BilinearPatch::from_quad(mesh, j.quad);
            let hex_face = hex_local_face(mesh, j.hex, &j.quad);
            let ch = CellId::Hex(j.hex);
            for (side, tet) in j.tets.into_iter().enumerate() {
                let tri = [j.diagonal[0], j.diagonal[1], j.others[side]];
                let lt = local_indices(&mesh.tets[tet], &tri);
                let ct = CellId::Tet(tet);
                for bary in tri_sample_bary(n_samples) {
                    let mut p_t = [0.0; 3];
                    for (w, &ia) in bary.iter().zip(&lt) {
                        p_t = add(p_t, scale(TET_VERTICES[ia], *w));
                    }
                    let x = mappings.get(ct).map_point_unchecked(p_t);
                    let (s, t, gap) = patch.project(x);
                    let w = bilinear_weights(s, t);
                    let mut p_h = [0.0; 3];
                    for (k, &wk) in w.iter().enumerate() {
                        p_h = add(p_h, scale(HEX_VERTICES[hex_face[k]], wk));
                    }
                    out.push(MatchedSample {
                        cell_a: ct,
                        p_a: p_t,
                        cell_b: ch,
                        p_b: p_h,
                        gap,
                    });
                }
            }
        }
    }
    out
}

/// Local (reference) vertex indices of the hex face whose global cyclic order
/// is `quad`.
fn hex_local_face(mesh: &HybridMesh, hex: usize, quad: &[usize; 4]) -> [usize; 4] {
    let h = &mesh.hexes[hex];
    let faces = mesh.hex_faces(hex);
    for (f, face) in faces.iter().enumerate() {
        let mut sorted_a = *face;
        let mut sorted_b = *quad;
        sorted_a.sort_unstable();
        sorted_b.sort_unstable();
        if sorted_a == sorted_b {
            // Map the requested cyclic order onto local indices.
            return quad.map(|g| {
                HEX_FACES[f]
                    .into_iter()
                    .find(|&l| h[l] == g)
                    .expect("face vertex")
            });
        }
    }
    panic!("quad {quad:?} is not a face of hex {hex}");
}

/// The hex's own cyclic order of the face with the same vertex set as `quad`.
fn hex_cyclic_face(mesh: &HybridMesh, hex: usize, quad: &[usize; 4]) -> [usize; 4] {
    let faces = mesh.hex_faces(hex);
    let mut want = *quad;
    want.sort_unstable();
    for face in faces {
        let mut s = face;
        s.sort_unstable();
        if s == want {
            return face;
        }
    }
    panic!("quad {quad:?} is not a face of hex {hex}");
}

/// Maximum geometric gap for each interface record, in the order of
/// `interfaces.records`.
pub fn check_geometric_continuity(
    mesh: &HybridMesh,
    mappings: &Mappings,
    interfaces: &Interfaces,
    n_samples: usize,
) -> Vec<f64> {
    interfaces
        .records
        .iter()
        .map(|record| {
            interface_samples(mesh, mappings, record, n_samples)
                .iter()
                .fold(0.0f64, |m, s| m.max(s.gap))
        })
        .collect()
}

//! Reference tetrahedron and hexahedron: Lagrange bases and quadrature.
//!
//! The reference tetrahedron has vertices (0,0,0), (1,0,0), (0,1,0), (0,0,1);
//! the reference hexahedron is the unit cube. The hexahedron vertex numbering
//! is the single source of truth for mesh files and face templates:
//!
//! ```text
//!   q0=(0,0,0) q1=(1,0,0) q2=(1,1,0) q3=(0,1,0)
//!   q4=(0,0,1) q5=(1,0,1) q6=(1,1,1) q7=(0,1,1)
//! ```
//!
//! Bases: `P1` (barycentric, 4 nodes), `P2` (4 vertices + 6 edge midpoints)
//! and `Q1` (tri-affine, 8 vertices). Basis functions are products/combinations
//! of the barycentric coordinates or of the per-axis factors `t`, `1-t`, so
//! each basis is the Lagrange basis of its node set.

use thiserror::Error;

use crate::linalg::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum RefElemError {
    #[error("point ({0}, {1}, {2}) lies outside the reference cell")]
    OutOfCell(f64, f64, f64),
    #[error("no {cell:?} quadrature rule with exactness degree {requested} (max {max})")]
    UnsupportedDegree {
        cell: CellKind,
        requested: usize,
        max: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Tet,
    Hex,
}

/// Vertices of the reference tetrahedron.
pub const TET_VERTICES: [Vec3; 4] = [
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
];

/// Local vertex pairs of the 6 tetrahedron edges; fixes the P2 node ordering
/// (nodes 4..10 are the midpoints of these edges, in this order).
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local vertex triples of the 4 tetrahedron faces; face k is opposite vertex k.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// Vertices of the reference hexahedron (unit cube), appendix ordering.
pub const HEX_VERTICES: [Vec3; 8] = [
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [1.0, 1.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [1.0, 0.0, 1.0],
    [1.0, 1.0, 1.0],
    [0.0, 1.0, 1.0],
];

/// Local vertex pairs of the 12 hexahedron edges.
pub const HEX_EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// The 6 hexahedron faces as local vertex 4-tuples in cyclic order with
/// outward orientation. Derived from the vertex numbering above; every hex
/// in a mesh uses this template.
pub const HEX_FACES: [[usize; 4]; 6] = [
    [0, 3, 2, 1], // bottom, outward -z
    [4, 5, 6, 7], // top, outward +z
    [0, 1, 5, 4], // front, outward -y
    [1, 2, 6, 5], // right, outward +x
    [2, 3, 7, 6], // back, outward +y
    [3, 0, 4, 7], // left, outward -x
];

const INSIDE_TOL: f64 = 1e-12;

/// True if `p` lies in the closed reference cell, with tolerance 1e-12.
pub fn contains(cell: CellKind, p: Vec3) -> bool {
    match cell {
        CellKind::Tet => {
            p[0] >= -INSIDE_TOL
                && p[1] >= -INSIDE_TOL
                && p[2] >= -INSIDE_TOL
                && p[0] + p[1] + p[2] <= 1.0 + INSIDE_TOL
        }
        CellKind::Hex => p
            .iter()
            .all(|&t| (-INSIDE_TOL..=1.0 + INSIDE_TOL).contains(&t)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    P1,
    P2,
    Q1,
}

impl BasisKind {
    pub fn cell_kind(self) -> CellKind {
        match self {
            BasisKind::P1 | BasisKind::P2 => CellKind::Tet,
            BasisKind::Q1 => CellKind::Hex,
        }
    }

    pub fn node_count(self) -> usize {
        match self {
            BasisKind::P1 => 4,
            BasisKind::P2 => 10,
            BasisKind::Q1 => 8,
        }
    }

    /// Reference coordinates of the Lagrange nodes.
    pub fn node_coords(self) -> Vec<Vec3> {
        match self {
            BasisKind::P1 => TET_VERTICES.to_vec(),
            BasisKind::P2 => {
                let mut nodes = TET_VERTICES.to_vec();
                for [i, j] in TET_EDGES {
                    let a = TET_VERTICES[i];
                    let b = TET_VERTICES[j];
                    nodes.push([
                        0.5 * (a[0] + b[0]),
                        0.5 * (a[1] + b[1]),
                        0.5 * (a[2] + b[2]),
                    ]);
                }
                nodes
            }
            BasisKind::Q1 => HEX_VERTICES.to_vec(),
        }
    }

    /// Basis values at `p`, checking that `p` lies in the reference cell.
    pub fn eval(self, p: Vec3) -> Result<Vec<f64>, RefElemError> {
        if !contains(self.cell_kind(), p) {
            return Err(RefElemError::OutOfCell(p[0], p[1], p[2]));
        }
        Ok(self.eval_unchecked(p))
    }

    /// Basis gradients at `p` (node_count x 3), with the same domain check.
    pub fn grad(self, p: Vec3) -> Result<Vec<Vec3>, RefElemError> {
        if !contains(self.cell_kind(), p) {
            return Err(RefElemError::OutOfCell(p[0], p[1], p[2]));
        }
        Ok(self.grad_unchecked(p))
    }

    pub fn eval_unchecked(self, p: Vec3) -> Vec<f64> {
        let [u, v, w] = p;
        match self {
            BasisKind::P1 => vec![1.0 - u - v - w, u, v, w],
            BasisKind::P2 => {
                let lam = [1.0 - u - v - w, u, v, w];
                let mut out = Vec::with_capacity(10);
                for l in lam {
                    out.push(l * (2.0 * l - 1.0));
                }
                for [i, j] in TET_EDGES {
                    out.push(4.0 * lam[i] * lam[j]);
                }
                out
            }
            BasisKind::Q1 => {
                let f = |b: f64, t: f64| if b == 0.0 { 1.0 - t } else { t };
                HEX_VERTICES
                    .iter()
                    .map(|q| f(q[0], u) * f(q[1], v) * f(q[2], w))
                    .collect()
            }
        }
    }

    pub fn grad_unchecked(self, p: Vec3) -> Vec<Vec3> {
        let [u, v, w] = p;
        const GRAD_LAM: [Vec3; 4] = [
            [-1.0, -1.0, -1.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        match self {
            BasisKind::P1 => GRAD_LAM.to_vec(),
            BasisKind::P2 => {
                let lam = [1.0 - u - v - w, u, v, w];
                let mut out = Vec::with_capacity(10);
                for i in 0..4 {
                    let c = 4.0 * lam[i] - 1.0;
                    out.push([c * GRAD_LAM[i][0], c * GRAD_LAM[i][1], c * GRAD_LAM[i][2]]);
                }
                for [i, j] in TET_EDGES {
                    out.push([
                        4.0 * (lam[j] * GRAD_LAM[i][0] + lam[i] * GRAD_LAM[j][0]),
                        4.0 * (lam[j] * GRAD_LAM[i][1] + lam[i] * GRAD_LAM[j][1]),
                        4.0 * (lam[j] * GRAD_LAM[i][2] + lam[i] * GRAD_LAM[j][2]),
                    ]);
                }
                out
            }
            BasisKind::Q1 => {
                let f = |b: f64, t: f64| if b == 0.0 { 1.0 - t } else { t };
                let df = |b: f64| if b == 0.0 { -1.0 } else { 1.0 };
                HEX_VERTICES
                    .iter()
                    .map(|q| {
                        [
                            df(q[0]) * f(q[1], v) * f(q[2], w),
                            f(q[0], u) * df(q[1]) * f(q[2], w),
                            f(q[0], u) * f(q[1], v) * df(q[2]),
                        ]
                    })
                    .collect()
            }
        }
    }
}

/// Quadrature rule on a reference cell. Weights are positive and sum to the
/// reference volume (1/6 for the tetrahedron, 1 for the hexahedron).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub cell: CellKind,
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

/// Gauss-Legendre nodes and weights on [0, 1]; n in 1..=5 (degree 2n-1).
fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Nodes/weights on [-1, 1].
    let (t, w): (Vec<f64>, Vec<f64>) = match n {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 0.577_350_269_189_625_7;
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = 0.774_596_669_241_483_4;
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let a = 0.339_981_043_584_856_26;
            let b = 0.861_136_311_594_052_6;
            let wa = 0.652_145_154_862_546_1;
            let wb = 0.347_854_845_137_453_86;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        5 => {
            let a = 0.538_469_310_105_683_1;
            let b = 0.906_179_845_938_664;
            let wa = 0.478_628_670_499_366_47;
            let wb = 0.236_926_885_056_189_08;
            let w0 = 0.568_888_888_888_888_9;
            (vec![-b, -a, 0.0, a, b], vec![wb, wa, w0, wa, wb])
        }
        _ => unreachable!("gauss_legendre_01 called with n = {n}"),
    };
    (
        t.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        w.iter().map(|x| 0.5 * x).collect(),
    )
}

const MAX_HEX_DEGREE: usize = 9;
const MAX_TET_DEGREE: usize = 6;

/// Build a quadrature rule exact for all monomials up to `min_exact_degree`
/// (per axis on the hexahedron, total degree on the tetrahedron).
///
/// Hexahedron rules are tensor Gauss-Legendre. Tetrahedron rules are the
/// centroid rule (degree 1), the symmetric 4-point rule (degree 2), and for
/// degrees 3..=6 a collapsed-coordinate tensor rule: the unit cube is mapped
/// onto the simplex by u = x, v = y(1-x), w = z(1-x)(1-y), whose Jacobian
/// (1-x)^2 (1-y) is folded into the weights, so exactness follows from the
/// per-axis Gauss degrees and all weights stay positive.
pub fn quadrature_for(
    cell: CellKind,
    min_exact_degree: usize,
) -> Result<QuadratureRule, RefElemError> {
    match cell {
        CellKind::Hex => {
            if min_exact_degree > MAX_HEX_DEGREE {
                return Err(RefElemError::UnsupportedDegree {
                    cell,
                    requested: min_exact_degree,
                    max: MAX_HEX_DEGREE,
                });
            }
            let n = min_exact_degree / 2 + 1;
            let (x, w) = gauss_legendre_01(n);
            let mut points = Vec::with_capacity(n * n * n);
            let mut weights = Vec::with_capacity(n * n * n);
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        points.push([x[i], x[j], x[k]]);
                        weights.push(w[i] * w[j] * w[k]);
                    }
                }
            }
            Ok(QuadratureRule {
                cell,
                points,
                weights,
                exact_degree: min_exact_degree,
            })
        }
        CellKind::Tet => {
            if min_exact_degree > MAX_TET_DEGREE {
                return Err(RefElemError::UnsupportedDegree {
                    cell,
                    requested: min_exact_degree,
                    max: MAX_TET_DEGREE,
                });
            }
            match min_exact_degree {
                0 | 1 => Ok(QuadratureRule {
                    cell,
                    points: vec![[0.25, 0.25, 0.25]],
                    weights: vec![1.0 / 6.0],
                    exact_degree: 1,
                }),
                2 => {
                    // Symmetric 4-point rule: barycentric (a, b, b, b).
                    let a = 0.585_410_196_624_968_5;
                    let b = 0.138_196_601_125_010_5;
                    let points = vec![[b, b, b], [a, b, b], [b, a, b], [b, b, a]];
                    let weights = vec![1.0 / 24.0; 4];
                    Ok(QuadratureRule {
                        cell,
                        points,
                        weights,
                        exact_degree: 2,
                    })
                }
                d => {
                    let n_x = (d + 3).div_ceil(2);
                    let n_y = (d + 2).div_ceil(2);
                    let n_z = (d + 1).div_ceil(2);
                    let (gx, wx) = gauss_legendre_01(n_x);
                    let (gy, wy) = gauss_legendre_01(n_y);
                    let (gz, wz) = gauss_legendre_01(n_z);
                    let mut points = Vec::with_capacity(n_x * n_y * n_z);
                    let mut weights = Vec::with_capacity(n_x * n_y * n_z);
                    for i in 0..n_x {
                        for j in 0..n_y {
                            for k in 0..n_z {
                                let u = gx[i];
                                let v = gy[j] * (1.0 - u);
                                let w = gz[k] * (1.0 - u - v);
                                points.push([u, v, w]);
                                weights.push(
                                    wx[i] * wy[j]
                                        * wz[k]
                                        * (1.0 - gx[i]).powi(2)
                                        * (1.0 - gy[j]),
                                );
                            }
                        }
                    }
                    Ok(QuadratureRule {
                        cell,
                        points,
                        weights,
                        exact_degree: d,
                    })
                }
            }
        }
    }
}

//! Galerkin assembly of the Poisson and linear elasticity weak forms,
//! Dirichlet elimination and the solve entry point.
//!
//! Element integrals are computed on reference cells with the change of
//! variables `|det J|` and the chain rule for gradients. Two equivalent
//! reduction routes are provided: the default assembles each element matrix
//! in the raw nodal basis and immediately folds it through the cell's rows of
//! the prolongation (direct constrained assembly); [`assemble_unreduced`] +
//! [`reduce_unreduced`] build the full raw system first and reduce it as
//! `P^T A P`, which is kept as the slower algebraic cross-check.
//!
//! Vector problems use a component-blocked layout: system dof = component *
//! n_free + free dof, with the scalar prolongation applied per component.
//! The elasticity form is `lambda (div u)(div v) + 2 mu eps(u):eps(v)` with
//! `eps(u) = (grad u + grad u^T) / 2`, under pure Dirichlet conditions
//! (no boundary traction term).

use thiserror::Error;

use crate::geometry::Mappings;
use crate::linalg::Vec3;
use crate::mesh::{CellId, HybridMesh};
use crate::refelem::{quadrature_for, BasisKind, CellKind, QuadratureRule, RefElemError};
use crate::sparse::{solve_cg, CgOptions, CooMatrix, CsrMatrix, SolveError};
use crate::spaces::DofSystem;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("quadrature degree {requested} for {cell:?} is below the documented minimum {minimum}")]
    QuadratureTooWeak {
        cell: CellKind,
        requested: usize,
        minimum: usize,
    },
    #[error("elasticity requires positive Lame coefficients, got lambda = {lambda}, mu = {mu}")]
    InvalidCoefficients { lambda: f64, mu: f64 },
    #[error(transparent)]
    RefElem(#[from] RefElemError),
}

pub type ScalarFn = Box<dyn Fn(Vec3) -> f64 + Send + Sync>;
pub type VectorFn = Box<dyn Fn(Vec3) -> [f64; 3] + Send + Sync>;

/// A scalar or vector field given as a callable on physical coordinates.
pub enum FieldFn {
    Scalar(ScalarFn),
    Vector(VectorFn),
}

impl FieldFn {
    pub fn zero_scalar() -> Self {
        FieldFn::Scalar(Box::new(|_| 0.0))
    }

    pub fn zero_vector() -> Self {
        FieldFn::Vector(Box::new(|_| [0.0; 3]))
    }

    pub fn n_components(&self) -> usize {
        match self {
            FieldFn::Scalar(_) => 1,
            FieldFn::Vector(_) => 3,
        }
    }

    pub fn eval_component(&self, x: Vec3, c: usize) -> f64 {
        match self {
            FieldFn::Scalar(f) => f(x),
            FieldFn::Vector(f) => f(x)[c],
        }
    }
}

impl std::fmt::Debug for FieldFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldFn::Scalar(_) => f.write_str("FieldFn::Scalar(..)"),
            FieldFn::Vector(_) => f.write_str("FieldFn::Vector(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeakFormKind {
    PoissonDirichlet,
    ElasticityDirichlet,
}

#[derive(Debug)]
pub struct WeakForm {
    pub kind: WeakFormKind,
    /// Lame coefficients (lambda, mu); unused by Poisson.
    pub lame: (f64, f64),
    pub source: FieldFn,
    pub dirichlet: FieldFn,
}

impl WeakForm {
    pub fn poisson(source: ScalarFn, dirichlet: ScalarFn) -> Self {
        WeakForm {
            kind: WeakFormKind::PoissonDirichlet,
            lame: (0.0, 0.0),
            source: FieldFn::Scalar(source),
            dirichlet: FieldFn::Scalar(dirichlet),
        }
    }

    pub fn elasticity(
        lambda: f64,
        mu: f64,
        source: VectorFn,
        dirichlet: VectorFn,
    ) -> Result<Self, AssemblyError> {
        if lambda <= 0.0 || mu <= 0.0 {
            return Err(AssemblyError::InvalidCoefficients { lambda, mu });
        }
        Ok(WeakForm {
            kind: WeakFormKind::ElasticityDirichlet,
            lame: (lambda, mu),
            source: FieldFn::Vector(source),
            dirichlet: FieldFn::Vector(dirichlet),
        })
    }

    pub fn n_components(&self) -> usize {
        match self.kind {
            WeakFormKind::PoissonDirichlet => 1,
            WeakFormKind::ElasticityDirichlet => 3,
        }
    }
}

/// Quadrature exactness degrees for assembly: per-axis on hexahedra, total
/// degree on tetrahedra. Source terms integrate one degree higher.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub hex_degree: usize,
    pub tet_degree: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        // Quadratic tet mappings make Jacobians non-constant, so both
        // defaults sit above the affine-geometry minimum of 2.
        QuadratureSpec {
            hex_degree: 3,
            tet_degree: 4,
        }
    }
}

const MIN_DEGREE: usize = 2;

/// Reduced symmetric system; built without boundary conditions, then
/// modified in place by [`apply_dirichlet`].
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub n_free: usize,
    pub n_components: usize,
    /// Dirichlet (system dof, value) pairs once applied.
    pub bc: Vec<(usize, f64)>,
}

impl SparseSystem {
    pub fn n_system(&self) -> usize {
        self.n_free * self.n_components
    }

    /// Energy x^T A x of a system vector.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let ax = self.matrix.mul_vec_alloc(x);
        x.iter().zip(&ax).map(|(a, b)| a * b).sum()
    }
}

/// Number of worker threads for element integration: `HYBRIDFEM_THREADS`
/// caps the machine's available parallelism.
fn assembly_threads(n_cells: usize) -> usize {
    let hw = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let cap = std::env::var("HYBRIDFEM_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(hw);
    cap.min(hw).min(n_cells.max(1))
}

struct BasisTable {
    rule: QuadratureRule,
    vals: Vec<Vec<f64>>,
    grads: Vec<Vec<Vec3>>,
}

fn tabulate(basis: BasisKind, degree: usize) -> Result<BasisTable, AssemblyError> {
    let rule = quadrature_for(basis.cell_kind(), degree)?;
    let vals = rule.points.iter().map(|&p| basis.eval_unchecked(p)).collect();
    let grads = rule.points.iter().map(|&p| basis.grad_unchecked(p)).collect();
    Ok(BasisTable { rule, vals, grads })
}

fn check_degrees(quad: QuadratureSpec) -> Result<(), AssemblyError> {
    if quad.hex_degree < MIN_DEGREE {
        return Err(AssemblyError::QuadratureTooWeak {
            cell: CellKind::Hex,
            requested: quad.hex_degree,
            minimum: MIN_DEGREE,
        });
    }
    if quad.tet_degree < MIN_DEGREE {
        return Err(AssemblyError::QuadratureTooWeak {
            cell: CellKind::Tet,
            requested: quad.tet_degree,
            minimum: MIN_DEGREE,
        });
    }
    Ok(())
}

/// Raw element stiffness at one quadrature point, scattered into `local`.
/// `phys_grads` holds J^-T grad N per node; scalar and elasticity variants.
fn accumulate_local(
    kind: WeakFormKind,
    lame: (f64, f64),
    w_det: f64,
    phys_grads: &[Vec3],
    local: &mut [f64],
    n_nodes: usize,
) {
    match kind {
        WeakFormKind::PoissonDirichlet => {
            for a in 0..n_nodes {
                let ga = phys_grads[a];
                for b in 0..n_nodes {
                    let gb = phys_grads[b];
                    local[a * n_nodes + b] +=
                        w_det * (ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2]);
                }
            }
        }
        WeakFormKind::ElasticityDirichlet => {
            let (lambda, mu) = lame;
            let dim = 3 * n_nodes;
            for a in 0..n_nodes {
                let ga = phys_grads[a];
                for b in 0..n_nodes {
                    let gb = phys_grads[b];
                    let dot = ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2];
                    for c in 0..3 {
                        for d in 0..3 {
                            // lambda d_c N_a d_d N_b
                            //   + mu (delta_cd grad.grad + d_d N_a d_c N_b)
                            let mut v = lambda * ga[c] * gb[d] + mu * ga[d] * gb[c];
                            if c == d {
                                v += mu * dot;
                            }
                            local[(c * n_nodes + a) * dim + (d * n_nodes + b)] += w_det * v;
                        }
                    }
                }
            }
        }
    }
}

/// Per local node: (position in the cell support list, coefficient).
type LocalProlongation = Vec<Vec<(usize, f64)>>;

/// Rows of the prolongation for the cell's raw dofs, with columns remapped to
/// positions in the cell's (sorted) support list.
fn local_prolongation(dofs: &DofSystem, cell: CellId) -> (LocalProlongation, &[u32]) {
    let support = dofs.cell_support(cell);
    let rows = dofs
        .cell_raw_dofs(cell)
        .iter()
        .map(|&raw| {
            let (cols, vals) = dofs.prolongation.row(raw);
            cols.iter()
                .zip(vals)
                .map(|(c, v)| {
                    let pos = support.binary_search(c).expect("support must cover row");
                    (pos, *v)
                })
                .collect()
        })
        .collect();
    (rows, support)
}

/// Assemble the reduced Galerkin system by direct constrained assembly:
/// element matrices in the raw basis are folded through the local rows of the
/// prolongation while being scattered.
pub fn assemble(
    mesh: &HybridMesh,
    mappings: &Mappings,
    dofs: &DofSystem,
    form: &WeakForm,
    quad: QuadratureSpec,
) -> Result<SparseSystem, AssemblyError> {
    check_degrees(quad)?;
    let ncomp = form.n_components();
    let n_sys = dofs.n_free * ncomp;

    let stiff_tet = tabulate(BasisKind::P2, quad.tet_degree)?;
    let stiff_hex = tabulate(BasisKind::Q1, quad.hex_degree)?;
    let src_tet = tabulate(BasisKind::P2, (quad.tet_degree + 1).min(6))?;
    let src_hex = tabulate(BasisKind::Q1, (quad.hex_degree + 1).min(9))?;

    let cells: Vec<CellId> = mesh.cell_ids().collect();
    let n_threads = assembly_threads(cells.len());
    let chunk = cells.len().div_ceil(n_threads);

    type Part = (CooMatrix, Vec<f64>);
    let worker = |slice: &[CellId]| -> Part {
        let mut coo = CooMatrix::new(n_sys, n_sys);
        let mut rhs = vec![0.0; n_sys];
        let mut local = Vec::new();
        let mut reduced = Vec::new();
        let mut phys_grads: Vec<Vec3> = Vec::new();
        for &cell in slice {
            let mapping = mappings.get(cell);
            let (stiff, src) = match cell {
                CellId::Tet(_) => (&stiff_tet, &src_tet),
                CellId::Hex(_) => (&stiff_hex, &src_hex),
            };
            let n_nodes = dofs.cell_basis(cell).node_count();
            let dim = n_nodes * ncomp;
            local.clear();
            local.resize(dim * dim, 0.0);

            for (q, &p) in stiff.rule.points.iter().enumerate() {
                let (j, det) = mapping.jacobian(p);
                let jinv_t = j.inv_transpose().expect("non-degenerate mapping");
                phys_grads.clear();
                for g in &stiff.grads[q] {
                    phys_grads.push(jinv_t.mul_vec(*g));
                }
                accumulate_local(
                    form.kind,
                    form.lame,
                    stiff.rule.weights[q] * det.abs(),
                    &phys_grads,
                    &mut local,
                    n_nodes,
                );
            }

            // Fold through the prolongation and scatter.
            let (p_loc, support) = local_prolongation(dofs, cell);
            let ns = support.len();
            reduced.clear();
            reduced.resize(ns * ncomp * ns * ncomp, 0.0);
            for a in 0..n_nodes {
                for &(sa, ca) in &p_loc[a] {
                    for b in 0..n_nodes {
                        for &(sb, cb) in &p_loc[b] {
                            let w = ca * cb;
                            for c in 0..ncomp {
                                for d in 0..ncomp {
                                    reduced[(c * ns + sa) * ns * ncomp + (d * ns + sb)] += w
                                        * local[(c * n_nodes + a) * dim + (d * n_nodes + b)];
                                }
                            }
                        }
                    }
                }
            }
            for c in 0..ncomp {
                for (sa, &ga) in support.iter().enumerate() {
                    let row = c * dofs.n_free + ga as usize;
                    for d in 0..ncomp {
                        for (sb, &gb) in support.iter().enumerate() {
                            let v = reduced[(c * ns + sa) * ns * ncomp + (d * ns + sb)];
                            if v != 0.0 {
                                coo.push(row, d * dofs.n_free + gb as usize, v);
                            }
                        }
                    }
                }
            }

            // Source term, one degree higher.
            let mut b_loc = vec![0.0; dim];
            for (q, &p) in src.rule.points.iter().enumerate() {
                let (_, det) = mapping.jacobian(p);
                let x = mapping.map_point_unchecked(p);
                let w = src.rule.weights[q] * det.abs();
                for c in 0..ncomp {
                    let fc = form.source.eval_component(x, c);
                    if fc != 0.0 {
                        for n in 0..n_nodes {
                            b_loc[c * n_nodes + n] += w * fc * src.vals[q][n];
                        }
                    }
                }
            }
            for (n, rows) in p_loc.iter().enumerate() {
                for &(s, cv) in rows {
                    let g = support[s] as usize;
                    for c in 0..ncomp {
                        rhs[c * dofs.n_free + g] += cv * b_loc[c * n_nodes + n];
                    }
                }
            }
        }
        (coo, rhs)
    };

    let mut parts: Vec<Part> = Vec::new();
    if n_threads <= 1 {
        parts.push(worker(&cells));
    } else {
        let results: Vec<_> = std::thread::scope(|scope| {
            let handles: Vec<_> = cells
                .chunks(chunk)
                .map(|slice| scope.spawn(move || worker(slice)))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        parts.extend(results);
    }

    let mut coo = CooMatrix::new(n_sys, n_sys);
    let mut rhs = vec![0.0; n_sys];
    for (part_coo, part_rhs) in parts {
        coo.extend(part_coo);
        for (acc, v) in rhs.iter_mut().zip(part_rhs) {
            *acc += v;
        }
    }
    Ok(SparseSystem {
        matrix: coo.to_csr(),
        rhs,
        n_free: dofs.n_free,
        n_components: ncomp,
        bc: Vec::new(),
    })
}

/// Assemble the full system in the raw nodal basis (no constraints applied):
/// the reduction oracle for [`assemble`]. Single-threaded.
pub fn assemble_unreduced(
    mesh: &HybridMesh,
    mappings: &Mappings,
    dofs: &DofSystem,
    form: &WeakForm,
    quad: QuadratureSpec,
) -> Result<(CsrMatrix, Vec<f64>), AssemblyError> {
    check_degrees(quad)?;
    let ncomp = form.n_components();
    let n_sys = dofs.n_raw * ncomp;
    let stiff_tet = tabulate(BasisKind::P2, quad.tet_degree)?;
    let stiff_hex = tabulate(BasisKind::Q1, quad.hex_degree)?;
    let src_tet = tabulate(BasisKind::P2, (quad.tet_degree + 1).min(6))?;
    let src_hex = tabulate(BasisKind::Q1, (quad.hex_degree + 1).min(9))?;

    let mut coo = CooMatrix::new(n_sys, n_sys);
    let mut rhs = vec![0.0; n_sys];
    let mut local = Vec::new();
    let mut phys_grads: Vec<Vec3> = Vec::new();
    for cell in mesh.cell_ids() {
        let mapping = mappings.get(cell);
        let (stiff, src) = match cell {
            CellId::Tet(_) => (&stiff_tet, &src_tet),
            CellId::Hex(_) => (&stiff_hex, &src_hex),
        };
        let n_nodes = dofs.cell_basis(cell).node_count();
        let dim = n_nodes * ncomp;
        local.clear();
        local.resize(dim * dim, 0.0);
        for (q, &p) in stiff.rule.points.iter().enumerate() {
            let (j, det) = mapping.jacobian(p);
            let jinv_t = j.inv_transpose().expect("non-degenerate mapping");
            phys_grads.clear();
            for g in &stiff.grads[q] {
                phys_grads.push(jinv_t.mul_vec(*g));
            }
            accumulate_local(
                form.kind,
                form.lame,
                stiff.rule.weights[q] * det.abs(),
                &phys_grads,
                &mut local,
                n_nodes,
            );
        }
        let raws = dofs.cell_raw_dofs(cell);
        for c in 0..ncomp {
            for (a, &ra) in raws.iter().enumerate() {
                for d in 0..ncomp {
                    for (b, &rb) in raws.iter().enumerate() {
                        let v = local[(c * n_nodes + a) * dim + (d * n_nodes + b)];
                        if v != 0.0 {
                            coo.push(c * dofs.n_raw + ra, d * dofs.n_raw + rb, v);
                        }
                    }
                }
            }
        }
        for (q, &p) in src.rule.points.iter().enumerate() {
            let (_, det) = mapping.jacobian(p);
            let x = mapping.map_point_unchecked(p);
            let w = src.rule.weights[q] * det.abs();
            for c in 0..ncomp {
                let fc = form.source.eval_component(x, c);
                if fc != 0.0 {
                    for (n, &rn) in raws.iter().enumerate() {
                        rhs[c * dofs.n_raw + rn] += w * fc * src.vals[q][n];
                    }
                }
            }
        }
    }
    Ok((coo.to_csr(), rhs))
}

/// Reduce a raw system through the prolongation: `A_f = P^T A P`,
/// `b_f = P^T b`, with one block of `P` per component.
pub fn reduce_unreduced(
    dofs: &DofSystem,
    raw_matrix: &CsrMatrix,
    raw_rhs: &[f64],
    n_components: usize,
) -> SparseSystem {
    let p = &dofs.prolongation;
    let mut big = CooMatrix::new(dofs.n_raw * n_components, dofs.n_free * n_components);
    for r in 0..dofs.n_raw {
        let (cols, vals) = p.row(r);
        for (c, v) in cols.iter().zip(vals) {
            for comp in 0..n_components {
                big.push(
                    comp * dofs.n_raw + r,
                    comp * dofs.n_free + *c as usize,
                    *v,
                );
            }
        }
    }
    let p_sys = big.to_csr();
    let pt = p_sys.transpose();
    let matrix = pt.multiply(&raw_matrix.multiply(&p_sys));
    let rhs = pt.mul_vec_alloc(raw_rhs);
    SparseSystem {
        matrix,
        rhs,
        n_free: dofs.n_free,
        n_components,
        bc: Vec::new(),
    }
}

/// Impose Dirichlet values by symmetric elimination: the right-hand side is
/// lifted by `-A x_bc`, then constrained rows and columns are replaced by the
/// identity and the prescribed values.
pub fn apply_dirichlet(system: &mut SparseSystem, dofs: &DofSystem, value: &FieldFn) {
    let n_sys = system.n_system();
    let mut is_bc = vec![false; n_sys];
    let mut x_bc = vec![0.0; n_sys];
    let mut bc = Vec::new();
    for comp in 0..system.n_components {
        for free in 0..dofs.n_free {
            if dofs.dirichlet_mask[free] {
                let sys = comp * dofs.n_free + free;
                let v = value.eval_component(dofs.free_positions[free], comp);
                is_bc[sys] = true;
                x_bc[sys] = v;
                bc.push((sys, v));
            }
        }
    }
    let lift = system.matrix.mul_vec_alloc(&x_bc);
    for i in 0..n_sys {
        if !is_bc[i] {
            system.rhs[i] -= lift[i];
        }
    }
    let mut coo = CooMatrix::new(n_sys, n_sys);
    for r in 0..n_sys {
        if is_bc[r] {
            coo.push(r, r, 1.0);
            system.rhs[r] = x_bc[r];
            continue;
        }
        let (cols, vals) = system.matrix.row(r);
        for (c, v) in cols.iter().zip(vals) {
            if !is_bc[*c as usize] {
                coo.push(r, *c as usize, *v);
            }
        }
    }
    system.matrix = coo.to_csr();
    system.bc = bc;
}

/// Solve the (SPD) system by conjugate gradients.
pub fn solve(system: &SparseSystem, opts: CgOptions) -> Result<(Vec<f64>, usize), SolveError> {
    solve_cg(&system.matrix, &system.rhs, opts)
}

//! Problem harness: perturbed-cube mesh generation, manufactured solutions,
//! L2 errors and refinement studies.
//!
//! Meshes are built by (a) dividing the unit cube into n^3 cells, (b)
//! displacing interior vertices by a uniform random vector of up to `d` times
//! the mean edge length per component (boundary vertices stay put), and (c)
//! converting a seeded random subset of the cells into 6 tetrahedra each.
//! The 6-tet template is the corner-based (Kuhn) decomposition applied with
//! the same orientation in every converted cell, so neighboring converted
//! cells share their face diagonals and hex-tet contacts form valid two-tet
//! junction covers; with the grid numbering every face splits along the
//! diagonal through the face's lowest-index vertex.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::assembly::{
    apply_dirichlet, assemble, solve, AssemblyError, FieldFn, QuadratureSpec, WeakForm,
};
use crate::geometry::{build_mappings, GeometryError, MappingMode, Mappings};
use crate::linalg::{cross, dot, norm, sub, Vec3};
use crate::mesh::{build_interfaces, validate_spec, HybridMesh, Interfaces, MeshError};
use crate::refelem::CellKind;
use crate::sparse::{CgOptions, SolveError};
use crate::spaces::{build_space, DofSystem, SpaceError, SpaceKind};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid mesh generation parameters: {0}")]
    InvalidMeshSpec(String),
    #[error("mesh generation failed after {attempts} attempts: {last}")]
    GenerationFailed { attempts: usize, last: String },
    #[error("space {space} cannot run on mesh mode {mode:?}")]
    SpaceMeshMismatch { space: SpaceKind, mode: MeshMode },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshMode {
    AllHex,
    AllTet,
    Hybrid,
}

/// Parameters of the perturbed-cube generator.
#[derive(Debug, Clone, Copy)]
pub struct MeshGenSpec {
    /// Cells per axis (n >= 2).
    pub n: usize,
    /// Distortion as a fraction of the mean edge length, in [0, 0.3].
    pub d: f64,
    /// Fraction of cells converted to tetrahedra (Hybrid mode), in [0, 1].
    pub tet_fraction: f64,
    pub seed: u64,
    pub mode: MeshMode,
}

impl MeshGenSpec {
    pub fn new(n: usize, d: f64, tet_fraction: f64, seed: u64, mode: MeshMode) -> Self {
        MeshGenSpec {
            n,
            d,
            tet_fraction,
            seed,
            mode,
        }
    }

    fn effective_tet_fraction(&self) -> f64 {
        match self.mode {
            MeshMode::AllHex => 0.0,
            MeshMode::AllTet => 1.0,
            MeshMode::Hybrid => self.tet_fraction,
        }
    }
}

/// Kuhn path decompositions of the unit cell: each tet walks from (0,0,0) to
/// (1,1,1) adding one axis at a time; odd permutations get two vertices
/// swapped to restore positive orientation.
const KUHN_PERMS: [([usize; 3], bool); 6] = [
    ([0, 1, 2], true),
    ([0, 2, 1], false),
    ([1, 0, 2], false),
    ([1, 2, 0], true),
    ([2, 0, 1], true),
    ([2, 1, 0], false),
];

pub fn generate_mesh(spec: &MeshGenSpec) -> Result<HybridMesh, HarnessError> {
    if spec.n < 2 {
        return Err(HarnessError::InvalidMeshSpec(format!(
            "n must be at least 2, got {}",
            spec.n
        )));
    }
    if !(0.0..=0.3).contains(&spec.d) {
        return Err(HarnessError::InvalidMeshSpec(format!(
            "distortion d must lie in [0, 0.3], got {}",
            spec.d
        )));
    }
    if !(0.0..=1.0).contains(&spec.tet_fraction) {
        return Err(HarnessError::InvalidMeshSpec(format!(
            "tet_fraction must lie in [0, 1], got {}",
            spec.tet_fraction
        )));
    }

    let n = spec.n;
    let np = n + 1;
    let vid = |i: usize, j: usize, k: usize| i + np * (j + np * k);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // (a) regular grid, (b) interior displacement up to d/n per component.
    let mut vertices = vec![[0.0; 3]; np * np * np];
    let h = 1.0 / n as f64;
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                let mut p = [i as f64 * h, j as f64 * h, k as f64 * h];
                let interior =
                    i > 0 && i < n && j > 0 && j < n && k > 0 && k < n;
                if interior && spec.d > 0.0 {
                    for c in p.iter_mut() {
                        *c += spec.d * h * (2.0 * rng.random::<f64>() - 1.0);
                    }
                }
                vertices[vid(i, j, k)] = p;
            }
        }
    }

    let n_cells = n * n * n;
    let n_split = (spec.effective_tet_fraction() * n_cells as f64).round() as usize;

    let mut last_violation = String::new();
    const MAX_ATTEMPTS: usize = 10;
    for _attempt in 0..MAX_ATTEMPTS {
        // (c) seeded random subset of cells becomes 6 tets each.
        let mut split = vec![false; n_cells];
        if n_split > 0 {
            let mut ids: Vec<usize> = (0..n_cells).collect();
            let (chosen, _) = ids.partial_shuffle(&mut rng, n_split);
            for &c in chosen.iter() {
                split[c] = true;
            }
        }

        let mut tets = Vec::with_capacity(6 * n_split);
        let mut hexes = Vec::with_capacity(n_cells - n_split);
        for ck in 0..n {
            for cj in 0..n {
                for ci in 0..n {
                    let cell = ci + n * (cj + n * ck);
                    let corner = |dx: usize, dy: usize, dz: usize| {
                        vid(ci + dx, cj + dy, ck + dz)
                    };
                    if split[cell] {
                        for (perm, even) in KUHN_PERMS {
                            let mut step = [0usize; 3];
                            let v0 = corner(0, 0, 0);
                            step[perm[0]] = 1;
                            let v1 = corner(step[0], step[1], step[2]);
                            step[perm[1]] = 1;
                            let v2 = corner(step[0], step[1], step[2]);
                            let v3 = corner(1, 1, 1);
                            if even {
                                tets.push([v0, v1, v2, v3]);
                            } else {
                                tets.push([v0, v1, v3, v2]);
                            }
                        }
                    } else {
                        hexes.push([
                            corner(0, 0, 0),
                            corner(1, 0, 0),
                            corner(1, 1, 0),
                            corner(0, 1, 0),
                            corner(0, 0, 1),
                            corner(1, 0, 1),
                            corner(1, 1, 1),
                            corner(0, 1, 1),
                        ]);
                    }
                }
            }
        }

        let mesh = HybridMesh::new(vertices.clone(), tets, hexes)?;
        let report = validate_spec(&mesh);
        if report.is_valid() {
            return Ok(mesh);
        }
        last_violation = report.violations[0].to_string();
    }
    Err(HarnessError::GenerationFailed {
        attempts: MAX_ATTEMPTS,
        last: last_violation,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct MeshStats {
    pub n_tets: usize,
    pub n_hexes: usize,
    /// Tetrahedra as a fraction of all elements.
    pub tet_share: f64,
    /// Mean/max angle (degrees) between the two triangles of each remaining
    /// hex quad face, split along its first diagonal; 0 for planar faces.
    pub dihedral_mean_deg: f64,
    pub dihedral_max_deg: f64,
}

pub fn mesh_stats(mesh: &HybridMesh) -> MeshStats {
    let mut sum = 0.0;
    let mut max = 0.0f64;
    let mut count = 0usize;
    for h in 0..mesh.hexes.len() {
        for face in mesh.hex_faces(h) {
            let p: Vec<Vec3> = face.iter().map(|&v| mesh.vertices[v]).collect();
            let n1 = cross(sub(p[1], p[0]), sub(p[2], p[0]));
            let n2 = cross(sub(p[2], p[0]), sub(p[3], p[0]));
            let denom = norm(n1) * norm(n2);
            if denom == 0.0 {
                continue;
            }
            let cos = (dot(n1, n2) / denom).clamp(-1.0, 1.0);
            let angle = cos.acos().to_degrees();
            sum += angle;
            max = max.max(angle);
            count += 1;
        }
    }
    let n_tets = mesh.tets.len();
    let n_hexes = mesh.hexes.len();
    MeshStats {
        n_tets,
        n_hexes,
        tet_share: n_tets as f64 / (n_tets + n_hexes).max(1) as f64,
        dihedral_mean_deg: if count > 0 { sum / count as f64 } else { 0.0 },
        dihedral_max_deg: max,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    PoissonSin,
    ElasticitySin,
    PoissonZero,
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ProblemKind::PoissonSin => "poisson-sin",
            ProblemKind::ElasticitySin => "elasticity-sin",
            ProblemKind::PoissonZero => "poisson-zero",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "poisson-sin" => Ok(ProblemKind::PoissonSin),
            "elasticity-sin" => Ok(ProblemKind::ElasticitySin),
            "poisson-zero" => Ok(ProblemKind::PoissonZero),
            other => Err(format!(
                "unknown problem `{other}` (expected poisson-sin, elasticity-sin or poisson-zero)"
            )),
        }
    }
}

/// A weak form together with the exact solution it manufactures.
#[derive(Debug)]
pub struct Problem {
    pub kind: ProblemKind,
    pub form: WeakForm,
    pub exact: FieldFn,
}

/// Build one of the analytic problems on the unit cube.
///
/// - `PoissonSin`: -lap u = 3 pi^2 sin(pi x) sin(pi y) sin(pi z), u = 0 on
///   the boundary; exact u = sin(pi x) sin(pi y) sin(pi z).
/// - `ElasticitySin`: u_x = u_y = u_z = sin(2 pi x) sin(2 pi y) sin(2 pi z)
///   with the load f = -div sigma(u) derived analytically (method of
///   manufactured solutions); homogeneous Dirichlet.
/// - `PoissonZero`: f = 0, u = 0 (smoke-test problem).
pub fn manufactured_problem(kind: ProblemKind, lame: (f64, f64)) -> Problem {
    use std::f64::consts::PI;
    match kind {
        ProblemKind::PoissonSin => {
            let u = |x: Vec3| (PI * x[0]).sin() * (PI * x[1]).sin() * (PI * x[2]).sin();
            Problem {
                kind,
                form: WeakForm::poisson(
                    Box::new(move |x| 3.0 * PI * PI * u(x)),
                    Box::new(|_| 0.0),
                ),
                exact: FieldFn::Scalar(Box::new(u)),
            }
        }
        ProblemKind::PoissonZero => Problem {
            kind,
            form: WeakForm::poisson(Box::new(|_| 0.0), Box::new(|_| 0.0)),
            exact: FieldFn::zero_scalar(),
        },
        ProblemKind::ElasticitySin => {
            let (lambda, mu) = lame;
            let w = |x: Vec3| {
                (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin() * (2.0 * PI * x[2]).sin()
            };
            // f_i = -(lambda + mu) d_i(div u) - mu lap u_i for u = (w, w, w).
            let load = move |x: Vec3| -> [f64; 3] {
                let (sx, cx) = (2.0 * PI * x[0]).sin_cos();
                let (sy, cy) = (2.0 * PI * x[1]).sin_cos();
                let (sz, cz) = (2.0 * PI * x[2]).sin_cos();
                let k = 4.0 * PI * PI;
                let wv = sx * sy * sz;
                let lam_mu = lambda + mu;
                [
                    k * lam_mu * (wv - cx * cy * sz - cx * sy * cz) + 3.0 * k * mu * wv,
                    k * lam_mu * (wv - cx * cy * sz - sx * cy * cz) + 3.0 * k * mu * wv,
                    k * lam_mu * (wv - cx * sy * cz - sx * cy * cz) + 3.0 * k * mu * wv,
                ]
            };
            Problem {
                kind,
                form: WeakForm::elasticity(
                    lambda,
                    mu,
                    Box::new(load),
                    Box::new(|_| [0.0; 3]),
                )
                .expect("positive Lame coefficients"),
                exact: FieldFn::Vector(Box::new(move |x| {
                    let v = w(x);
                    [v, v, v]
                })),
            }
        }
    }
}

/// Relative L2 error sqrt(int |u_h - u|^2) / sqrt(int |u|^2), integrated with
/// quadrature two degrees above the assembly default on each cell. Falls back
/// to the absolute norm when the exact solution is (numerically) zero.
pub fn l2_relative_error(
    mesh: &HybridMesh,
    mappings: &Mappings,
    dofs: &DofSystem,
    solution: &[f64],
    exact: &FieldFn,
    quad: QuadratureSpec,
) -> f64 {
    let ncomp = exact.n_components();
    let raw: Vec<Vec<f64>> = (0..ncomp)
        .map(|c| dofs.expand(&solution[c * dofs.n_free..(c + 1) * dofs.n_free]))
        .collect();
    let err_quad = QuadratureSpec {
        hex_degree: (quad.hex_degree + 2).min(9),
        tet_degree: (quad.tet_degree + 2).min(6),
    };
    let rule_tet = crate::refelem::quadrature_for(CellKind::Tet, err_quad.tet_degree).unwrap();
    let rule_hex = crate::refelem::quadrature_for(CellKind::Hex, err_quad.hex_degree).unwrap();
    let mut num = 0.0;
    let mut den = 0.0;
    for cell in mesh.cell_ids() {
        let mapping = mappings.get(cell);
        let rule = match mapping.cell_kind() {
            CellKind::Tet => &rule_tet,
            CellKind::Hex => &rule_hex,
        };
        let basis = dofs.cell_basis(cell);
        let raws = dofs.cell_raw_dofs(cell);
        for (q, &p) in rule.points.iter().enumerate() {
            let (_, det) = mapping.jacobian(p);
            let w = rule.weights[q] * det.abs();
            let vals = basis.eval_unchecked(p);
            let x = mapping.map_point_unchecked(p);
            for c in 0..ncomp {
                let mut uh = 0.0;
                for (n, &r) in raws.iter().enumerate() {
                    uh += raw[c][r] * vals[n];
                }
                let ue = exact.eval_component(x, c);
                num += w * (uh - ue) * (uh - ue);
                den += w * ue * ue;
            }
        }
    }
    if den.sqrt() < 1e-140 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Everything produced by one discretize-assemble-solve run.
pub struct SolveOutcome {
    pub mesh: HybridMesh,
    pub interfaces: Interfaces,
    pub mappings: Mappings,
    pub dofs: DofSystem,
    /// Total unknowns solved for (free dofs times components).
    pub dof_count: usize,
    pub iterations: usize,
    pub l2_rel_error: f64,
    pub assembly_seconds: f64,
    pub solve_seconds: f64,
    pub solution: Vec<f64>,
}

/// Discretize `mesh` with `space`, assemble `problem`, apply its Dirichlet
/// data, solve by CG and measure the L2 error against the exact solution.
pub fn solve_problem(
    mesh: HybridMesh,
    space: SpaceKind,
    problem: &Problem,
    mapping_mode: MappingMode,
    quad: QuadratureSpec,
    cg: CgOptions,
) -> Result<SolveOutcome, HarnessError> {
    let interfaces = build_interfaces(&mesh)?;
    let mappings = build_mappings(&mesh, &interfaces, mapping_mode)?;
    let dofs = build_space(&mesh, &mappings, &interfaces, space)?;

    let t0 = Instant::now();
    let mut system = assemble(&mesh, &mappings, &dofs, &problem.form, quad)?;
    apply_dirichlet(&mut system, &dofs, &problem.form.dirichlet);
    let assembly_seconds = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let (solution, iterations) = solve(&system, cg)?;
    let solve_seconds = t1.elapsed().as_secs_f64();

    let l2 = l2_relative_error(&mesh, &mappings, &dofs, &solution, &problem.exact, quad);
    Ok(SolveOutcome {
        dof_count: system.n_system(),
        mesh,
        interfaces,
        mappings,
        dofs,
        iterations,
        l2_rel_error: l2,
        assembly_seconds,
        solve_seconds,
        solution,
    })
}

/// One row of a refinement study.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRecord {
    pub problem: ProblemKind,
    pub space: SpaceKind,
    pub n: usize,
    pub dofs: usize,
    pub l2_rel_error: f64,
    pub assembly_s: f64,
    pub solve_s: f64,
    pub mapping_mode: MappingMode,
    pub seed: u64,
}

/// Mesh mode a space runs on: Q1 needs all-hex meshes, P1 all-tet; the
/// hybrid spaces follow the template.
pub fn mesh_mode_for_space(space: SpaceKind, template_mode: MeshMode) -> MeshMode {
    match space {
        SpaceKind::Q1 => MeshMode::AllHex,
        SpaceKind::P1 => MeshMode::AllTet,
        _ => template_mode,
    }
}

/// Run one (space, n) grid of solves and collect records. Failures abort with
/// the partial result set attached so callers can flush what completed.
#[allow(clippy::too_many_arguments)]
pub fn run_convergence(
    problem_kind: ProblemKind,
    lame: (f64, f64),
    spaces: &[SpaceKind],
    ns: &[usize],
    template: &MeshGenSpec,
    mapping_mode: MappingMode,
    quad: QuadratureSpec,
    cg: CgOptions,
) -> (Vec<ConvergenceRecord>, Option<HarnessError>) {
    let problem = manufactured_problem(problem_kind, lame);
    let mut records = Vec::new();
    for &space in spaces {
        for &n in ns {
            let spec = MeshGenSpec {
                n,
                mode: mesh_mode_for_space(space, template.mode),
                ..*template
            };
            let run = generate_mesh(&spec).and_then(|mesh| {
                solve_problem(mesh, space, &problem, mapping_mode, quad, cg)
            });
            match run {
                Ok(out) => records.push(ConvergenceRecord {
                    problem: problem_kind,
                    space,
                    n,
                    dofs: out.dof_count,
                    l2_rel_error: out.l2_rel_error,
                    assembly_s: out.assembly_seconds,
                    solve_s: out.solve_seconds,
                    mapping_mode,
                    seed: spec.seed,
                }),
                Err(e) => return (records, Some(e)),
            }
        }
    }
    (records, None)
}

pub fn mapping_mode_name(mode: MappingMode) -> &'static str {
    match mode {
        MappingMode::Quadratic => "quadratic",
        MappingMode::Affine => "affine",
    }
}

pub const CSV_HEADER: &str = "problem,space,n,dofs,l2_rel_error,assembly_s,solve_s,mapping_mode,seed";

pub fn records_to_csv(records: &[ConvergenceRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{:e},{:.6},{:.6},{},{}\n",
            r.problem,
            r.space,
            r.n,
            r.dofs,
            r.l2_rel_error,
            r.assembly_s,
            r.solve_s,
            mapping_mode_name(r.mapping_mode),
            r.seed
        ));
    }
    out
}

/// Least-squares slope of log(error) against log(dofs^(1/3)) over the last
/// `window` records (sorted by n); the convergence rate is its negative.
/// Returns `None` with fewer than two points.
pub fn fit_rate(records: &[ConvergenceRecord], window: usize) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| ((r.dofs as f64).ln() / 3.0, r.l2_rel_error.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let tail = &pts[pts.len().saturating_sub(window.max(2))..];
    let n = tail.len() as f64;
    let sx: f64 = tail.iter().map(|p| p.0).sum();
    let sy: f64 = tail.iter().map(|p| p.1).sum();
    let sxx: f64 = tail.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = tail.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    Some(-(n * sxy - sx * sy) / denom)
}

/// Log-log interpolation of a space's error curve at a target dof count.
/// Returns `None` outside the sampled range.
pub fn interpolate_error_at_dofs(records: &[ConvergenceRecord], dofs: usize) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| ((r.dofs as f64).ln(), r.l2_rel_error.ln()))
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let x = (dofs as f64).ln();
    if pts.is_empty() || x < pts[0].0 - 1e-12 || x > pts[pts.len() - 1].0 + 1e-12 {
        return None;
    }
    for w in pts.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if x <= x1 + 1e-12 {
            if (x1 - x0).abs() < 1e-12 {
                return Some(y0.exp());
            }
            let t = (x - x0) / (x1 - x0);
            return Some((y0 + t * (y1 - y0)).exp());
        }
    }
    None
}

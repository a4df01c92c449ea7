//! Command-line interface: mesh generation, validation, single solves with
//! VTK export, and convergence studies.
//!
//! Exit codes: 0 success, 1 validation failure, 2 I/O or parse error,
//! 3 solver non-convergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hybridfem::assembly::QuadratureSpec;
use hybridfem::geometry::{build_mappings, check_geometric_continuity, MappingMode};
use hybridfem::mesh::{build_interfaces, read_mesh, validate_spec, write_mesh, MeshError};
use hybridfem::problems::{
    generate_mesh, manufactured_problem, mapping_mode_name, mesh_stats, records_to_csv,
    fit_rate, solve_problem, ConvergenceRecord, HarnessError, MeshGenSpec, MeshMode,
    ProblemKind, run_convergence,
};
use hybridfem::sparse::{CgOptions, SolveError};
use hybridfem::spaces::SpaceKind;
use hybridfem::vtk::write_solution_vtk;

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(
    name = "hybridfem",
    about = "Finite elements on hybrid non-conforming hexahedral-tetrahedral meshes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct GenParams {
    /// Cells per axis of the unit cube.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Interior vertex distortion as a fraction of the mean edge length.
    #[arg(long, default_value_t = 0.10)]
    d: f64,
    /// Fraction of cells converted into 6 tetrahedra each.
    #[arg(long = "tet-fraction", default_value_t = 0.20)]
    tet_fraction: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

impl GenParams {
    fn spec(&self, mode: MeshMode) -> MeshGenSpec {
        MeshGenSpec::new(self.n, self.d, self.tet_fraction, self.seed, mode)
    }
}

fn parse_mesh_mode(s: &str) -> Result<MeshMode, String> {
    match s.to_ascii_lowercase().as_str() {
        "allhex" | "all-hex" => Ok(MeshMode::AllHex),
        "alltet" | "all-tet" => Ok(MeshMode::AllTet),
        "hybrid" => Ok(MeshMode::Hybrid),
        other => Err(format!("unknown mode `{other}` (allhex, alltet or hybrid)")),
    }
}

fn parse_mapping_mode(s: &str) -> Result<MappingMode, String> {
    match s.to_ascii_lowercase().as_str() {
        "quadratic" => Ok(MappingMode::Quadratic),
        "affine" => Ok(MappingMode::Affine),
        other => Err(format!("unknown mapping mode `{other}` (quadratic or affine)")),
    }
}

#[derive(Args, Clone, Copy)]
struct SolveParams {
    /// Quadrature exactness per axis on hexahedra.
    #[arg(long = "hex-degree", default_value_t = 3)]
    hex_degree: usize,
    /// Quadrature exactness (total degree) on tetrahedra.
    #[arg(long = "tet-degree", default_value_t = 4)]
    tet_degree: usize,
    /// First Lame coefficient (elasticity).
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Second Lame coefficient / shear modulus (elasticity).
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// CG relative residual target.
    #[arg(long = "cg-tol", default_value_t = 1e-10)]
    cg_tol: f64,
    #[arg(long = "max-iters", default_value_t = 100_000)]
    max_iters: usize,
    /// Use the Jacobi-preconditioned CG instead of plain CG.
    #[arg(long)]
    jacobi: bool,
}

impl SolveParams {
    fn quad(&self) -> QuadratureSpec {
        QuadratureSpec {
            hex_degree: self.hex_degree,
            tet_degree: self.tet_degree,
        }
    }

    fn cg(&self) -> CgOptions {
        CgOptions {
            rel_tol: self.cg_tol,
            max_iters: self.max_iters,
            jacobi: self.jacobi,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a perturbed-cube mesh and print its statistics.
    Gen {
        #[command(flatten)]
        params: GenParams,
        /// Mesh mode: allhex, alltet or hybrid.
        #[arg(long, default_value = "hybrid", value_parser = parse_mesh_mode)]
        mode: MeshMode,
        /// Output mesh file.
        #[arg(short, long)]
        output: PathBuf,
        /// Also export the mapped geometry (quadratic tets, tri-linear
        /// hexes) as legacy-ASCII VTK for visual inspection.
        #[arg(long)]
        vtk: Option<PathBuf>,
    },
    /// Validate a mesh file and check its geometric continuity.
    Validate {
        mesh: PathBuf,
        /// Force plain edge-midpoint (affine) tetrahedron mappings.
        #[arg(long = "force-affine-tets")]
        force_affine_tets: bool,
        /// Samples per interface for the continuity check.
        #[arg(long, default_value_t = 16)]
        samples: usize,
    },
    /// Solve one problem on a mesh and print a summary line.
    Solve {
        #[arg(long)]
        mesh: PathBuf,
        /// poisson-sin, elasticity-sin or poisson-zero.
        #[arg(long)]
        problem: ProblemKind,
        /// q1, p1, hyb1, hyb12 or dhyb12.
        #[arg(long)]
        space: SpaceKind,
        #[arg(long = "mapping-mode", default_value = "quadratic", value_parser = parse_mapping_mode)]
        mapping_mode: MappingMode,
        #[command(flatten)]
        solve_params: SolveParams,
        /// Write the solution field as legacy-ASCII VTK.
        #[arg(long)]
        vtk: Option<PathBuf>,
    },
    /// Run a refinement study and write one CSV row per (space, n).
    Convergence {
        #[arg(long)]
        problem: ProblemKind,
        /// Comma-separated spaces, e.g. q1,hyb1,hyb12,p1.
        #[arg(long, value_delimiter = ',', required = true)]
        spaces: Vec<SpaceKind>,
        /// Comma-separated cells-per-axis values, e.g. 4,8,12,16.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.10)]
        d: f64,
        #[arg(long = "tet-fraction", default_value_t = 0.20)]
        tet_fraction: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long = "mapping-mode", default_value = "quadratic", value_parser = parse_mapping_mode)]
        mapping_mode: MappingMode,
        #[command(flatten)]
        solve_params: SolveParams,
        /// Output CSV path.
        #[arg(short, long)]
        output: PathBuf,
        /// Also emit a gnuplot script and per-space data files.
        #[arg(long)]
        gnuplot: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

type CliError = (u8, String);

fn io_err(e: std::io::Error, what: &str) -> CliError {
    (EXIT_IO, format!("{what}: {e}"))
}

fn harness_err(e: HarnessError) -> CliError {
    let code = match &e {
        HarnessError::Mesh(MeshError::Parse { .. }) => EXIT_IO,
        HarnessError::Solve(SolveError::NoConvergence { .. }) => EXIT_SOLVER,
        _ => EXIT_VALIDATION,
    };
    (code, e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen {
            params,
            mode,
            output,
            vtk,
        } => cmd_gen(params, mode, &output, vtk.as_deref()),
        Command::Validate {
            mesh,
            force_affine_tets,
            samples,
        } => cmd_validate(&mesh, force_affine_tets, samples),
        Command::Solve {
            mesh,
            problem,
            space,
            mapping_mode,
            solve_params,
            vtk,
        } => cmd_solve(&mesh, problem, space, mapping_mode, solve_params, vtk.as_deref()),
        Command::Convergence {
            problem,
            spaces,
            n,
            d,
            tet_fraction,
            seed,
            mapping_mode,
            solve_params,
            output,
            gnuplot,
        } => cmd_convergence(
            problem,
            &spaces,
            &n,
            MeshGenSpec::new(2, d, tet_fraction, seed, MeshMode::Hybrid),
            mapping_mode,
            solve_params,
            &output,
            gnuplot,
        ),
    }
}

fn cmd_gen(
    params: GenParams,
    mode: MeshMode,
    output: &std::path::Path,
    vtk: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let spec = params.spec(mode);
    let mesh = generate_mesh(&spec).map_err(harness_err)?;
    write_mesh(output, &mesh).map_err(|e| io_err(e, "cannot write mesh"))?;
    if let Some(path) = vtk {
        let interfaces = build_interfaces(&mesh).map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
        let mappings = build_mappings(&mesh, &interfaces, MappingMode::Quadratic)
            .map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
        hybridfem::vtk::write_mesh_vtk(path, &mesh, &mappings)
            .map_err(|e| io_err(e, "cannot write VTK"))?;
        println!("mapped geometry -> {}", path.display());
    }
    let stats = mesh_stats(&mesh);
    println!(
        "mesh: {} vertices, {} tets, {} hexes (tet share {:.1}%)",
        mesh.n_vertices(),
        stats.n_tets,
        stats.n_hexes,
        100.0 * stats.tet_share
    );
    println!(
        "quad-face dihedral angles: mean {:.2} deg, max {:.2} deg",
        stats.dihedral_mean_deg, stats.dihedral_max_deg
    );
    println!("seed {} -> {}", spec.seed, output.display());
    Ok(())
}

fn cmd_validate(
    path: &std::path::Path,
    force_affine_tets: bool,
    samples: usize,
) -> Result<(), CliError> {
    let mesh = read_mesh(path).map_err(|e| match e {
        MeshError::Parse { .. } => (EXIT_IO, e.to_string()),
        other => (EXIT_VALIDATION, other.to_string()),
    })?;
    let report = validate_spec(&mesh);
    for info in &report.infos {
        println!("info: {info}");
    }
    if !report.is_valid() {
        for v in &report.violations {
            println!("violation: {v}");
        }
        return Err((
            EXIT_VALIDATION,
            format!("{} violation(s)", report.violations.len()),
        ));
    }
    let interfaces = build_interfaces(&mesh).map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
    let mode = if force_affine_tets {
        MappingMode::Affine
    } else {
        MappingMode::Quadratic
    };
    let mappings =
        build_mappings(&mesh, &interfaces, mode).map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
    let gaps = check_geometric_continuity(&mesh, &mappings, &interfaces, samples);
    let max_gap = gaps.iter().fold(0.0f64, |m, g| m.max(*g));
    println!(
        "connectivity: ok ({} interior interfaces, {} boundary faces)",
        interfaces.records.len(),
        interfaces.boundary.len()
    );
    println!("geometric continuity max gap: {max_gap:e} ({} mappings)", mapping_mode_name(mode));
    if max_gap > 1e-9 {
        return Err((
            EXIT_VALIDATION,
            format!("geometric continuity gap {max_gap:e} exceeds 1e-9"),
        ));
    }
    Ok(())
}

fn cmd_solve(
    mesh_path: &std::path::Path,
    problem_kind: ProblemKind,
    space: SpaceKind,
    mapping_mode: MappingMode,
    params: SolveParams,
    vtk: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let mesh = read_mesh(mesh_path).map_err(|e| match e {
        MeshError::Parse { .. } => (EXIT_IO, e.to_string()),
        other => (EXIT_VALIDATION, other.to_string()),
    })?;
    let problem = manufactured_problem(problem_kind, (params.lambda, params.mu));
    let out = solve_problem(
        mesh,
        space,
        &problem,
        mapping_mode,
        params.quad(),
        params.cg(),
    )
    .map_err(harness_err)?;
    let max_u = out.solution.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!(
        "problem {} space {} mapping {} dofs {} cg_iters {} l2_error {:e} max_u {:e} assembly_s {:.4} solve_s {:.4}",
        problem_kind,
        space,
        mapping_mode_name(mapping_mode),
        out.dof_count,
        out.iterations,
        out.l2_rel_error,
        max_u,
        out.assembly_seconds,
        out.solve_seconds
    );
    if let Some(path) = vtk {
        write_solution_vtk(
            path,
            &out.mesh,
            &out.mappings,
            &out.dofs,
            &out.solution,
            problem.form.n_components(),
        )
        .map_err(|e| io_err(e, "cannot write VTK"))?;
        println!("solution field -> {}", path.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_convergence(
    problem: ProblemKind,
    spaces: &[SpaceKind],
    ns: &[usize],
    template: MeshGenSpec,
    mapping_mode: MappingMode,
    params: SolveParams,
    output: &std::path::Path,
    gnuplot: bool,
) -> Result<(), CliError> {
    let (records, failure) = run_convergence(
        problem,
        (params.lambda, params.mu),
        spaces,
        ns,
        &template,
        mapping_mode,
        params.quad(),
        params.cg(),
    );
    // Flush whatever completed, even on failure.
    std::fs::write(output, records_to_csv(&records))
        .map_err(|e| io_err(e, "cannot write CSV"))?;
    println!("{} record(s) -> {}", records.len(), output.display());
    for &space in spaces {
        let rs: Vec<ConvergenceRecord> = records
            .iter()
            .filter(|r| r.space == space)
            .copied()
            .collect();
        if let Some(rate) = fit_rate(&rs, 3) {
            println!("space {space}: fitted L2 rate {rate:.3}");
        }
    }
    if gnuplot {
        write_gnuplot(output, &records, spaces).map_err(|e| io_err(e, "cannot write gnuplot"))?;
    }
    if let Some(e) = failure {
        return Err(harness_err(e));
    }
    Ok(())
}

fn write_gnuplot(
    csv_path: &std::path::Path,
    records: &[ConvergenceRecord],
    spaces: &[SpaceKind],
) -> std::io::Result<()> {
    let stem = csv_path.with_extension("");
    let stem_name = stem.file_name().unwrap_or_default().to_string_lossy().to_string();
    let dir = csv_path.parent().unwrap_or(std::path::Path::new("."));
    let mut plots = Vec::new();
    for &space in spaces {
        let data: String = records
            .iter()
            .filter(|r| r.space == space)
            .map(|r| format!("{} {:e}\n", (r.dofs as f64).powf(1.0 / 3.0), r.l2_rel_error))
            .collect();
        let dat = dir.join(format!("{stem_name}_{space}.dat"));
        std::fs::write(&dat, data)?;
        plots.push(format!(
            "\"{}\" using 1:2 with linespoints title \"{space}\"",
            dat.file_name().unwrap().to_string_lossy()
        ));
    }
    let script = format!(
        "set logscale xy\nset xlabel \"(#dofs)^(1/3)\"\nset ylabel \"relative L2 error\"\nset key bottom left\nplot {}\n",
        plots.join(", \\\n     ")
    );
    std::fs::write(dir.join(format!("{stem_name}.gp")), script)
}

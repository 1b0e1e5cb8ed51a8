use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wg_plate::adaptivity::{adapt_loop, AdaptConfig, AdaptOutcome, RefineMode};
use wg_plate::assembly::AssemblyOptions;
use wg_plate::cases::{self, BoundaryData, CASE_NAMES};
use wg_plate::estimator::{sample_grid, EstimatorOptions};
use wg_plate::linsolve::SolverKind;
use wg_plate::mesh::write_mesh;

const EXIT_UNKNOWN_CASE: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "wg-plate", version, about = "Adaptive weak Galerkin solver for eps^2 Δ²u - Δu = f on the unit square")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an adaptive or uniform refinement study and write its reports.
    Run(RunArgs),
    /// List the registered cases with their default parameters.
    Cases,
}

#[derive(Args)]
struct RunArgs {
    /// Case name, as listed by `wg-plate cases`.
    #[arg(long)]
    case: String,
    /// Polynomial degree.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Defaults to the case's value.
    #[arg(long)]
    eps: Option<f64>,
    /// Dörfler fraction; defaults to the case's value.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, value_enum, default_value_t = Mode::Adaptive)]
    mode: Mode,
    #[arg(long, default_value_t = 20_000)]
    max_dof: usize,
    #[arg(long, default_value_t = 200)]
    max_levels: usize,
    /// Subdivisions per side of the initial mesh.
    #[arg(long, default_value_t = 4)]
    initial_n: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, env = "WG_PLATE_THREADS")]
    threads: Option<usize>,
    /// Record zero timings so repeated runs write identical histories.
    #[arg(long)]
    deterministic: bool,
    /// Include boundary edges in the estimator's jump terms.
    #[arg(long)]
    boundary_jumps: bool,
    /// Also constrain the tangential gradient on the boundary.
    #[arg(long)]
    pin_tangential: bool,
    /// Defaults to the case's choice.
    #[arg(long, value_enum)]
    boundary_data: Option<Boundary>,
    #[arg(long, value_enum, default_value_t = Solver::Cholesky)]
    solver: Solver,
    /// Lattice points per side of the solution sample grid.
    #[arg(long, default_value_t = 201)]
    grid: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Adaptive,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum Boundary {
    Homogeneous,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Cholesky,
    Cg,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Cases => {
            for name in CASE_NAMES {
                let c = cases::by_name(name, None).expect("registered case");
                println!("{name}: eps {:e}, theta {}, exact solution {}", c.eps, c.theta_default, c.has_exact());
            }
            ExitCode::SUCCESS
        }
    }
}

fn run(args: RunArgs) -> ExitCode {
    if !CASE_NAMES.contains(&args.case.as_str()) {
        eprintln!("error: unknown case `{}` (known: {})", args.case, CASE_NAMES.join(", "));
        return ExitCode::from(EXIT_UNKNOWN_CASE);
    }
    match execute(&args) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(msg)) => {
            eprintln!("error: solver failed: {msg}; partial results written to {}", args.out.display());
            ExitCode::from(EXIT_SOLVER)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Returns the solver failure message, if the loop stopped on one.
fn execute(args: &RunArgs) -> wg_plate::Result<Option<String>> {
    if let Some(n) = args.threads {
        wg_plate::par::configure_threads(n);
    }
    let case = cases::by_name(&args.case, args.eps)?;
    let cfg = AdaptConfig {
        k: args.k,
        theta: args.theta.unwrap_or(case.theta_default),
        mode: match args.mode {
            Mode::Adaptive => RefineMode::Adaptive,
            Mode::Uniform => RefineMode::Uniform,
        },
        max_dof: args.max_dof,
        max_levels: args.max_levels,
        initial_n: args.initial_n,
        deterministic: args.deterministic,
        solver: match args.solver {
            Solver::Cholesky => SolverKind::Cholesky,
            Solver::Cg => SolverKind::ConjugateGradient,
        },
        assembly: AssemblyOptions {
            pin_tangential: args.pin_tangential,
        },
        estimator: EstimatorOptions {
            boundary_jumps: args.boundary_jumps,
        },
        boundary_data: args.boundary_data.map(|b| match b {
            Boundary::Homogeneous => BoundaryData::Homogeneous,
            Boundary::Exact => BoundaryData::Exact,
        }),
    };
    let outcome = match adapt_loop(&case, &cfg) {
        Ok(o) => o,
        Err(e @ (wg_plate::Error::NotPositiveDefinite { .. } | wg_plate::Error::Solver(_))) => return Ok(Some(e.to_string())),
        Err(e) => return Err(e),
    };
    print_summary(&outcome);
    write_reports(args, &outcome)?;
    Ok(outcome.failure.map(|e| e.to_string()))
}

fn print_summary(out: &AdaptOutcome) {
    println!("{:>5} {:>8} {:>11} {:>11} {:>11} {:>8}", "level", "dofs", "eta_h", "error", "effectivity", "marked");
    let opt = |v: Option<f64>, p: usize| v.map(|x| format!("{x:.p$e}")).unwrap_or_else(|| "-".into());
    for r in &out.history.levels {
        println!(
            "{:>5} {:>8} {:>11.4e} {:>11} {:>11} {:>8}",
            r.level,
            r.dofs,
            r.eta_h,
            opt(r.error, 4),
            opt(r.effectivity, 3),
            r.marked
        );
    }
}

fn write_reports(args: &RunArgs, out: &AdaptOutcome) -> wg_plate::Result<()> {
    let dir = &args.out;
    std::fs::create_dir_all(dir)?;
    out.history.write(&dir.join("history.json"), &dir.join("history.csv"))?;
    write_mesh(&out.mesh, dir.join("mesh_final.wgmesh"))?;
    out.indicators.write_csv(&dir.join("indicators.csv"))?;
    std::fs::write(dir.join("solution_grid.csv"), sample_grid(&out.mesh, &out.solution, args.grid))?;
    Ok(())
}

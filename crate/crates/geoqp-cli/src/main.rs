//! Benchmark and solve front end.
//!
//! Exit codes mirror the solver status: 0 solved, 2 infeasible stationary,
//! 3 time limit, 4 iteration cap; 1 is reserved for usage, parse and
//! validation failures.

mod bench;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use geoqp::alm::{alm_solve, AlmOptions, Subsolver};
use geoqp::benchmarks::mpc::{simulate, MpcConfig};
use geoqp::benchmarks::random_init;
use geoqp::io::{read_problem, SolutionJson};
use geoqp::subproblem::Formulation;
use geoqp::InitialPoint;
use nalgebra::{DVector, Vector4};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "geoqp",
    about = "Augmented Lagrangian solver for quadratic programs with geometric constraints",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single problem file and write the solution artifacts.
    Solve(SolveArgs),
    /// Run a benchmark sweep and emit run records and profiles.
    Bench(bench::BenchArgs),
    /// Closed-loop simulation of the aircraft tracking controller,
    /// cold- and warm-started.
    Mpc(MpcArgs),
}

#[derive(Args, Clone)]
pub struct CommonFlags {
    /// Dual tolerance.
    #[arg(long)]
    eps_d: Option<f64>,
    /// Primal tolerance.
    #[arg(long)]
    eps_p: Option<f64>,
    /// Wall-clock limit per solve, in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// JSON file with a full solver-options block (flags override it).
    #[arg(long)]
    config: Option<PathBuf>,
}

impl CommonFlags {
    pub fn build(&self) -> Result<AlmOptions> {
        let mut opts = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text).context("parsing solver config")?
            }
            None => AlmOptions::default(),
        };
        if let Some(v) = self.eps_d {
            opts.eps_d = v;
        }
        if let Some(v) = self.eps_p {
            opts.eps_p = v;
        }
        if let Some(v) = self.time_limit {
            opts.time_limit_s = v;
        }
        opts.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(opts)
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Problem file (JSON).
    problem: PathBuf,
    /// Subproblem formulation: extended | condensed-soft | condensed-hard.
    #[arg(long)]
    formulation: Option<Formulation>,
    /// Inner solver: nmpg | panoc.
    #[arg(long)]
    subsolver: Option<Subsolver>,
    #[command(flatten)]
    solver: CommonFlags,
    /// Seed for a random normal initial point; omitted means start at zero.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "GEOQP_OUT_DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct MpcArgs {
    /// Prediction horizon length.
    #[arg(long, default_value_t = 10)]
    horizon: usize,
    /// Number of closed-loop steps.
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Step at which the observed state resets to the initial one.
    #[arg(long, default_value_t = 50)]
    disturb_at: usize,
    /// Initial state, four comma-separated values.
    #[arg(long, default_value = "10,10,10,10", value_parser = parse_state)]
    x_start: Vector4<f64>,
    /// Base seed for cold-start initializations.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Subproblem formulation (defaults to condensed-hard).
    #[arg(long)]
    formulation: Option<Formulation>,
    /// Inner solver (defaults to nmpg).
    #[arg(long)]
    subsolver: Option<Subsolver>,
    #[command(flatten)]
    solver: CommonFlags,
    /// Output directory.
    #[arg(long, env = "GEOQP_OUT_DIR", default_value = "out")]
    out: PathBuf,
}

fn parse_state(s: &str) -> Result<Vector4<f64>, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse().map_err(|e| format!("{e}")))
        .collect::<Result<_, _>>()?;
    if parts.len() != 4 {
        return Err(format!("expected 4 state entries, got {}", parts.len()));
    }
    Ok(Vector4::new(parts[0], parts[1], parts[2], parts[3]))
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Bench(args) => bench::cmd_bench(&args),
        Command::Mpc(args) => cmd_mpc(&args),
    };
    match code {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)
        .with_context(|| format!("creating output directory {}", path.display()))
}

fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let problem = read_problem(&args.problem)
        .with_context(|| format!("loading {}", args.problem.display()))?;
    let report = problem.validate();
    if !report.is_clean() {
        for v in &report.violations {
            eprintln!("validation: {v}");
        }
        bail!("problem failed validation");
    }
    let mut opts = args.solver.build()?;
    if let Some(f) = args.formulation {
        opts.formulation = f;
    }
    if let Some(s) = args.subsolver {
        opts.subsolver = s;
    }
    let init = match args.seed {
        Some(seed) => random_init(&problem, seed),
        None => {
            let x0 = DVector::zeros(problem.n());
            let z0 = problem.set.project(&(&problem.a * &x0));
            InitialPoint {
                x0,
                y0: DVector::zeros(problem.m()),
                z0,
            }
        }
    };
    let result = alm_solve(&problem, &opts, &init).map_err(|e| anyhow::anyhow!("{e}"))?;

    ensure_dir(&args.out)?;
    let solution = SolutionJson::from_result(&result);
    std::fs::write(
        args.out.join("solution.json"),
        serde_json::to_string_pretty(&solution)?,
    )?;
    let mut log = Vec::new();
    result.write_history_csv(&mut log)?;
    std::fs::write(args.out.join("iterations.csv"), log)?;

    println!(
        "status: {:?} ({} outer, {} inner iterations, {:.3}s)",
        result.status, result.outer_iterations, result.inner_iterations, result.elapsed_s
    );
    Ok(result.status.exit_code())
}

fn cmd_mpc(args: &MpcArgs) -> Result<i32> {
    let solver = {
        let mut opts = args.solver.build()?;
        if args.solver.config.is_none() {
            opts.formulation = Formulation::CondensedHard;
            opts.subsolver = Subsolver::Nmpg;
        }
        if let Some(f) = args.formulation {
            opts.formulation = f;
        }
        if let Some(s) = args.subsolver {
            opts.subsolver = s;
        }
        opts
    };
    ensure_dir(&args.out)?;

    let mut traces = Vec::new();
    for warm in [false, true] {
        let cfg = MpcConfig {
            horizon: args.horizon,
            steps: args.steps,
            warm,
            x_start: args.x_start,
            disturb_at: (args.disturb_at < args.steps).then_some(args.disturb_at),
            solver: solver.clone(),
            cold_seed: args.seed,
        };
        let trace = simulate(&cfg);
        let name = if warm { "mpc_warm.csv" } else { "mpc_cold.csv" };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf)?;
        std::fs::write(args.out.join(name), buf)?;
        traces.push(trace);
    }

    let cold = traces[0].median_runtime_s();
    let warm = traces[1].median_runtime_s();
    let mut summary = String::from("trace,median_runtime_s,steps\n");
    summary.push_str(&format!("cold,{},{}\n", cold, args.steps));
    summary.push_str(&format!("warm,{},{}\n", warm, args.steps));
    std::fs::write(args.out.join("mpc_summary.csv"), summary)?;

    println!("cold median runtime: {cold:.4}s, warm median runtime: {warm:.4}s");
    if warm > cold {
        eprintln!("note: warm-started median runtime exceeded the cold-started one on this run");
    }
    Ok(0)
}

//! Benchmark sweeps: every (solver setting, size, seed) cell runs once and
//! produces a run record; records feed the profile CSVs, the run manifest
//! and a small SVG overview.

use crate::CommonFlags;
use anyhow::{bail, Context, Result};
use clap::Args;
use geoqp::alm::{alm_solve, AlmOptions, AlmStatus, Subsolver};
use geoqp::benchmarks::{afti16, ivp, obstacle, random_init, BenchmarkInstance};
use geoqp::io::read_problem;
use geoqp::profiles::{
    data_profile, data_profile_by, performance_profile, scalability_profile, write_profile_csv,
    write_profile_svg, write_scalability_csv, RunRecord,
};
use geoqp::subproblem::Formulation;
use nalgebra::Vector4;
use serde::Serialize;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Args)]
pub struct BenchArgs {
    /// Benchmark family: ivp | obstacle | afti16 | file.
    #[arg(long, default_value = "ivp")]
    benchmark: String,
    /// Problem file, required with `--benchmark file`.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Comma-separated sizes.
    #[arg(long, default_value = "8,16,32,64,128,256", value_parser = parse_sizes)]
    sizes: std::vec::Vec<usize>,
    /// Seeds as a comma list or inclusive range `a..b`.
    #[arg(long, default_value = "1..10", value_parser = parse_seeds)]
    seeds: std::vec::Vec<u64>,
    /// Formulation name or `all`.
    #[arg(long, default_value = "all")]
    formulation: String,
    /// Subsolver name or `all`.
    #[arg(long, default_value = "all")]
    subsolver: String,
    /// Parallel sweep cells.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    solver: CommonFlags,
    /// Output directory.
    #[arg(long, env = "GEOQP_OUT_DIR", default_value = "out")]
    out: PathBuf,
}

fn parse_sizes(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|p| p.trim().parse().map_err(|e| format!("{e}")))
        .collect()
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("{e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("{e}"))?;
        if a > b {
            return Err(format!("empty seed range {a}..{b}"));
        }
        Ok((a..=b).collect())
    } else {
        s.split(',')
            .map(|p| p.trim().parse().map_err(|e| format!("{e}")))
            .collect()
    }
}

/// One solver setting of the sweep matrix.
#[derive(Debug, Clone, Serialize)]
struct Setting {
    formulation: Formulation,
    subsolver: Subsolver,
}

impl Setting {
    fn id(&self) -> String {
        format!("{}/{}", self.formulation.as_str(), self.subsolver.as_str())
    }
}

fn parse_settings(formulation: &str, subsolver: &str) -> Result<Vec<Setting>> {
    let formulations: Vec<Formulation> = if formulation == "all" {
        Formulation::ALL.to_vec()
    } else {
        vec![formulation.parse().map_err(|e: String| anyhow::anyhow!(e))?]
    };
    let subsolvers: Vec<Subsolver> = if subsolver == "all" {
        Subsolver::ALL.to_vec()
    } else {
        vec![subsolver.parse().map_err(|e: String| anyhow::anyhow!(e))?]
    };
    Ok(formulations
        .iter()
        .flat_map(|&f| {
            subsolvers.iter().map(move |&s| Setting {
                formulation: f,
                subsolver: s,
            })
        })
        .collect())
}

fn build_instance(benchmark: &str, size: usize, file: &Option<PathBuf>) -> Result<BenchmarkInstance> {
    match benchmark {
        "ivp" => Ok(ivp(size)?),
        "obstacle" => Ok(obstacle(size)?),
        "afti16" => Ok(afti16(size, &Vector4::new(10.0, 10.0, 10.0, 10.0))),
        "file" => {
            let path = file
                .as_ref()
                .context("--benchmark file requires --file <path>")?;
            let problem = read_problem(path)
                .with_context(|| format!("loading {}", path.display()))?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".into());
            let size = problem.n();
            Ok(BenchmarkInstance {
                problem,
                name,
                size,
                layout: Vec::new(),
            })
        }
        other => bail!("unknown benchmark '{other}'"),
    }
}

#[derive(Serialize)]
struct Manifest {
    version: String,
    benchmark: String,
    sizes: Vec<usize>,
    seeds: Vec<u64>,
    settings: Vec<String>,
    options: AlmOptions,
    jobs: usize,
    records: Vec<RunRecord>,
}

/// One sweep cell, fully determined by (setting, size, seed).
struct Cell {
    setting: Setting,
    size: usize,
    seed: u64,
}

pub fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    let settings = parse_settings(&args.formulation, &args.subsolver)?;
    let base_opts = args.solver.build()?;
    let sizes: Vec<usize> = if args.benchmark == "file" {
        vec![0] // placeholder; the file defines its own size
    } else {
        args.sizes.clone()
    };

    // instances are built and validated once per size, outside any timer
    let mut instances = Vec::new();
    for &size in &sizes {
        let inst = build_instance(&args.benchmark, size.max(2), &args.file)?;
        let report = inst.problem.validate();
        if !report.is_clean() {
            bail!("instance {} failed validation: {:?}", inst.name, report.violations);
        }
        instances.push(inst);
    }

    let cells: Vec<Cell> = settings
        .iter()
        .flat_map(|setting| {
            instances.iter().enumerate().flat_map(move |(i, _)| {
                let setting = setting.clone();
                args.seeds.iter().map(move |&seed| Cell {
                    setting: setting.clone(),
                    size: i,
                    seed,
                })
            })
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .context("building sweep thread pool")?;
    let records: Vec<RunRecord> = pool.install(|| {
        use rayon::prelude::*;
        cells
            .par_iter()
            .map(|cell| run_cell(cell, &instances[cell.size], &base_opts))
            .collect()
    });

    crate::ensure_dir(&args.out)?;
    write_outputs(args, &settings, &base_opts, records)?;
    Ok(0)
}

fn run_cell(cell: &Cell, instance: &BenchmarkInstance, base: &AlmOptions) -> RunRecord {
    let opts = AlmOptions {
        formulation: cell.setting.formulation,
        subsolver: cell.setting.subsolver,
        ..base.clone()
    };
    let init = random_init(&instance.problem, cell.seed);
    // the timer covers the solve only, not problem construction
    let t0 = Instant::now();
    let outcome = alm_solve(&instance.problem, &opts, &init);
    let elapsed = t0.elapsed().as_secs_f64();
    match outcome {
        Ok(r) => RunRecord::new(
            cell.setting.id(),
            instance.name.clone(),
            instance.size,
            cell.seed,
            r.status,
            elapsed,
            r.inner_iterations,
            r.outer_iterations,
        ),
        Err(_) => RunRecord::new(
            cell.setting.id(),
            instance.name.clone(),
            instance.size,
            cell.seed,
            AlmStatus::IterationCap,
            elapsed,
            0,
            0,
        ),
    }
}

fn sanitize(id: &str) -> String {
    id.replace('/', "_")
}

fn write_outputs(
    args: &BenchArgs,
    settings: &[Setting],
    options: &AlmOptions,
    records: Vec<RunRecord>,
) -> Result<()> {
    let out = &args.out;
    let mut runtime_curves = Vec::new();

    for setting in settings {
        let id = setting.id();
        let mine: Vec<RunRecord> = records
            .iter()
            .filter(|r| r.setting == id)
            .cloned()
            .collect();
        if mine.is_empty() {
            continue;
        }
        let runtime = data_profile(&mine).map_err(|e| anyhow::anyhow!("{e}"))?;
        let mut buf = Vec::new();
        write_profile_csv(&runtime, &mut buf)?;
        std::fs::write(out.join(format!("data_profile_runtime__{}.csv", sanitize(&id))), buf)?;

        // iteration-based twin: identical across reruns with equal seeds
        let iters =
            data_profile_by(&mine, |r| r.iteration_cost()).map_err(|e| anyhow::anyhow!("{e}"))?;
        let mut buf = Vec::new();
        write_profile_csv(&iters, &mut buf)?;
        std::fs::write(out.join(format!("data_profile_iters__{}.csv", sanitize(&id))), buf)?;

        let scal: Vec<_> = scalability_profile(&mine);
        let mut buf = Vec::new();
        write_scalability_csv(&scal, &mut buf)?;
        std::fs::write(out.join(format!("scalability__{}.csv", sanitize(&id))), buf)?;

        runtime_curves.push((id, runtime));
    }

    if settings.len() >= 2 {
        for (id, profile) in performance_profile(&records).map_err(|e| anyhow::anyhow!("{e}"))? {
            let mut buf = Vec::new();
            write_profile_csv(&profile, &mut buf)?;
            std::fs::write(out.join(format!("perf_profile__{}.csv", sanitize(&id))), buf)?;
        }
    }

    let svg_curves: Vec<(String, &geoqp::profiles::StepFunction)> = runtime_curves
        .iter()
        .map(|(id, sf)| (id.clone(), sf))
        .collect();
    let mut buf = Vec::new();
    write_profile_svg(&svg_curves, "data profiles (runtime)", "budget [s]", &mut buf)?;
    std::fs::write(out.join("data_profiles.svg"), buf)?;

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        benchmark: args.benchmark.clone(),
        sizes: args.sizes.clone(),
        seeds: args.seeds.clone(),
        settings: settings.iter().map(Setting::id).collect(),
        options: options.clone(),
        jobs: args.jobs,
        records,
    };
    std::fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;

    let solved = manifest
        .records
        .iter()
        .filter(|r| r.status == AlmStatus::Solved)
        .count();
    println!(
        "{} cells, {} solved; outputs in {}",
        manifest.records.len(),
        solved,
        out.display()
    );
    Ok(())
}

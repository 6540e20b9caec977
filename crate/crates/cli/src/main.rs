//! `ewi`: run convergence sweeps, Strichartz probes and dynamics from a
//! preset or a TOML config.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use ewi_core::config::{preset, ExperimentKind, RunConfig, PRESETS};
use ewi_core::ewi::{evolve, SchemeSummary};
use ewi_core::experiments::{run_convergence, run_dynamics_demo, strichartz_probe};
use ewi_core::io::{self, RunInfo, Space};
use ewi_core::{Error, NormKind};

/// Configuration problems, including parameters rejected before any run.
const EXIT_CONFIG: u8 = 2;
/// A run aborted (non-finite state, solver failure, I/O).
const EXIT_RUNTIME: u8 = 3;
/// A sweep finished but no member produced an error estimate.
const EXIT_EMPTY: u8 = 4;

#[derive(Parser)]
#[command(name = "ewi", version, about = "Filtered exponential wave integrator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a config file.
    Run(RunArgs),
    /// Print the built-in presets.
    ListPresets,
    /// Describe a field artifact or check a config file.
    Inspect { path: PathBuf },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: runs/<name>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random potentials.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    snapshot_stride: Option<usize>,
}

enum Failure {
    Config(String),
    Runtime(String),
    EmptySweep,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Failure::Config(e.to_string())
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::ListPresets => {
            for name in PRESETS {
                let cfg = preset(name).expect("built-in preset");
                println!("{name:<14} {:<12} d={} n={:?}", cfg.experiment, cfg.grid.n.len(), cfg.grid.n);
            }
            Ok(())
        }
        Command::Inspect { path } => inspect(&path),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("run aborted: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::EmptySweep) => {
            eprintln!("no sweep member succeeded; see the manifest for the failures");
            ExitCode::from(EXIT_EMPTY)
        }
    }
}

fn load(args: &RunArgs) -> Result<(RunConfig, String), Failure> {
    let (mut cfg, name) = match (&args.preset, &args.config) {
        (Some(name), _) => (preset(name).map_err(Failure::config)?, name.clone()),
        (None, Some(path)) => {
            let cfg = RunConfig::from_file(path).map_err(Failure::config)?;
            let stem = path.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
            (cfg, stem)
        }
        (None, None) => return Err(Failure::Config("give --preset or --config".into())),
    };
    cfg.apply_seed(args.seed);
    if let Some(stride) = args.snapshot_stride {
        cfg.io.snapshot_stride = Some(stride);
    }
    if let Some(out) = &args.out {
        cfg.io.out = Some(out.clone());
    }
    cfg.validate().map_err(Failure::config)?;
    Ok((cfg, name))
}

fn run(args: RunArgs) -> Result<(), Failure> {
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(Failure::config)?;
    }
    let (cfg, name) = load(&args)?;
    let out = cfg.io.out.clone().unwrap_or_else(|| Path::new("runs").join(&name));
    let info = RunInfo {
        preset: cfg.preset.clone(),
        seed: cfg.io.seed,
        notes: cfg.notes.clone(),
    };
    let resolved = cfg.to_toml_string().map_err(Failure::runtime)?;
    io::write_text(&out.join("config.toml"), &resolved).map_err(Failure::runtime)?;
    eprintln!("{} run, writing to {}", cfg.experiment, out.display());
    let clock = Instant::now();
    match cfg.experiment {
        ExperimentKind::Convergence => convergence(&cfg, &info, &out)?,
        ExperimentKind::Strichartz => strichartz(&cfg, &info, &out)?,
        ExperimentKind::Dynamics => dynamics(&cfg, &info, &out)?,
        ExperimentKind::SingleRun => single(&cfg, &info, &out)?,
    }
    eprintln!("done in {:.1} s", clock.elapsed().as_secs_f64());
    Ok(())
}

/// Errors raised while turning a config into runnable objects are config errors.
fn prepare<T>(r: ewi_core::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| match e {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::InvalidGrid(_)
        | Error::Inadmissible(_)
        | Error::GridMismatch
        | Error::SizeMismatch { .. } => Failure::config(e),
        other => Failure::runtime(other),
    })
}

fn convergence(cfg: &RunConfig, info: &RunInfo, out: &Path) -> Result<(), Failure> {
    let sweep = prepare(cfg.sweep())?;
    let report = run_convergence(&sweep).map_err(Failure::runtime)?;
    io::write_report(&report, info, out).map_err(Failure::runtime)?;
    println!("{:>12} {:>14} {:>14}", "tau", "err_L2", "err_H1");
    for row in &report.rows {
        match &row.failure {
            None => println!(
                "{:>12.4e} {:>14} {:>14}",
                row.tau,
                row.err_l2.map_or("-".into(), |e| format!("{e:.4e}")),
                row.err_h1.map_or("-".into(), |e| format!("{e:.4e}"))
            ),
            Some(why) => println!("{:>12.4e} failed: {why}", row.tau),
        }
    }
    for kind in [NormKind::L2, NormKind::H1] {
        if let Some(fit) = report.fit(kind) {
            println!("order {kind:?}: {:.3} (residual {:.2e})", fit.slope, fit.residual);
        }
    }
    for note in &report.fit_notes {
        println!("note: {note}");
    }
    if !report.monotone {
        println!("warning: errors are not monotone in tau");
    }
    if let Some(check) = &report.reference_check {
        println!(
            "reference check: relative change {:.2e}{}",
            check.max_relative_change,
            if check.flagged { " (flagged)" } else { "" }
        );
    }
    if report.succeeded() == 0 {
        return Err(Failure::EmptySweep);
    }
    Ok(())
}

fn strichartz(cfg: &RunConfig, info: &RunInfo, out: &Path) -> Result<(), Failure> {
    let probe = prepare(cfg.strichartz())?;
    let report = prepare(strichartz_probe(&probe))?;
    io::write_strichartz(&report, info, out).map_err(Failure::runtime)?;
    println!("pair (q, r) = ({}, {})", report.pair.q(), report.pair.r());
    for row in &report.rows {
        println!("tau {:>10.4e}  ratio {:.6}", row.tau, row.ratio);
    }
    println!("max/min ratio {:.4}", report.spread);
    Ok(())
}

fn dynamics(cfg: &RunConfig, info: &RunInfo, out: &Path) -> Result<(), Failure> {
    let setup = prepare(cfg.dynamics())?;
    let report = run_dynamics_demo(&setup).map_err(Failure::runtime)?;
    let files = io::write_dynamics(&report, info, out).map_err(Failure::runtime)?;
    println!("relative mass drift {:.3e}", report.relative_mass_drift);
    if let Some(a) = &report.first_approach {
        println!(
            "first approach: center {:?} at t = {:.3} (distance {:.3}{})",
            a.center,
            a.time,
            a.distance,
            if a.within_radius { "" } else { ", closest pass only" }
        );
    }
    println!("{} density snapshots", files.len());
    Ok(())
}

fn single(cfg: &RunConfig, info: &RunInfo, out: &Path) -> Result<(), Failure> {
    let (params, datum) = prepare(cfg.single_run())?;
    let stride = cfg.io.snapshot_stride.unwrap_or(usize::MAX);
    let traj = evolve(&datum, &params, stride).map_err(Failure::runtime)?;
    let files = io::write_trajectory(&traj, &SchemeSummary::from(&params), info, out).map_err(Failure::runtime)?;
    println!(
        "{} steps, mass drift {:.3e}, {} states written",
        traj.mass_trace.len() - 1,
        traj.max_mass_drift(),
        files.len()
    );
    Ok(())
}

fn inspect(path: &Path) -> Result<(), Failure> {
    if path.extension().is_some_and(|e| e == "toml") {
        let cfg = RunConfig::from_file(path).map_err(Failure::config)?;
        print!("{}", cfg.to_toml_string().map_err(Failure::runtime)?);
        return Ok(());
    }
    let (header, samples) = io::read_samples(path).map_err(|e| match e {
        Error::Format(_) => Failure::config(e),
        other => Failure::runtime(other),
    })?;
    let cell: f64 = header.grid.bounds.iter().zip(&header.grid.n).map(|(b, n)| (b[1] - b[0]) / *n as f64).product();
    let max = samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
    let sum_sq: f64 = samples.iter().map(|s| s.norm_sqr()).sum();
    println!("format version {}", header.version);
    println!("samples        {:?}, {:?}", header.kind, header.space);
    for (j, (b, n)) in header.grid.bounds.iter().zip(&header.grid.n).enumerate() {
        println!("axis {j}         ({}, {}) with {n} points", b[0], b[1]);
    }
    println!("max |u|        {max:.6e}");
    if header.space == Space::Nodes {
        println!("L2 (nodes)     {:.6e}", (cell * sum_sq).sqrt());
    }
    Ok(())
}

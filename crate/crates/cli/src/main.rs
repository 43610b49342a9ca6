//! `soliton`: ground states, single runs, h-sweeps and report checks.
//!
//! Exit codes:
//!
//! | code | failure |
//! |------|---------|
//! | 0 | success |
//! | 1 | file or I/O error |
//! | 2 | invalid config, parameter or grid |
//! | 3 | assumption probe failed (`W` or `V` conditions) |
//! | 4 | ground-state solver did not converge or collapsed |
//! | 5 | run-time monitor tripped (charge, energy, boundary, spectrum, amplitude) |
//! | 6 | initial data rejected (placement, resolution, admissibility) |
//! | 7 | analysis failed (time mismatch, too few sweep points, report mismatch) |
//!
//! Every failure also prints one line to standard error:
//! `error class=<Class> code=<n> [step=<k>] message=<text>`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use soliton_core::fieldfile::save_ground_state;
use soliton_core::harness::{
    assumption_checks, compare, prepare_ground_state, report_file_name, run_experiment, run_sweep, RunOptions,
};
use soliton_core::{Error, ExperimentConfig};

#[derive(Parser)]
#[command(name = "soliton", version, about = "Semiclassical NLS soliton dynamics")]
struct Cli {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the ground state and write `ground_state.bin`.
    GroundState(Common),
    /// One propagation with diagnostics.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Semiclassical parameter; defaults to the first value of the config.
        #[arg(long)]
        h: Option<f64>,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run every h of the config and write `report.csv`.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Run this single value instead of the config list.
        #[arg(long)]
        h: Option<f64>,
    },
    /// Check the config and the assumption probes, without solving.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute a saved report from its trajectory files.
    Compare {
        /// Directory holding `report.csv` and the trajectories.
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Core(Error),
    Mismatch(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    use Error::*;
    match e {
        Io(_) | FieldFile(_) => 1,
        Config(_) | InvalidParameter(_) | InvalidGrid(_) => 2,
        AssumptionViolation { .. } => 3,
        NoConvergence { .. } | CollapseDetected { .. } => 4,
        ChargeDrift { .. } | EnergyDrift { .. } | BoundaryMassExceeded { .. } | SpectralTailExceeded { .. }
        | AmplitudeGrowth { .. } => 5,
        UnderResolved { .. } | TooCloseToBoundary { .. } | PhaseUnderResolved { .. } | BoundUnachievable(_)
        | Inadmissible(_) => 6,
        EscapeDetected { .. } | TimeMismatch(_) | InsufficientPoints { .. } => 7,
    }
}

fn out_dir(common: &Common, config: &ExperimentConfig) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(&config.output.dir))
}

fn create(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

fn ground_state(common: &Common) -> Result<(), Failure> {
    let config = ExperimentConfig::load(&common.config)?;
    let gs = prepare_ground_state(&config)?;
    let dir = out_dir(common, &config);
    create(&dir)?;
    let path = dir.join("ground_state.bin");
    save_ground_state(&path, &gs)?;
    println!("omega = {}", gs.omega);
    println!("energy = {}", gs.energy);
    println!("residual = {:.3e}", gs.residual);
    println!("iterations = {}", gs.iterations);
    for c in gs.checks(1e-8) {
        println!("{c}");
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn evolve(common: &Common, h: Option<f64>, resume: Option<PathBuf>) -> Result<(), Failure> {
    let config = ExperimentConfig::load(&common.config)?;
    let h = h.unwrap_or(config.model.h[0]);
    let dir = out_dir(common, &config);
    create(&dir)?;
    let gs = prepare_ground_state(&config)?;
    let run = run_experiment(&config, h, &gs, &RunOptions { out_dir: Some(dir), resume, r_hat: None })?;
    let s = &run.summary;
    println!("h = {h}  dt = {:.4e}  steps = {}  samples = {}  R_hat = {:.4}", run.dt, run.steps, s.samples, run.r_hat);
    println!("sup|H| = {:.4e}  (shift {:.4e}, spread {:.4e})", s.sup_h, s.sup_h_shift, s.sup_h_spread);
    println!("sup|q - q_newton| = {:.4e}", s.sup_newton_distance);
    println!(
        "max drift: charge {:.3e}, energy {:.3e}; max boundary mass {:.3e}; max conc fraction {:.4e}",
        s.max_charge_drift, s.max_energy_drift, s.max_boundary_mass, s.max_conc_fraction
    );
    println!("lemma growth: {}", s.lemma_growth);
    if let Some(p) = &run.trajectory_path {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn sweep(common: &Common, h: Option<f64>) -> Result<(), Failure> {
    let mut config = ExperimentConfig::load(&common.config)?;
    let dir = out_dir(common, &config);
    if let Some(h) = h {
        config = config.with_h(h);
    }
    let report = run_sweep(&config, Some(&dir))?;
    println!("{:>8} {:>8} {:>12} {:>12} {:>12} {:>10}  failure", "h", "status", "sup|H|", "sup|q-qN|", "max conc", "runtime");
    for r in &report.rows {
        println!(
            "{:>8} {:>8} {:>12.4e} {:>12.4e} {:>12.4e} {:>9.1}s  {}",
            r.h, r.status, r.sup_h, r.sup_newton_distance, r.max_conc_fraction, r.runtime_s, r.failure
        );
    }
    let tag = |v: &soliton_core::harness::Verdict| match (v.decreasing, v.floor) {
        (true, true) => "decreasing (floor)",
        (true, false) => "decreasing",
        _ => "NOT decreasing",
    };
    println!("sup|H_h|: {}", tag(&report.residual));
    println!("sup|q_h - q_newton|: {}", tag(&report.newton));
    if config.output.report {
        println!("wrote {}", dir.join(report_file_name()).display());
    }
    Ok(())
}

fn validate(config: &Path) -> Result<(), Failure> {
    let config = ExperimentConfig::load(config)?;
    let checks = assumption_checks(&config)?;
    for c in &checks {
        println!("{c}");
    }
    soliton_core::assumptions::first_failure(&checks)?;
    println!("config ok");
    Ok(())
}

fn compare_dir(dir: &Path) -> Result<(), Failure> {
    let rows = compare(dir)?;
    let mut bad = Vec::new();
    for c in &rows {
        let tag = if c.identical() { "identical" } else { "DIFFERS" };
        println!(
            "h = {}: sup|H| {:e} vs {:e}, sup|q-qN| {:e} vs {:e}: {tag}",
            c.h, c.reported.sup_h, c.recomputed.sup_h, c.reported.sup_newton_distance, c.recomputed.sup_newton_distance
        );
        if !c.identical() {
            bad.push(c.h.to_string());
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Mismatch(format!("report differs from trajectories for h = {}", bad.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error class=Config code=2 message=thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::GroundState(c) => ground_state(c),
        Command::Evolve { common, h, resume } => evolve(common, *h, resume.clone()),
        Command::Sweep { common, h } => sweep(common, *h),
        Command::Validate { config } => validate(config),
        Command::Compare { out } => compare_dir(out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            let code = exit_code(&e);
            let step = e.step().map(|s| format!(" step={s}")).unwrap_or_default();
            eprintln!("error class={} code={code}{step} message={e}", e.class());
            ExitCode::from(code)
        }
        Err(Failure::Mismatch(m)) => {
            eprintln!("error class=ReportMismatch code=7 message={m}");
            ExitCode::from(7)
        }
    }
}

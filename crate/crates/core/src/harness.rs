//! Runs, sweeps over `h`, and the reports built from them.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assumptions::AssumptionCheck;
use crate::config::ExperimentConfig;
use crate::csvio::{read_table, read_trajectory, write_table, write_trajectory, Metadata, REPORT_TAG};
use crate::diagnostics::{calibrate_radius, lemma_monitors, norm, Diagnostics, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::fieldfile::{load_checkpoint, load_ground_state, save_checkpoint, FieldHeader};
use crate::grid::WaveField;
use crate::ground_state::{minimize_on_sphere, GroundState};
use crate::initial::{build_initial_datum, make_perturbation, validate_admissibility, InitialDatumSpec};
use crate::newton::{integrate_newton, NewtonOptions};
use crate::nonlinearity::check_nonlinearity;
use crate::potential::{check_potential, validate_potential};
use crate::propagator::PropagatorState;
use crate::spectral::SpectralPlan;

/// Minimum number of valid sweep members for a verdict.
pub const MIN_SWEEP_POINTS: usize = 3;

/// Loads the ground state named in the config, or solves for it.
pub fn prepare_ground_state(config: &ExperimentConfig) -> Result<GroundState> {
    let w = config.nonlinearity();
    match &config.ground_state.path {
        Some(p) => {
            crate::nonlinearity::validate_nonlinearity(w.as_ref(), config.grid.dim)?;
            let gs = load_ground_state(Path::new(p))?;
            if gs.profile.grid.dim() != config.grid.dim || gs.sigma != config.model.sigma {
                return Err(Error::Config(format!("ground state in {p} does not match the model section")));
            }
            Ok(gs)
        }
        None => minimize_on_sphere(w.as_ref(), config.model.sigma, &config.ground_state_grid()?, &config.solver_options()),
    }
}

/// Every assumption probe that needs no ground state: the conditions on `W`
/// and, unless switched off, on `V`.
pub fn assumption_checks(config: &ExperimentConfig) -> Result<Vec<AssumptionCheck>> {
    config.validate()?;
    let mut checks = check_nonlinearity(config.nonlinearity().as_ref(), config.grid.dim);
    if config.potential.probe {
        checks.extend(check_potential(config.potential().as_ref(), &config.grid()?));
    }
    Ok(checks)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory for the trajectory CSV and checkpoints.
    pub out_dir: Option<PathBuf>,
    /// Continue from this checkpoint.
    pub resume: Option<PathBuf>,
    /// Concentration radius in units of `h^beta`. Calibrated on the initial
    /// state when absent.
    pub r_hat: Option<f64>,
}

/// Sup-norms and drifts of one run, computed from its records alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub sup_h: f64,
    pub sup_h_shift: f64,
    pub sup_h_spread: f64,
    /// `sup |q - q_newton|`; NaN without a reference.
    pub sup_newton_distance: f64,
    pub max_charge_drift: f64,
    pub max_energy_drift: f64,
    pub max_boundary_mass: f64,
    pub max_conc_fraction: f64,
    pub samples: usize,
    pub t_end: f64,
    /// Monitored series that at least doubled over the second half, `;`-separated.
    pub lemma_growth: String,
}

fn sup(records: &[TrajectoryRecord], f: impl Fn(&TrajectoryRecord) -> f64) -> f64 {
    records.iter().map(f).fold(0.0, f64::max)
}

/// The summary of a run. Drifts are relative to the first record.
pub fn summarize_records(records: &[TrajectoryRecord], position_floor: f64) -> RunSummary {
    let first = records.first().cloned().unwrap_or_default();
    let e_scale = if first.energy != 0.0 { first.energy.abs() } else { 1.0 };
    let newton = records.iter().all(|r| r.newton_q.is_some()) && !records.is_empty();
    let lemma = lemma_monitors(records, position_floor);
    let growing: Vec<&str> = lemma.series.iter().filter(|s| s.growing).map(|s| s.name).collect();
    RunSummary {
        sup_h: sup(records, |r| norm(&r.h_res)),
        sup_h_shift: sup(records, |r| norm(&r.h_shift)),
        sup_h_spread: sup(records, |r| norm(&r.h_spread)),
        sup_newton_distance: if newton {
            sup(records, |r| {
                let nq = r.newton_q.as_ref().expect("checked above");
                norm(&r.q.iter().zip(nq).map(|(a, b)| a - b).collect::<Vec<_>>())
            })
        } else {
            f64::NAN
        },
        max_charge_drift: sup(records, |r| ((r.charge - first.charge) / first.charge).abs()),
        max_energy_drift: sup(records, |r| ((r.energy - first.energy) / e_scale).abs()),
        max_boundary_mass: sup(records, |r| r.boundary_mass),
        max_conc_fraction: sup(records, |r| r.conc_fraction),
        samples: records.len(),
        t_end: records.last().map_or(0.0, |r| r.t),
        lemma_growth: if growing.is_empty() { "none".into() } else { growing.join(";") },
    }
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub h: f64,
    pub records: Vec<TrajectoryRecord>,
    pub summary: RunSummary,
    pub meta: Metadata,
    pub dt: f64,
    pub stride: usize,
    pub steps: usize,
    /// Calibrated concentration radius in units of `h^beta`.
    pub r_hat: f64,
    pub dx: f64,
    pub runtime_s: f64,
    pub trajectory_path: Option<PathBuf>,
}

pub fn trajectory_file_name(h: f64) -> String {
    format!("trajectory_h{h}.csv")
}

pub fn checkpoint_file_name(h: f64) -> String {
    format!("checkpoint_h{h}.bin")
}

/// The admissible initial datum of the run at `h`.
pub fn initial_state(config: &ExperimentConfig, h: f64, gs: &GroundState) -> Result<WaveField> {
    let params = config.params(h)?;
    let v = config.potential();
    let k = config.initial.k;
    let w0 = make_perturbation(&config.perturbation(), gs, &params, k, v.as_ref())?;
    let spec = InitialDatumSpec::new(config.initial.q0.clone(), config.initial.v.clone(), params, gs.clone())?
        .with_perturbation(w0);
    let psi0 = build_initial_datum(&spec, &config.grid()?)?;
    validate_admissibility(&psi0, &spec, k, v.as_ref()).into_result()?;
    Ok(psi0)
}

/// One radius for the whole sweep: the largest of the per-member radii
/// calibrated on the initial states, so every member starts with at most
/// `eps` of its charge outside the ball. Members whose initial data fail
/// are skipped here and reported by their runs.
pub fn calibrate_sweep_radius(config: &ExperimentConfig, gs: &GroundState) -> Option<f64> {
    config
        .model
        .h
        .par_iter()
        .filter_map(|&h| {
            let psi0 = initial_state(config, h, gs).ok()?;
            let scale = config.params(h).ok()?.width_scale();
            calibrate_radius(&psi0, config.tolerances.concentration_eps, scale).ok()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(f64::max)
}

/// One propagation at `h` with diagnostics at every sample.
pub fn run_experiment(config: &ExperimentConfig, h: f64, gs: &GroundState, opts: &RunOptions) -> Result<RunArtifacts> {
    let start = Instant::now();
    config.validate()?;
    let params = config.params(h)?;
    let grid = config.grid()?;
    let w = config.nonlinearity();
    let v = config.potential();
    if config.potential.probe {
        validate_potential(v.as_ref(), &grid)?;
    }
    let psi0 = initial_state(config, h, gs)?;
    let r_hat = match opts.r_hat {
        Some(r) => r,
        None => calibrate_radius(&psi0, config.tolerances.concentration_eps, params.width_scale())?,
    };
    let plan = Arc::new(SpectralPlan::new(&grid));
    let diag = Diagnostics::new(params, w.clone(), v.clone(), plan.clone(), r_hat * params.width_scale());
    let mut state =
        PropagatorState::new(psi0, params, w, v.clone(), plan, config.time_step(), config.monitor_limits())?;
    let t_end = config.time.t_end;
    let dt0 = state.dt();
    let stride = config.stride(dt0);
    let escape = 0.8 * 0.5 * config.grid.length;
    let newton = integrate_newton(
        v.as_ref(),
        &config.initial.q0,
        &config.initial.v,
        t_end,
        dt0,
        NewtonOptions { scheme: config.time.newton_scheme.into(), stride, escape_radius: escape },
    )?;

    let dx = grid.min_spacing();
    let mut meta = Metadata::new();
    meta.insert("h".into(), h.to_string());
    meta.insert("dim".into(), config.grid.dim.to_string());
    meta.insert("dx".into(), dx.to_string());
    meta.insert("dt".into(), (t_end / (t_end / dt0 * (1.0 - 1e-12)).ceil().max(1.0)).to_string());
    meta.insert("stride".into(), stride.to_string());
    meta.insert("r_hat".into(), r_hat.to_string());

    let traj_path = opts
        .out_dir
        .as_ref()
        .filter(|_| config.output.trajectory)
        .map(|d| d.join(trajectory_file_name(h)));
    let ckpt_path = opts.out_dir.as_ref().map(|d| d.join(checkpoint_file_name(h)));

    let mut records = Vec::new();
    if let Some(resume) = &opts.resume {
        let (psi, _) = load_checkpoint(resume)?;
        let tc = psi.time;
        if let Some(p) = traj_path.as_ref().filter(|p| p.exists()) {
            let (_, old) = read_trajectory(p)?;
            records = old.into_iter().filter(|r| r.t < tc).collect();
        }
        state.resume_from(psi)?;
    }

    let every = config.output.checkpoint_every;
    let dim = config.grid.dim;
    let mut since_checkpoint = 0;
    let mut sink = |s: &PropagatorState, _: &_| -> Result<()> {
        let mut r = diag.record(&s.psi);
        if let Some((q, p)) = newton.state_at(r.t) {
            r.newton_energy = Some(0.5 * p.iter().map(|x| x * x).sum::<f64>() + v.value(&q));
            r.newton_q = Some(q);
            r.newton_p = Some(p);
        }
        records.push(r);
        since_checkpoint += 1;
        if every > 0 && since_checkpoint >= every {
            since_checkpoint = 0;
            if let Some(p) = &ckpt_path {
                save_checkpoint(p, &s.psi, FieldHeader::default())?;
            }
            if let Some(p) = &traj_path {
                write_trajectory(p, &meta, dim, &records)?;
            }
        }
        Ok(())
    };
    state.evolve(t_end, stride, &mut sink)?;
    let steps = state.steps_taken();
    if let Some(p) = &traj_path {
        write_trajectory(p, &meta, dim, &records)?;
    }
    if let (true, Some(p)) = (every > 0, &ckpt_path) {
        save_checkpoint(p, &state.psi, FieldHeader::default())?;
    }
    let summary = summarize_records(&records, dx);
    Ok(RunArtifacts {
        h,
        records,
        summary,
        meta,
        dt: state.dt(),
        stride,
        steps,
        r_hat,
        dx,
        runtime_s: start.elapsed().as_secs_f64(),
        trajectory_path: traj_path,
    })
}

/// One row of the sweep report. Failed runs carry the error class and, for
/// run-time monitors, the step index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub h: f64,
    pub status: String,
    pub failure: String,
    pub failure_step: Option<usize>,
    pub sup_h: f64,
    pub sup_h_shift: f64,
    pub sup_h_spread: f64,
    pub sup_newton_distance: f64,
    pub max_charge_drift: f64,
    pub max_energy_drift: f64,
    pub max_boundary_mass: f64,
    pub max_conc_fraction: f64,
    pub lemma_growth: String,
    pub r_hat: f64,
    pub dt: f64,
    pub stride: usize,
    pub steps: usize,
    pub samples: usize,
    pub runtime_s: f64,
    pub trajectory: String,
}

impl SweepRow {
    pub fn is_valid(&self) -> bool {
        self.status == "ok"
    }

    fn from_run(a: &RunArtifacts) -> Self {
        let s = &a.summary;
        SweepRow {
            h: a.h,
            status: "ok".into(),
            failure: String::new(),
            failure_step: None,
            sup_h: s.sup_h,
            sup_h_shift: s.sup_h_shift,
            sup_h_spread: s.sup_h_spread,
            sup_newton_distance: s.sup_newton_distance,
            max_charge_drift: s.max_charge_drift,
            max_energy_drift: s.max_energy_drift,
            max_boundary_mass: s.max_boundary_mass,
            max_conc_fraction: s.max_conc_fraction,
            lemma_growth: s.lemma_growth.clone(),
            r_hat: a.r_hat,
            dt: a.dt,
            stride: a.stride,
            steps: a.steps,
            samples: s.samples,
            runtime_s: a.runtime_s,
            trajectory: a
                .trajectory_path
                .as_ref()
                .and_then(|p| p.file_name())
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        }
    }

    fn failed(h: f64, e: &Error, runtime_s: f64) -> Self {
        SweepRow {
            h,
            status: "invalid".into(),
            failure: format!("{}: {e}", e.class()),
            failure_step: e.step(),
            sup_h: f64::NAN,
            sup_h_shift: f64::NAN,
            sup_h_spread: f64::NAN,
            sup_newton_distance: f64::NAN,
            max_charge_drift: f64::NAN,
            max_energy_drift: f64::NAN,
            max_boundary_mass: f64::NAN,
            max_conc_fraction: f64::NAN,
            lemma_growth: String::new(),
            r_hat: f64::NAN,
            dt: f64::NAN,
            stride: 0,
            steps: 0,
            samples: 0,
            runtime_s,
            trajectory: String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    /// Every consecutive pair of valid runs decreases by more than the slack.
    pub decreasing: bool,
    /// All values sit below the discretization floor, so the flag holds
    /// vacuously.
    pub floor: bool,
}

/// `values[i+1] < (1 - slack) values[i]` for all consecutive pairs, or all
/// values below `floor`.
pub fn decay_verdict(values: &[f64], slack: f64, floor: f64) -> Verdict {
    if values.iter().all(|v| *v <= floor) {
        return Verdict { decreasing: true, floor: true };
    }
    Verdict { decreasing: values.windows(2).all(|w| w[1] < (1.0 - slack) * w[0]), floor: false }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub residual: Verdict,
    pub newton: Verdict,
    /// The full runs, in sweep order; `None` for invalid members.
    pub runs: Vec<Option<RunArtifacts>>,
}

impl SweepReport {
    pub fn valid_rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.is_valid())
    }

    fn metadata(&self) -> Metadata {
        let mut m = Metadata::new();
        m.insert("decay_H".into(), self.residual.decreasing.to_string());
        m.insert("decay_H_floor".into(), self.residual.floor.to_string());
        m.insert("decay_newton".into(), self.newton.decreasing.to_string());
        m.insert("decay_newton_floor".into(), self.newton.floor.to_string());
        m
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_table(path, REPORT_TAG, &self.metadata(), &self.rows)
    }
}

pub fn report_file_name() -> &'static str {
    "report.csv"
}

fn verdicts(rows: &[SweepRow], config: &ExperimentConfig) -> Result<(Verdict, Verdict)> {
    let valid: Vec<&SweepRow> = rows.iter().filter(|r| r.is_valid()).collect();
    if valid.len() < MIN_SWEEP_POINTS {
        return Err(Error::InsufficientPoints { valid: valid.len(), required: MIN_SWEEP_POINTS });
    }
    let t = &config.tolerances;
    let hs: Vec<f64> = valid.iter().map(|r| r.sup_h).collect();
    let qs: Vec<f64> = valid.iter().map(|r| r.sup_newton_distance).collect();
    Ok((decay_verdict(&hs, t.decay_slack, t.residual_floor), decay_verdict(&qs, t.decay_slack, t.residual_floor)))
}

/// Runs every `h` of the config (concurrently on the current rayon pool)
/// against one shared ground state and assembles the report.
pub fn run_sweep(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<SweepReport> {
    config.validate()?;
    if config.model.h.len() < MIN_SWEEP_POINTS {
        return Err(Error::InsufficientPoints { valid: config.model.h.len(), required: MIN_SWEEP_POINTS });
    }
    let gs = prepare_ground_state(config)?;
    if let Some(d) = out_dir {
        std::fs::create_dir_all(d)?;
    }
    let r_hat = calibrate_sweep_radius(config, &gs);
    let opts = RunOptions { out_dir: out_dir.map(Path::to_path_buf), resume: None, r_hat };
    let results: Vec<(f64, Result<RunArtifacts>, f64)> = config
        .model
        .h
        .par_iter()
        .map(|&h| {
            let start = Instant::now();
            let r = run_experiment(config, h, &gs, &opts);
            (h, r, start.elapsed().as_secs_f64())
        })
        .collect();
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for (h, r, secs) in results {
        match r {
            Ok(a) => {
                rows.push(SweepRow::from_run(&a));
                runs.push(Some(a));
            }
            Err(e) => {
                rows.push(SweepRow::failed(h, &e, secs));
                runs.push(None);
            }
        }
    }
    let verdict = verdicts(&rows, config);
    let unknown = Verdict { decreasing: false, floor: false };
    let (residual, newton) = verdict.as_ref().map_or((unknown, unknown), |v| *v);
    let report = SweepReport { rows, residual, newton, runs };
    // Written even when too few members survived, so their failures can be read.
    if let (Some(d), true) = (out_dir, config.output.report) {
        report.write(&d.join(report_file_name()))?;
    }
    verdict?;
    Ok(report)
}

/// One row of a comparison between a saved report and its trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub h: f64,
    pub reported: RunSummary,
    pub recomputed: RunSummary,
}

impl Comparison {
    /// Bitwise agreement of every number recomputable from the trajectory.
    pub fn identical(&self) -> bool {
        let a = &self.reported;
        let b = &self.recomputed;
        let same = |x: f64, y: f64| x.to_bits() == y.to_bits();
        same(a.sup_h, b.sup_h)
            && same(a.sup_h_shift, b.sup_h_shift)
            && same(a.sup_h_spread, b.sup_h_spread)
            && same(a.sup_newton_distance, b.sup_newton_distance)
            && same(a.max_charge_drift, b.max_charge_drift)
            && same(a.max_energy_drift, b.max_energy_drift)
            && same(a.max_boundary_mass, b.max_boundary_mass)
            && same(a.max_conc_fraction, b.max_conc_fraction)
            && a.samples == b.samples
            && a.lemma_growth == b.lemma_growth
    }
}

fn meta_f64(meta: &Metadata, key: &str) -> Result<f64> {
    meta.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Io(format!("trajectory metadata lacks {key}")))
}

/// Summary of a trajectory file, recomputed from its rows.
pub fn summarize_trajectory(path: &Path) -> Result<(Metadata, RunSummary)> {
    let (meta, records) = read_trajectory(path)?;
    let dx = meta_f64(&meta, "dx")?;
    Ok((meta, summarize_records(&records, dx)))
}

/// Recomputes every valid row of `dir/report.csv` from the trajectory files
/// next to it.
pub fn compare(dir: &Path) -> Result<Vec<Comparison>> {
    let (_, rows): (_, Vec<SweepRow>) = read_table(&dir.join(report_file_name()), REPORT_TAG)?;
    let mut out = Vec::new();
    for row in rows.iter().filter(|r| r.is_valid() && !r.trajectory.is_empty()) {
        let (_, recomputed) = summarize_trajectory(&dir.join(&row.trajectory))?;
        let reported = RunSummary {
            sup_h: row.sup_h,
            sup_h_shift: row.sup_h_shift,
            sup_h_spread: row.sup_h_spread,
            sup_newton_distance: row.sup_newton_distance,
            max_charge_drift: row.max_charge_drift,
            max_energy_drift: row.max_energy_drift,
            max_boundary_mass: row.max_boundary_mass,
            max_conc_fraction: row.max_conc_fraction,
            samples: row.samples,
            t_end: recomputed.t_end,
            lemma_growth: row.lemma_growth.clone(),
        };
        out.push(Comparison { h: row.h, reported, recomputed });
    }
    Ok(out)
}

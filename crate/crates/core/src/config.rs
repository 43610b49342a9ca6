//! Experiment configuration, read from TOML. Unknown keys are rejected.
//!
//! ```toml
//! [grid]
//! dim = 1
//! length = 16.0
//! points = 4096
//!
//! [model]
//! alpha = 1.0
//! gamma = 0.0
//! sigma = 2.0
//! h = [0.4, 0.2, 0.1]
//!
//! [nonlinearity]
//! kind = "power"        # power | mass-shifted | none
//! p = 4.0
//!
//! [potential]
//! kind = "quartic"      # zero | harmonic | quartic
//! lambda = 1.0
//!
//! [initial]
//! q0 = [1.0]
//! v = [0.0]
//!
//! [time]
//! t_end = 10.0
//! ```
//!
//! The remaining sections (`output`, `tolerances`, `ground_state`) and most
//! keys are optional; see the field docs for defaults.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::ground_state::SolverOptions;
use crate::initial::PerturbationRecipe;
use crate::newton::Scheme;
use crate::nonlinearity::{FocusingPower, MassShifted, NoInteraction, Nonlinearity};
use crate::params::ModelParams;
use crate::potential::{Potential, RadialPolynomial};
use crate::propagator::{MonitorLimits, TimeStep};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub model: ModelSection,
    pub nonlinearity: NonlinearitySection,
    pub potential: PotentialSection,
    pub initial: InitialSection,
    pub time: TimeSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub ground_state: GroundStateSection,
}

/// Simulation box `[-L/2, L/2)^N` with `points` nodes per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub length: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub alpha: f64,
    pub gamma: f64,
    /// Charge radius of the ground state, `||U|| = sigma`.
    pub sigma: f64,
    /// Semiclassical parameters, strictly decreasing.
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearityKind {
    /// `W(s) = -s^p / p`.
    Power,
    /// `W(s) = s^2/2 - s^4/4`, a negative control.
    MassShifted,
    /// `W = 0`.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    pub kind: NonlinearityKind,
    #[serde(default = "default_power")]
    pub p: f64,
}

fn default_power() -> f64 {
    4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    Zero,
    /// `kappa |x|^2 / 2`.
    Harmonic,
    /// `kappa |x|^2 / 2 + lambda |x|^4 / 4`.
    Quartic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub kind: PotentialKind,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default)]
    pub offset: f64,
    /// Run the growth probes before any computation.
    #[serde(default = "yes")]
    pub probe: bool,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub q0: Vec<f64>,
    pub v: Vec<f64>,
    /// `||w0||_H1` as a fraction of `K h^(alpha - gamma)`; 0 for a bare soliton.
    #[serde(default)]
    pub amplitude_fraction: f64,
    /// The constant of the admissible set.
    #[serde(default = "one")]
    pub k: f64,
    /// Width of the perturbation bump in ground-state coordinates.
    #[serde(default = "one")]
    pub bump_width: f64,
    /// Bump center in ground-state coordinates; defaults to the origin, which
    /// keeps the initial barycenter at `q0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bump_offset: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NewtonScheme {
    Rk4,
    Yoshida4,
}

impl From<NewtonScheme> for Scheme {
    fn from(s: NewtonScheme) -> Self {
        match s {
            NewtonScheme::Rk4 => Scheme::Rk4,
            NewtonScheme::Yoshida4 => Scheme::Yoshida4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_end: f64,
    /// Explicit step. When absent the step follows the phase-increment rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Bound on the phase increment per substep for the automatic rule.
    #[serde(default = "half")]
    pub max_phase: f64,
    /// Steps between samples. Mutually exclusive with `sample_interval`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    /// Time between samples; defaults to `t_end / 200`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_interval: Option<f64>,
    #[serde(default = "default_scheme")]
    pub newton_scheme: NewtonScheme,
}

fn half() -> f64 {
    0.5
}

fn default_scheme() -> NewtonScheme {
    NewtonScheme::Rk4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    /// Write the per-run trajectory CSV.
    pub trajectory: bool,
    /// Write the sweep report CSV.
    pub report: bool,
    /// Write a checkpoint every this many samples (0 disables).
    pub checkpoint_every: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into(), trajectory: true, report: true, checkpoint_every: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSection {
    pub charge_drift: f64,
    /// Relative to `|E(0)|`.
    pub energy_drift: f64,
    /// Charge fraction allowed in the outer shell of the box.
    pub boundary_mass: f64,
    /// Spectral power allowed in the top octave.
    pub spectral_tail: f64,
    /// Allowed growth factor of `max |psi|`.
    pub amplitude_growth: f64,
    /// Target `eps` for the concentration radius calibrated at `t = 0`.
    pub concentration_eps: f64,
    /// `sup |H|` below this counts as the discretization floor.
    pub residual_floor: f64,
    /// Relative decrease required between consecutive sweep members.
    pub decay_slack: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        let m = MonitorLimits::default();
        ToleranceSection {
            charge_drift: m.charge_drift,
            energy_drift: m.energy_drift,
            boundary_mass: m.boundary_mass,
            spectral_tail: m.spectral_tail,
            amplitude_growth: m.amplitude_growth,
            concentration_eps: 1e-2,
            residual_floor: 1e-6,
            decay_slack: 0.05,
        }
    }
}

/// Ground-state solve at `h = 1` on its own box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundStateSection {
    /// Box length; defaults to 40 in 1D and 30 otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    /// Points per axis; defaults to 2048 in 1D and 256 otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    pub tau: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Load the profile from a field file instead of solving.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl Default for GroundStateSection {
    fn default() -> Self {
        let s = SolverOptions::default();
        GroundStateSection {
            length: None,
            points: None,
            tau: s.tau,
            max_iterations: s.max_iterations,
            tolerance: s.tolerance,
            path: None,
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Structural checks that need no computation.
    pub fn validate(&self) -> Result<()> {
        let d = self.grid.dim;
        check((1..=3).contains(&d), || format!("grid.dim must be 1, 2 or 3, got {d}"))?;
        check(self.grid.length > 0.0, || "grid.length must be positive".into())?;
        check(self.grid.points >= 4 && self.grid.points.is_multiple_of(2), || "grid.points must be even and at least 4".into())?;
        check(!self.model.h.is_empty(), || "model.h must list at least one value".into())?;
        check(self.model.h.iter().all(|&h| h > 0.0 && h.is_finite()), || "every h must be positive".into())?;
        check(self.model.h.windows(2).all(|w| w[1] < w[0]), || {
            format!("model.h must be strictly decreasing, got {:?}", self.model.h)
        })?;
        check(self.model.sigma > 0.0, || "model.sigma must be positive".into())?;
        check(self.initial.q0.len() == d && self.initial.v.len() == d, || {
            format!("initial.q0 and initial.v need {d} components")
        })?;
        if let Some(o) = &self.initial.bump_offset {
            check(o.len() == d, || format!("initial.bump_offset needs {d} components"))?;
        }
        check(self.initial.k > 0.0, || "initial.k must be positive".into())?;
        check(self.time.t_end > 0.0 && self.time.t_end.is_finite(), || "time.t_end must be positive".into())?;
        check(self.time.dt.is_none_or(|dt| dt > 0.0), || "time.dt must be positive".into())?;
        check(self.time.max_phase > 0.0, || "time.max_phase must be positive".into())?;
        check(!(self.time.stride.is_some() && self.time.sample_interval.is_some()), || {
            "set at most one of time.stride and time.sample_interval".into()
        })?;
        check(self.time.stride.is_none_or(|s| s > 0), || "time.stride must be positive".into())?;
        check(self.time.sample_interval.is_none_or(|s| s > 0.0), || "time.sample_interval must be positive".into())?;
        let gs = &self.ground_state;
        check(gs.tau > 0.0 && gs.tolerance > 0.0, || "ground_state.tau and tolerance must be positive".into())?;
        Ok(())
    }

    /// Copy with the sweep replaced by the single value `h`.
    pub fn with_h(&self, h: f64) -> Self {
        let mut c = self.clone();
        c.model.h = vec![h];
        c
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::cubic(self.grid.dim, self.grid.length, self.grid.points)
    }

    pub fn ground_state_grid(&self) -> Result<Grid> {
        let d = self.grid.dim;
        let length = self.ground_state.length.unwrap_or(if d == 1 { 40.0 } else { 30.0 });
        let points = self.ground_state.points.unwrap_or(if d == 1 { 2048 } else { 256 });
        Grid::cubic(d, length, points)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tau: self.ground_state.tau,
            max_iterations: self.ground_state.max_iterations,
            tolerance: self.ground_state.tolerance,
            ..SolverOptions::default()
        }
    }

    pub fn params(&self, h: f64) -> Result<ModelParams> {
        ModelParams::new(h, self.model.alpha, self.model.gamma, self.model.sigma, self.grid.dim)
    }

    pub fn nonlinearity(&self) -> Arc<dyn Nonlinearity> {
        match self.nonlinearity.kind {
            NonlinearityKind::Power => Arc::new(FocusingPower::new(self.nonlinearity.p)),
            NonlinearityKind::MassShifted => Arc::new(MassShifted),
            NonlinearityKind::None => Arc::new(NoInteraction),
        }
    }

    pub fn potential(&self) -> Arc<dyn Potential> {
        let p = &self.potential;
        let v = match p.kind {
            PotentialKind::Zero => RadialPolynomial::zero(),
            PotentialKind::Harmonic => RadialPolynomial::harmonic(p.kappa),
            PotentialKind::Quartic => RadialPolynomial::quartic(p.lambda, p.kappa),
        };
        Arc::new(v.shifted(p.offset))
    }

    pub fn perturbation(&self) -> PerturbationRecipe {
        let i = &self.initial;
        PerturbationRecipe {
            width: i.bump_width,
            offset: i.bump_offset.clone().unwrap_or_else(|| vec![0.0; self.grid.dim]),
            amplitude_fraction: i.amplitude_fraction,
        }
    }

    pub fn monitor_limits(&self) -> MonitorLimits {
        let t = &self.tolerances;
        MonitorLimits {
            charge_drift: t.charge_drift,
            energy_drift: t.energy_drift,
            boundary_mass: t.boundary_mass,
            spectral_tail: t.spectral_tail,
            amplitude_growth: t.amplitude_growth,
        }
    }

    pub fn time_step(&self) -> TimeStep {
        match self.time.dt {
            Some(dt) => TimeStep::Fixed(dt),
            None => TimeStep::MaxPhase(self.time.max_phase),
        }
    }

    /// Sample stride in steps for a run with step `dt`.
    pub fn stride(&self, dt: f64) -> usize {
        match (self.time.stride, self.time.sample_interval) {
            (Some(s), _) => s,
            (None, interval) => {
                let interval = interval.unwrap_or(self.time.t_end / 200.0);
                ((interval / dt).round() as usize).max(1)
            }
        }
    }
}

//! Strang split-step propagation of
//! `i h psi_t = -(h^2/2) Lap psi + (1/(2 h^alpha)) W'(h^gamma |psi|) psi/|psi| + V psi`.
//!
//! The potential and nonlinear terms only rotate the phase, so their flow is
//! exact pointwise; the kinetic flow is exact in Fourier space.

use std::sync::Arc;

use num_complex::Complex64;

use crate::energy::energy_parts;
use crate::error::{Error, Result};
use crate::grid::WaveField;
use crate::nonlinearity::Nonlinearity;
use crate::params::ModelParams;
use crate::potential::Potential;
use crate::spectral::SpectralPlan;

/// Relative density below which a point does not count as populated when
/// choosing the time step.
const POPULATED: f64 = 1e-10;
/// Spectral power fraction ignored when estimating the bandwidth of a state.
const BANDWIDTH_TAIL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorLimits {
    pub charge_drift: f64,
    pub energy_drift: f64,
    pub boundary_mass: f64,
    pub spectral_tail: f64,
    pub amplitude_growth: f64,
}

impl Default for MonitorLimits {
    fn default() -> Self {
        MonitorLimits {
            charge_drift: 1e-8,
            energy_drift: 1e-4,
            boundary_mass: 1e-6,
            spectral_tail: 1e-8,
            amplitude_growth: 10.0,
        }
    }
}

impl MonitorLimits {
    /// Every monitor switched off.
    pub fn disabled() -> Self {
        MonitorLimits {
            charge_drift: f64::INFINITY,
            energy_drift: f64::INFINITY,
            boundary_mass: f64::INFINITY,
            spectral_tail: f64::INFINITY,
            amplitude_growth: f64::INFINITY,
        }
    }
}

/// How the step is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    /// Largest step keeping every substep's phase increment below the bound.
    MaxPhase(f64),
}

/// Measured monitor values at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorSnapshot {
    pub charge_drift: f64,
    pub energy_drift: f64,
    pub boundary_mass: f64,
    pub spectral_tail: f64,
    pub amplitude_factor: f64,
}

pub struct PropagatorState {
    pub psi: WaveField,
    params: ModelParams,
    w: Arc<dyn Nonlinearity>,
    v: Arc<dyn Potential>,
    plan: Arc<SpectralPlan>,
    v_samples: Vec<f64>,
    kinetic: Vec<Complex64>,
    dealias: Option<Vec<Complex64>>,
    dt: f64,
    step: usize,
    t0: f64,
    charge0: f64,
    energy0: f64,
    modulus0: f64,
    limits: MonitorLimits,
}

impl std::fmt::Debug for PropagatorState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PropagatorState")
            .field("time", &self.psi.time)
            .field("dt", &self.dt)
            .field("step", &self.step)
            .finish()
    }
}

/// Phase rate `V + (1/(2 h^alpha)) W'(h^gamma s)/s` at modulus `s`.
fn phase_rate(params: &ModelParams, w: &dyn Nonlinearity, v: f64, s: f64) -> f64 {
    let hg = params.h().powf(params.gamma());
    v + 0.5 * params.h().powf(-params.alpha()) * hg * w.derivative_over_s(hg * s)
}

/// Step from the phase-increment rule: `(dt/2) max rate / h` and
/// `h k^2 dt / 2` both at most `max_phase`.
///
/// The rate maximum runs over populated points only, and `k` is the
/// effective bandwidth of `psi` plus the largest wavenumber the classical
/// motion can reach, `sqrt(2 G / charge) / h`.
pub fn choose_dt(
    psi: &WaveField,
    params: &ModelParams,
    w: &dyn Nonlinearity,
    v: &dyn Potential,
    plan: &SpectralPlan,
    max_phase: f64,
) -> f64 {
    let h = params.h();
    let vs = v.sample(&psi.grid);
    let density = psi.density();
    let peak = density.iter().cloned().fold(0.0, f64::max);
    let mut rate = 0.0f64;
    for ((z, &rho), &vv) in psi.values.iter().zip(&density).zip(&vs) {
        if rho > POPULATED * peak {
            rate = rate.max(phase_rate(params, w, vv, z.norm()).abs());
        }
    }
    let parts = energy_parts(psi, params, w, v, plan);
    let drift_k = (2.0 * parts.dynamical.max(0.0) / psi.charge()).sqrt() / h;
    let k = plan.effective_bandwidth(&psi.values, BANDWIDTH_TAIL) + drift_k;
    let dt_phase = if rate > 0.0 { 2.0 * max_phase * h / rate } else { f64::INFINITY };
    let dt_kin = if k > 0.0 { 2.0 * max_phase / (h * k * k) } else { f64::INFINITY };
    dt_phase.min(dt_kin)
}

impl PropagatorState {
    pub fn new(
        psi: WaveField,
        params: ModelParams,
        w: Arc<dyn Nonlinearity>,
        v: Arc<dyn Potential>,
        plan: Arc<SpectralPlan>,
        step: TimeStep,
        limits: MonitorLimits,
    ) -> Result<Self> {
        if psi.grid != *plan.grid() {
            return Err(Error::InvalidGrid("wavefield and spectral plan use different grids".into()));
        }
        let dt = match step {
            TimeStep::Fixed(dt) => dt,
            TimeStep::MaxPhase(phi) => {
                if !(phi > 0.0) {
                    return Err(Error::InvalidParameter(format!("max phase must be positive, got {phi}")));
                }
                choose_dt(&psi, &params, w.as_ref(), v.as_ref(), &plan, phi)
            }
        };
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be finite and nonzero, got {dt}")));
        }
        let charge0 = psi.charge();
        if !(charge0 > 0.0) {
            return Err(Error::InvalidParameter("initial state has no charge".into()));
        }
        let energy0 = energy_parts(&psi, &params, w.as_ref(), v.as_ref(), &plan).total;
        let modulus0 = psi.max_modulus();
        let v_samples = v.sample(&psi.grid);
        let kinetic = plan.kinetic_multiplier(dt, params.h());
        let t0 = psi.time;
        Ok(PropagatorState {
            psi,
            params,
            w,
            v,
            plan,
            v_samples,
            kinetic,
            dealias: None,
            dt,
            step: 0,
            t0,
            charge0,
            energy0,
            modulus0,
            limits,
        })
    }

    /// Apply the 2/3-rule filter after every kinetic substep.
    pub fn with_dealiasing(mut self, on: bool) -> Self {
        self.dealias = if on { Some(self.plan.dealias_mask()) } else { None };
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.psi.time
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn plan(&self) -> &Arc<SpectralPlan> {
        &self.plan
    }

    pub fn initial_charge(&self) -> f64 {
        self.charge0
    }

    pub fn initial_energy(&self) -> f64 {
        self.energy0
    }

    /// Continue from `psi` (a checkpoint of the same run), keeping the
    /// monitor baselines measured on the initial state.
    pub fn resume_from(&mut self, psi: WaveField) -> Result<()> {
        if psi.grid != *self.plan.grid() {
            return Err(Error::InvalidGrid("checkpoint grid differs from the run grid".into()));
        }
        self.psi = psi;
        self.t0 = self.psi.time;
        self.step = 0;
        Ok(())
    }

    /// Change the step (negative steps run backwards in time). The step
    /// counter restarts from the current time.
    pub fn set_dt(&mut self, dt: f64) {
        self.dt = dt;
        self.kinetic = self.plan.kinetic_multiplier(dt, self.params.h());
        self.t0 = self.psi.time;
        self.step = 0;
    }

    fn phase_flow(&mut self, tau: f64) {
        let h = self.params.h();
        for (z, &vv) in self.psi.values.iter_mut().zip(&self.v_samples) {
            let rate = phase_rate(&self.params, self.w.as_ref(), vv, z.norm());
            *z *= Complex64::from_polar(1.0, -tau * rate / h);
        }
    }

    fn kinetic_flow(&mut self) {
        self.plan.forward(&mut self.psi.values);
        for (z, m) in self.psi.values.iter_mut().zip(&self.kinetic) {
            *z *= m;
        }
        if let Some(mask) = &self.dealias {
            for (z, m) in self.psi.values.iter_mut().zip(mask) {
                *z *= m;
            }
        }
        self.plan.inverse(&mut self.psi.values);
    }

    /// One Strang step: half phase flow, full kinetic flow, half phase flow.
    pub fn step_strang(&mut self) {
        self.advance(1);
    }

    /// `n` Strang steps. Adjacent half phase flows are fused, which is exact
    /// because the phase flow leaves `|psi|` unchanged.
    pub fn advance(&mut self, n: usize) {
        if n == 0 {
            return;
        }
        self.phase_flow(0.5 * self.dt);
        for i in 0..n {
            self.kinetic_flow();
            let tau = if i + 1 == n { 0.5 * self.dt } else { self.dt };
            self.phase_flow(tau);
        }
        self.step += n;
        self.psi.time = self.t0 + self.step as f64 * self.dt;
    }

    pub fn snapshot(&self) -> MonitorSnapshot {
        let charge = self.psi.charge();
        let energy = energy_parts(&self.psi, &self.params, self.w.as_ref(), self.v.as_ref(), &self.plan).total;
        let scale = if self.energy0 != 0.0 { self.energy0.abs() } else { 1.0 };
        MonitorSnapshot {
            charge_drift: ((charge - self.charge0) / self.charge0).abs(),
            energy_drift: ((energy - self.energy0) / scale).abs(),
            boundary_mass: self.psi.boundary_mass_fraction(),
            spectral_tail: self.plan.top_octave_fraction(&self.psi.values),
            amplitude_factor: self.psi.max_modulus() / self.modulus0,
        }
    }

    /// Fails with the first monitor over its limit, naming the step.
    pub fn check_monitors(&self) -> Result<MonitorSnapshot> {
        let s = self.snapshot();
        let step = self.step;
        let l = &self.limits;
        if s.charge_drift > l.charge_drift {
            return Err(Error::ChargeDrift { step, drift: s.charge_drift, limit: l.charge_drift });
        }
        if s.boundary_mass > l.boundary_mass {
            return Err(Error::BoundaryMassExceeded { step, fraction: s.boundary_mass, limit: l.boundary_mass });
        }
        if s.spectral_tail > l.spectral_tail {
            return Err(Error::SpectralTailExceeded { step, fraction: s.spectral_tail, limit: l.spectral_tail });
        }
        if s.amplitude_factor > l.amplitude_growth {
            return Err(Error::AmplitudeGrowth { step, factor: s.amplitude_factor });
        }
        if s.energy_drift > l.energy_drift {
            return Err(Error::EnergyDrift { step, drift: s.energy_drift, limit: l.energy_drift });
        }
        Ok(s)
    }

    /// Run to `t_end`. The step is shrunk so the last step lands on `t_end`
    /// exactly. Monitors are checked and `sink` is called at the start,
    /// every `stride` steps, and at the end.
    pub fn evolve(
        &mut self,
        t_end: f64,
        stride: usize,
        mut sink: impl FnMut(&PropagatorState, &MonitorSnapshot) -> Result<()>,
    ) -> Result<()> {
        let span = t_end - self.psi.time;
        if !(span > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "end time {t_end} is not after the current time {}",
                self.psi.time
            )));
        }
        let stride = stride.max(1);
        let n = ((span / self.dt.abs()) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        self.set_dt(span / n as f64);
        let snap = self.check_monitors()?;
        sink(self, &snap)?;
        let mut done = 0;
        while done < n {
            let k = stride.min(n - done);
            self.advance(k);
            done += k;
            if done == n {
                self.psi.time = t_end;
            }
            let snap = self.check_monitors()?;
            sink(self, &snap)?;
        }
        Ok(())
    }
}

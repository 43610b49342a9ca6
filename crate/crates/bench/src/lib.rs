//! Shared fixtures for the kernel benchmarks.

use std::sync::Arc;

use soliton_core::{
    Diagnostics, FocusingPower, GroundState, Grid, ModelParams, MonitorLimits, Nonlinearity, Potential,
    PropagatorState, RadialPolynomial, RealField, SpectralPlan, TimeStep, WaveField,
};

/// The 1D cubic soliton `sqrt(2) sech x` on `[-L/2, L/2)`.
pub fn sech_ground_state(length: f64, points: usize) -> GroundState {
    let grid = Grid::cubic(1, length, points).expect("valid grid");
    let profile = RealField::from_fn(&grid, |x| 2f64.sqrt() / x[0].cosh());
    GroundState {
        profile,
        omega: -0.5,
        energy: -2.0 / 3.0,
        sigma: 2.0,
        residual: 0.0,
        iterations: 0,
        center: vec![0.0],
    }
}

/// Everything a propagation benchmark needs, for a moving soliton in a quartic well.
pub struct Fixture {
    pub params: ModelParams,
    pub w: Arc<dyn Nonlinearity>,
    pub v: Arc<dyn Potential>,
    pub plan: Arc<SpectralPlan>,
    pub psi: WaveField,
}

impl Fixture {
    pub fn new(points: usize, h: f64) -> Self {
        let grid = Grid::cubic(1, 16.0, points).expect("valid grid");
        let params = ModelParams::new(h, 1.0, 0.0, 2.0, 1).expect("valid params");
        let amp = params.amplitude_scale();
        let width = params.width_scale();
        let psi = WaveField::from_fn(&grid, 0.0, |x| {
            let xi = (x[0] - 1.0) / width;
            num_complex::Complex64::from_polar(amp * 2f64.sqrt() / xi.cosh(), 0.5 * x[0] / h)
        });
        Fixture {
            params,
            w: Arc::new(FocusingPower::new(4.0)),
            v: Arc::new(RadialPolynomial::quartic(1.0, 0.0)),
            plan: Arc::new(SpectralPlan::new(&grid)),
            psi,
        }
    }

    pub fn propagator(&self) -> PropagatorState {
        PropagatorState::new(
            self.psi.clone(),
            self.params,
            self.w.clone(),
            self.v.clone(),
            self.plan.clone(),
            TimeStep::MaxPhase(0.5),
            MonitorLimits::disabled(),
        )
        .expect("valid propagator")
    }

    pub fn diagnostics(&self) -> Diagnostics {
        let radius = 2.5 * self.params.width_scale();
        Diagnostics::new(self.params, self.w.clone(), self.v.clone(), self.plan.clone(), radius)
    }
}

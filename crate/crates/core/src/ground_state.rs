//! Constrained ground states: minimizers of `J(u) = int |grad u|^2/2 + W(u)`
//! on the sphere `||u|| = sigma`, computed by a normalized gradient flow.

use num_complex::Complex64;

use crate::assumptions::AssumptionCheck;
use crate::energy::reference_energy;
use crate::error::{Error, Result};
use crate::grid::{Grid, RealField};
use crate::nonlinearity::{validate_nonlinearity, Nonlinearity};
use crate::spectral::{laplacian_fd4, SpectralPlan};

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub profile: RealField,
    pub omega: f64,
    /// `m = J(U)`.
    pub energy: f64,
    pub sigma: f64,
    pub residual: f64,
    pub iterations: usize,
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Initial pseudo-time step; halved whenever an update raises `J`.
    pub tau: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Starting iterate. Defaults to a unit-width Gaussian scaled to `sigma`.
    pub initial: Option<RealField>,
    /// Move the density barycenter to the origin before returning.
    pub recenter: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tau: 0.5, max_iterations: 100_000, tolerance: 1e-8, initial: None, recenter: true }
    }
}

/// `2 omega = <u, -Lap u + W'(u)> / ||u||^2`.
pub fn lagrange_multiplier(u: &RealField, w: &dyn Nonlinearity, plan: &SpectralPlan) -> f64 {
    let lap = plan.laplacian_real(&u.values);
    lagrange_from_laplacian(u, &lap, w)
}

fn lagrange_from_laplacian(u: &RealField, lap: &[f64], w: &dyn Nonlinearity) -> f64 {
    let num: f64 = u.values.iter().zip(lap).map(|(&s, &l)| s * (-l + w.derivative(s))).sum();
    let den: f64 = u.values.iter().map(|s| s * s).sum();
    0.5 * num / den
}

fn residual_vector(u: &RealField, lap: &[f64], w: &dyn Nonlinearity, omega: f64) -> Vec<f64> {
    u.values.iter().zip(lap).map(|(&s, &l)| -l + w.derivative(s) - 2.0 * omega * s).collect()
}

fn relative_norm(r: &[f64], u: &RealField) -> f64 {
    let num: f64 = r.iter().map(|v| v * v).sum();
    let den: f64 = u.values.iter().map(|v| v * v).sum();
    (num / den).sqrt()
}

/// `||-Lap U + W'(U) - 2 omega U|| / ||U||` with the spectral Laplacian.
pub fn stationarity_residual(u: &RealField, w: &dyn Nonlinearity, omega: f64, plan: &SpectralPlan) -> f64 {
    let lap = plan.laplacian_real(&u.values);
    relative_norm(&residual_vector(u, &lap, w, omega), u)
}

/// Same residual with the fourth-order finite-difference Laplacian.
pub fn stationarity_residual_fd4(u: &RealField, w: &dyn Nonlinearity, omega: f64) -> f64 {
    let lap = laplacian_fd4(&u.grid, &u.values);
    relative_norm(&residual_vector(u, &lap, w, omega), u)
}

fn gaussian_start(grid: &Grid, sigma: f64) -> RealField {
    let mut u = RealField::from_fn(grid, |x| (-0.5 * x.iter().map(|c| c * c).sum::<f64>()).exp());
    let n = u.norm();
    u.scale(sigma / n);
    u
}

fn project(u: &mut RealField, sigma: f64) {
    let n = u.norm();
    u.scale(sigma / n);
}

/// Shift the barycenter to the origin if it sits more than half a cell away.
/// Smaller offsets come from the unpaired `-L/2` node and are left alone so
/// that reflection symmetry is kept exactly.
fn recenter(u: &mut RealField, plan: &SpectralPlan) {
    let c = u.density_barycenter();
    let off = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if off <= 0.5 * u.grid.min_spacing() {
        return;
    }
    let shift: Vec<f64> = c.iter().map(|v| -v).collect();
    let mut z = u.to_complex();
    plan.translate(&mut z, &shift);
    for (dst, src) in u.values.iter_mut().zip(&z) {
        *dst = src.re;
    }
}

/// Normalized gradient flow.
///
/// Each step solves `(1 - tau Lap) u* = u - tau (W'(u) - 2 omega(u) u)` in
/// Fourier space and projects `u*` back to the sphere. The update equals
/// `u - tau (1 - tau Lap)^(-1) r(u)` with `r` the stationarity residual, so a
/// fixed point is an exact solution for any `tau`.
pub fn minimize_on_sphere(
    w: &dyn Nonlinearity,
    sigma: f64,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<GroundState> {
    validate_nonlinearity(w, grid.dim())?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    if !(opts.tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {}", opts.tau)));
    }
    let plan = SpectralPlan::new(grid);
    let mut u = match &opts.initial {
        Some(init) => {
            if init.grid != *grid {
                return Err(Error::InvalidGrid("initial iterate lives on another grid".into()));
            }
            init.clone()
        }
        None => gaussian_start(grid, sigma),
    };
    project(&mut u, sigma);
    let collapse_limit = 4.0 * grid.min_spacing();
    let mut tau = opts.tau;
    let mut energy = reference_energy(&u, w, &plan);
    let mut iterations = 0;
    let mut spec = vec![Complex64::default(); grid.len()];
    loop {
        let lap = plan.laplacian_real(&u.values);
        let omega = lagrange_from_laplacian(&u, &lap, w);
        let r = residual_vector(&u, &lap, w, omega);
        let res = relative_norm(&r, &u);
        if res <= opts.tolerance {
            break;
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NoConvergence { iterations, residual: res });
        }
        iterations += 1;
        loop {
            for (z, &rv) in spec.iter_mut().zip(&r) {
                *z = Complex64::new(rv, 0.0);
            }
            plan.forward(&mut spec);
            for (z, k2) in spec.iter_mut().zip(plan.k_squared()) {
                *z /= 1.0 + tau * k2;
            }
            plan.inverse(&mut spec);
            let mut next = u.clone();
            for (v, z) in next.values.iter_mut().zip(&spec) {
                *v -= tau * z.re;
            }
            project(&mut next, sigma);
            let e = reference_energy(&next, w, &plan);
            if e <= energy + 1e-12 * energy.abs().max(1.0) {
                u = next;
                energy = e;
                break;
            }
            tau *= 0.5;
            if tau < 1e-14 {
                return Err(Error::NoConvergence { iterations, residual: res });
            }
        }
        let width = u.rms_width();
        if width < collapse_limit {
            return Err(Error::CollapseDetected { width, limit: collapse_limit });
        }
    }
    if opts.recenter {
        recenter(&mut u, &plan);
        project(&mut u, sigma);
    }
    let omega = lagrange_multiplier(&u, w, &plan);
    let residual = stationarity_residual(&u, w, omega, &plan);
    let energy = reference_energy(&u, w, &plan);
    let center = u.density_barycenter();
    Ok(GroundState { profile: u, omega, energy, sigma, residual, iterations, center })
}

/// Grid-compatible reflections `x_a -> -x_a` and, for equal axes, axis
/// swaps; returns the largest relative L2 asymmetry.
pub fn radial_asymmetry(u: &RealField) -> f64 {
    let g = &u.grid;
    let d = g.dim();
    let strides = g.strides();
    let norm = u.norm_squared().sqrt() / g.cell_volume().sqrt();
    let mut idx = vec![0usize; d];
    let mut worst = 0.0f64;
    let mut measure = |map: &dyn Fn(&[usize], &mut [usize])| {
        let mut acc = 0.0;
        let mut out = vec![0usize; d];
        for flat in 0..g.len() {
            g.unravel(flat, &mut idx);
            map(&idx, &mut out);
            let j: usize = out.iter().zip(&strides).map(|(i, s)| i * s).sum();
            acc += (u.values[flat] - u.values[j]).powi(2);
        }
        worst = worst.max(acc.sqrt() / norm);
    };
    for a in 0..d {
        let n = g.points()[a];
        measure(&|i: &[usize], o: &mut [usize]| {
            o.copy_from_slice(i);
            o[a] = (n - i[a]) % n;
        });
    }
    for a in 0..d {
        for b in a + 1..d {
            if g.points()[a] == g.points()[b] && g.lengths()[a] == g.lengths()[b] {
                measure(&|i: &[usize], o: &mut [usize]| {
                    o.copy_from_slice(i);
                    o.swap(a, b);
                });
            }
        }
    }
    worst
}

impl GroundState {
    /// Norm, positivity on the core (`|x_a| <= L_a/4`), radial symmetry and
    /// residual checks against `tolerance`.
    pub fn checks(&self, tolerance: f64) -> Vec<AssumptionCheck> {
        let g = &self.profile.grid;
        let d = g.dim();
        let norm = self.profile.norm();
        let mut min_core = f64::INFINITY;
        for (x, &v) in g.positions().chunks(d).zip(&self.profile.values) {
            if x.iter().zip(g.lengths()).all(|(xi, l)| xi.abs() <= 0.25 * l) {
                min_core = min_core.min(v);
            }
        }
        let asym = radial_asymmetry(&self.profile);
        let bary = self.center.iter().map(|c| c * c).sum::<f64>().sqrt();
        vec![
            AssumptionCheck::new(
                "mass",
                ((norm - self.sigma) / self.sigma).abs() <= 1e-10,
                format!("||U|| = {norm:.12}, sigma = {}", self.sigma),
            ),
            AssumptionCheck::new("positivity", min_core > 0.0, format!("min U on core = {min_core:.3e}")),
            AssumptionCheck::new("radial", asym <= 1e-8, format!("relative asymmetry {asym:.3e}")),
            AssumptionCheck::new(
                "stationarity",
                self.residual <= tolerance,
                format!("residual {:.3e}, tolerance {tolerance:.1e}", self.residual),
            ),
            AssumptionCheck::new(
                "centered",
                bary <= g.min_spacing(),
                format!("|barycenter| = {bary:.3e}"),
            ),
        ]
    }
}

/// Outcome of the radial decay check.
#[derive(Debug, Clone, PartialEq)]
pub struct StraussReport {
    pub skipped: bool,
    pub envelope_max: f64,
    pub non_increasing: bool,
    pub passed: bool,
    pub notice: String,
}

/// Envelope `U(r) r^((N-1)/2)` along the positive first axis for
/// `r in [1, 0.8 L/2]`: it must be finite and non-increasing on the outer
/// half of that range. Skipped in one dimension.
pub fn check_strauss_decay(gs: &GroundState) -> StraussReport {
    let g = &gs.profile.grid;
    let d = g.dim();
    if d < 2 {
        return StraussReport {
            skipped: true,
            envelope_max: f64::NAN,
            non_increasing: true,
            passed: true,
            notice: "skipped: the decay estimate needs N >= 2".into(),
        };
    }
    let strides = g.strides();
    let origin = g.origin_index();
    let n0 = g.points()[0];
    let r_end = 0.8 * 0.5 * g.lengths()[0];
    let r_mid = 0.5 * (1.0 + r_end);
    let expo = 0.5 * (d as f64 - 1.0);
    let mut samples = Vec::new();
    for i in n0 / 2..n0 {
        let r = g.coordinate(0, i);
        if r >= 1.0 && r <= r_end {
            let j = origin + (i - n0 / 2) * strides[0];
            samples.push((r, gs.profile.values[j] * r.powf(expo)));
        }
    }
    let envelope_max = samples.iter().fold(0.0f64, |m, s| m.max(s.1.abs()));
    let outer: Vec<f64> = samples.iter().filter(|s| s.0 >= r_mid).map(|s| s.1).collect();
    let slack = 1e-14 * envelope_max;
    let non_increasing = !outer.is_empty() && outer.windows(2).all(|p| p[1] <= p[0] + slack);
    let passed = envelope_max.is_finite() && non_increasing;
    StraussReport {
        skipped: false,
        envelope_max,
        non_increasing,
        passed,
        notice: format!(
            "max U r^{expo} = {envelope_max:.4e} on [1, {r_end:.2}], non-increasing beyond {r_mid:.2}: {non_increasing}"
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{FocusingPower, MassShifted};

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    #[test]
    fn sech_oracle_values() {
        let g = Grid::cubic(1, 60.0, 1024).unwrap();
        let plan = SpectralPlan::new(&g);
        let w = FocusingPower::new(4.0);
        let u = RealField::from_fn(&g, |x| 2f64.sqrt() * sech(x[0]));
        assert!((lagrange_multiplier(&u, &w, &plan) + 0.5).abs() < 1e-12);
        assert!(stationarity_residual(&u, &w, -0.5, &plan) < 1e-11);
    }

    #[test]
    fn converges_to_sech_in_1d() {
        let g = Grid::cubic(1, 40.0, 512).unwrap();
        let w = FocusingPower::new(4.0);
        let gs = minimize_on_sphere(&w, 2.0, &g, &SolverOptions::default()).unwrap();
        assert!((gs.omega + 0.5).abs() < 1e-7, "omega {}", gs.omega);
        assert!((gs.energy + 2.0 / 3.0).abs() < 1e-7, "m {}", gs.energy);
        let err = g
            .axis_coordinates(0)
            .iter()
            .zip(&gs.profile.values)
            .fold(0.0f64, |m, (x, u)| m.max((u - 2f64.sqrt() * sech(*x)).abs()));
        assert!(err < 1e-6, "L-inf error {err}");
        assert!(gs.checks(1e-8).iter().all(|c| c.passed), "{:?}", gs.checks(1e-8));
        assert!(check_strauss_decay(&gs).skipped);
    }

    #[test]
    fn exact_start_is_a_fixed_point() {
        let g = Grid::cubic(1, 40.0, 512).unwrap();
        let w = FocusingPower::new(4.0);
        let init = RealField::from_fn(&g, |x| 2f64.sqrt() * sech(x[0]));
        let opts = SolverOptions { initial: Some(init), ..SolverOptions::default() };
        let gs = minimize_on_sphere(&w, 2.0, &g, &opts).unwrap();
        assert!(gs.iterations <= 2, "{}", gs.iterations);
    }

    #[test]
    fn rejects_broken_nonlinearity() {
        let g = Grid::cubic(1, 20.0, 64).unwrap();
        let r = minimize_on_sphere(&MassShifted, 1.0, &g, &SolverOptions::default());
        assert!(matches!(r, Err(Error::AssumptionViolation { .. })));
    }

    #[test]
    fn iteration_budget_is_enforced() {
        let g = Grid::cubic(1, 40.0, 256).unwrap();
        let opts = SolverOptions { max_iterations: 3, ..SolverOptions::default() };
        let r = minimize_on_sphere(&FocusingPower::new(4.0), 2.0, &g, &opts);
        assert!(matches!(r, Err(Error::NoConvergence { iterations: 3, .. })));
    }

    #[test]
    fn large_mass_collapses_on_a_coarse_grid() {
        // width 4/sigma^2 falls below four cells
        let g = Grid::cubic(1, 20.0, 64).unwrap();
        let r = minimize_on_sphere(&FocusingPower::new(4.0), 12.0, &g, &SolverOptions::default());
        assert!(matches!(r, Err(Error::CollapseDetected { .. })), "{r:?}");
    }

    #[test]
    fn two_dimensional_cubic_ground_state() {
        let g = Grid::cubic(2, 30.0, 128).unwrap();
        let w = FocusingPower::new(3.0);
        let gs = minimize_on_sphere(&w, 4.0, &g, &SolverOptions::default()).unwrap();
        assert!(gs.checks(1e-8).iter().all(|c| c.passed), "{:?}", gs.checks(1e-8));
        let strauss = check_strauss_decay(&gs);
        assert!(strauss.passed, "{}", strauss.notice);
        let fd = stationarity_residual_fd4(&gs.profile, &w, gs.omega);
        assert!(fd.is_finite());
    }

    #[test]
    fn truncated_profile_fails_decay() {
        let g = Grid::cubic(2, 20.0, 32).unwrap();
        let profile = RealField::from_fn(&g, |x| {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            (-r).exp().max(0.05)
        });
        let gs = GroundState {
            profile,
            omega: -0.5,
            energy: 0.0,
            sigma: 1.0,
            residual: 1.0,
            iterations: 0,
            center: vec![0.0, 0.0],
        };
        assert!(!check_strauss_decay(&gs).passed);
    }
}

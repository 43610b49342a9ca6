//! The self-interaction `W`, evaluated on the modulus `s = |psi| >= 0`.

use std::fmt::Debug;

use crate::assumptions::{first_failure, AssumptionCheck};
use crate::error::Result;

/// Tolerance for the exact-zero conditions at `s = 0`.
pub const ZERO_TOLERANCE: f64 = 1e-12;

/// Growth metadata. The constants `c1, c2, c` of the growth bounds are not
/// used by any computation and are not stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearityMeta {
    /// Lower growth exponent `q` of the `W''` bound.
    pub q: f64,
    /// Upper growth exponent `p` of the `W''` bound.
    pub p: f64,
    /// Exponent `nu` of the lower bound `W(s) >= -c s^nu`.
    pub nu: f64,
    /// A point with `W(s0) < 0`.
    pub witness: f64,
}

pub trait Nonlinearity: Debug + Send + Sync {
    fn value(&self, s: f64) -> f64;
    fn derivative(&self, s: f64) -> f64;
    fn second_derivative(&self, s: f64) -> f64;
    fn meta(&self) -> NonlinearityMeta;
    fn name(&self) -> String;

    /// `W'(s)/s`, with the `s -> 0` limit `W''(0) = 0`.
    fn derivative_over_s(&self, s: f64) -> f64 {
        if s.abs() < 1e-300 {
            0.0
        } else {
            self.derivative(s) / s
        }
    }
}

/// Focusing power law `W(s) = -s^p / p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocusingPower {
    pub p: f64,
}

impl FocusingPower {
    pub fn new(p: f64) -> Self {
        FocusingPower { p }
    }
}

impl Nonlinearity for FocusingPower {
    fn value(&self, s: f64) -> f64 {
        -s.abs().powf(self.p) / self.p
    }
    fn derivative(&self, s: f64) -> f64 {
        -s.abs().powf(self.p - 1.0) * s.signum()
    }
    fn second_derivative(&self, s: f64) -> f64 {
        -(self.p - 1.0) * s.abs().powf(self.p - 2.0)
    }
    fn derivative_over_s(&self, s: f64) -> f64 {
        -s.abs().powf(self.p - 2.0)
    }
    fn meta(&self) -> NonlinearityMeta {
        NonlinearityMeta { q: self.p, p: self.p, nu: self.p, witness: 1.0 }
    }
    fn name(&self) -> String {
        format!("power(p={})", self.p)
    }
}

/// `W = 0`: the linear Schroedinger equation. Fails the negativity
/// condition; only useful for reference propagations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoInteraction;

impl Nonlinearity for NoInteraction {
    fn value(&self, _: f64) -> f64 {
        0.0
    }
    fn derivative(&self, _: f64) -> f64 {
        0.0
    }
    fn second_derivative(&self, _: f64) -> f64 {
        0.0
    }
    fn derivative_over_s(&self, _: f64) -> f64 {
        0.0
    }
    fn meta(&self) -> NonlinearityMeta {
        NonlinearityMeta { q: 4.0, p: 4.0, nu: 4.0, witness: 1.0 }
    }
    fn name(&self) -> String {
        "none".into()
    }
}

/// `W(s) = s^2/2 - s^4/4`. Has `W''(0) = 1`, so it violates the
/// vanishing-at-zero condition; kept as a negative control.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MassShifted;

impl Nonlinearity for MassShifted {
    fn value(&self, s: f64) -> f64 {
        0.5 * s * s - 0.25 * s.powi(4)
    }
    fn derivative(&self, s: f64) -> f64 {
        s - s.powi(3)
    }
    fn second_derivative(&self, s: f64) -> f64 {
        1.0 - 3.0 * s * s
    }
    fn derivative_over_s(&self, s: f64) -> f64 {
        1.0 - s * s
    }
    fn meta(&self) -> NonlinearityMeta {
        NonlinearityMeta { q: 4.0, p: 4.0, nu: 4.0, witness: 2.0 }
    }
    fn name(&self) -> String {
        "mass-shifted".into()
    }
}

/// Critical Sobolev exponent `2N/(N-2)`, infinite for `N <= 2`.
pub fn sobolev_exponent(dim: usize) -> f64 {
    if dim <= 2 {
        f64::INFINITY
    } else {
        2.0 * dim as f64 / (dim as f64 - 2.0)
    }
}

/// Probe (W0)-(W3) for dimension `dim`.
pub fn check_nonlinearity(w: &dyn Nonlinearity, dim: usize) -> Vec<AssumptionCheck> {
    let m = w.meta();
    let (w0, d0, dd0) = (w.value(0.0), w.derivative(0.0), w.second_derivative(0.0));
    let zero_ok = [w0, d0, dd0].iter().all(|v| v.abs() <= ZERO_TOLERANCE);
    let crit = sobolev_exponent(dim);
    let upper = 2.0 + 4.0 / dim as f64;
    vec![
        AssumptionCheck::new(
            "W0",
            zero_ok,
            format!("W(0) = {w0:.3e}, W'(0) = {d0:.3e}, W''(0) = {dd0:.3e}"),
        ),
        AssumptionCheck::new(
            "W1",
            2.0 < m.q && m.q <= m.p && m.p < crit,
            format!("growth exponents q = {}, p = {}, need 2 < q <= p < {crit}", m.q, m.p),
        ),
        AssumptionCheck::new(
            "W2",
            2.0 < m.nu && m.nu < upper,
            format!("lower-bound exponent nu = {}, need 2 < nu < {upper}", m.nu),
        ),
        AssumptionCheck::new(
            "W3",
            w.value(m.witness) < 0.0,
            format!("W({}) = {:.3e}", m.witness, w.value(m.witness)),
        ),
    ]
}

pub fn validate_nonlinearity(w: &dyn Nonlinearity, dim: usize) -> Result<()> {
    first_failure(&check_nonlinearity(w, dim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn power_derivatives_match_finite_differences() {
        let w = FocusingPower::new(3.0);
        for &s in &[0.3, 1.0, 2.5] {
            let e = 1e-5;
            let d = (w.value(s + e) - w.value(s - e)) / (2.0 * e);
            let dd = (w.derivative(s + e) - w.derivative(s - e)) / (2.0 * e);
            assert!((d - w.derivative(s)).abs() < 1e-8);
            assert!((dd - w.second_derivative(s)).abs() < 1e-8);
            assert!((w.derivative_over_s(s) - w.derivative(s) / s).abs() < 1e-14);
        }
    }

    #[test]
    fn built_in_instances_pass() {
        assert!(validate_nonlinearity(&FocusingPower::new(4.0), 1).is_ok());
        assert!(validate_nonlinearity(&FocusingPower::new(3.0), 2).is_ok());
        assert!(validate_nonlinearity(&FocusingPower::new(2.5), 3).is_ok());
    }

    #[test]
    fn broken_instances_fail() {
        match validate_nonlinearity(&MassShifted, 1) {
            Err(Error::AssumptionViolation { condition, .. }) => assert_eq!(condition, "W0"),
            other => panic!("expected W0 violation, got {other:?}"),
        }
        // supercritical power in 2D
        let checks = check_nonlinearity(&FocusingPower::new(4.5), 2);
        assert!(!checks.iter().find(|c| c.condition == "W2").unwrap().passed);
        // W = 0 never goes negative
        let checks = check_nonlinearity(&NoInteraction, 1);
        assert!(!checks.iter().find(|c| c.condition == "W3").unwrap().passed);
    }
}

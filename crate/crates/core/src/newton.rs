//! Point-particle reference dynamics `q'' = -grad V(q)`.

use crate::diagnostics::norm;
use crate::error::{Error, Result};
use crate::potential::Potential;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Classical fourth-order Runge-Kutta.
    #[default]
    Rk4,
    /// Fourth-order symplectic composition of leapfrog steps.
    Yoshida4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub scheme: Scheme,
    /// Record every `stride` steps; the final time is always recorded.
    pub stride: usize,
    /// `EscapeDetected` once `|q|` exceeds this.
    pub escape_radius: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { scheme: Scheme::Rk4, stride: 1, escape_radius: f64::INFINITY }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NewtonTrajectory {
    pub t: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    /// `|p|^2/2 + V(q)` per sample.
    pub energy: Vec<f64>,
}

impl NewtonTrajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Largest relative deviation of the mechanical energy from its start.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy.first().copied().unwrap_or(0.0);
        let scale = e0.abs().max(f64::MIN_POSITIVE);
        self.energy.iter().map(|e| (e - e0).abs() / scale).fold(0.0, f64::max)
    }

    /// Position at `t` by cubic Hermite interpolation on the samples.
    pub fn position_at(&self, t: f64) -> Option<Vec<f64>> {
        self.state_at(t).map(|(q, _)| q)
    }

    /// Position and velocity at `t`. Sample times return the stored state;
    /// elsewhere the cubic Hermite interpolant and its derivative are used.
    pub fn state_at(&self, t: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.t.len();
        if n == 0 || t < self.t[0] || t > self.t[n - 1] {
            return None;
        }
        let i = match self.t.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(i) => return Some((self.q[i].clone(), self.p[i].clone())),
            Err(i) => i - 1,
        };
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let dt = t1 - t0;
        let s = (t - t0) / dt;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let d00 = 6.0 * s * (s - 1.0) / dt;
        let d10 = (1.0 - s) * (1.0 - 3.0 * s);
        let d11 = s * (3.0 * s - 2.0);
        let (q0, q1, p0, p1) = (&self.q[i], &self.q[i + 1], &self.p[i], &self.p[i + 1]);
        let d = q0.len();
        let q = (0..d).map(|a| h00 * q0[a] + h10 * dt * p0[a] + h01 * q1[a] + h11 * dt * p1[a]).collect();
        let p = (0..d).map(|a| d00 * (q0[a] - q1[a]) + d10 * p0[a] + d11 * p1[a]).collect();
        Some((q, p))
    }
}

fn accel(v: &dyn Potential, q: &[f64], out: &mut [f64]) {
    v.gradient(q, out);
    out.iter_mut().for_each(|a| *a = -*a);
}

fn rk4_step(v: &dyn Potential, q: &mut [f64], p: &mut [f64], dt: f64) {
    let d = q.len();
    let mut a = vec![0.0; d];
    let mut tq = vec![0.0; d];
    let mut kq = [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut kp = [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let weights = [0.0, 0.5, 0.5, 1.0];
    for s in 0..4 {
        let c = weights[s] * dt;
        let mut tp = p.to_vec();
        for i in 0..d {
            if s > 0 {
                tq[i] = q[i] + c * kq[s - 1][i];
                tp[i] = p[i] + c * kp[s - 1][i];
            } else {
                tq[i] = q[i];
            }
        }
        accel(v, &tq, &mut a);
        kq[s].copy_from_slice(&tp);
        kp[s].copy_from_slice(&a);
    }
    for i in 0..d {
        q[i] += dt / 6.0 * (kq[0][i] + 2.0 * kq[1][i] + 2.0 * kq[2][i] + kq[3][i]);
        p[i] += dt / 6.0 * (kp[0][i] + 2.0 * kp[1][i] + 2.0 * kp[2][i] + kp[3][i]);
    }
}

fn leapfrog(v: &dyn Potential, q: &mut [f64], p: &mut [f64], dt: f64, a: &mut [f64]) {
    for i in 0..q.len() {
        q[i] += 0.5 * dt * p[i];
    }
    accel(v, q, a);
    for i in 0..q.len() {
        p[i] += dt * a[i];
        q[i] += 0.5 * dt * p[i];
    }
}

fn yoshida_step(v: &dyn Potential, q: &mut [f64], p: &mut [f64], dt: f64) {
    let cbrt2 = 2f64.powf(1.0 / 3.0);
    let w1 = 1.0 / (2.0 - cbrt2);
    let w0 = -cbrt2 * w1;
    let mut a = vec![0.0; q.len()];
    for w in [w1, w0, w1] {
        leapfrog(v, q, p, w * dt, &mut a);
    }
}

fn energy(v: &dyn Potential, q: &[f64], p: &[f64]) -> f64 {
    0.5 * p.iter().map(|x| x * x).sum::<f64>() + v.value(q)
}

/// Integrates from `(q0, v0)` over `[0, t_end]`. The step is shrunk so that
/// a whole number of steps lands on `t_end`, by the same rule as the
/// propagator, so equal `(dt, stride)` give equal sample times.
pub fn integrate_newton(
    v: &dyn Potential,
    q0: &[f64],
    v0: &[f64],
    t_end: f64,
    dt: f64,
    opts: NewtonOptions,
) -> Result<NewtonTrajectory> {
    if !(dt > 0.0 && t_end > 0.0 && dt.is_finite() && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("need dt > 0 and T > 0, got dt={dt}, T={t_end}")));
    }
    if q0.len() != v0.len() || q0.is_empty() {
        return Err(Error::InvalidParameter("q0 and v must share a positive dimension".into()));
    }
    let stride = opts.stride.max(1);
    let n = ((t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let dt = t_end / n as f64;
    let mut q = q0.to_vec();
    let mut p = v0.to_vec();
    let mut out = NewtonTrajectory::default();
    let push = |out: &mut NewtonTrajectory, t: f64, q: &[f64], p: &[f64]| {
        out.t.push(t);
        out.q.push(q.to_vec());
        out.p.push(p.to_vec());
        out.energy.push(energy(v, q, p));
    };
    push(&mut out, 0.0, &q, &p);
    for step in 1..=n {
        match opts.scheme {
            Scheme::Rk4 => rk4_step(v, &mut q, &mut p, dt),
            Scheme::Yoshida4 => yoshida_step(v, &mut q, &mut p, dt),
        }
        let t = if step == n { t_end } else { step as f64 * dt };
        let r = norm(&q);
        if !(r <= opts.escape_radius) {
            return Err(Error::EscapeDetected { time: t, radius: r });
        }
        if step % stride == 0 || step == n {
            push(&mut out, t, &q, &p);
        }
    }
    Ok(out)
}

/// `sup |q_newton(t) - q(t)|` over the measured samples. Times absent from
/// the reference are filled by cubic Hermite interpolation.
pub fn trajectory_distance(newton: &NewtonTrajectory, times: &[f64], positions: &[Vec<f64>]) -> Result<f64> {
    if times.is_empty() || newton.is_empty() || times.len() != positions.len() {
        return Err(Error::TimeMismatch("empty or ragged sample streams".into()));
    }
    let (a0, a1) = (newton.t[0], newton.t[newton.len() - 1]);
    let (b0, b1) = (times[0], times[times.len() - 1]);
    let tol = 1e-9 * a1.abs().max(1.0);
    if (a0 - b0).abs() > tol || (a1 - b1).abs() > tol {
        return Err(Error::TimeMismatch(format!("reference covers [{a0}, {a1}], measured [{b0}, {b1}]")));
    }
    let mut sup = 0.0f64;
    for (t, q) in times.iter().zip(positions) {
        let t = t.clamp(a0, a1);
        let r = newton.position_at(t).expect("time clamped into range");
        let d = norm(&r.iter().zip(q).map(|(x, y)| x - y).collect::<Vec<_>>());
        sup = sup.max(d);
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::RadialPolynomial;
    use proptest::prelude::*;

    #[test]
    fn harmonic_quarter_period() {
        let v = RadialPolynomial::harmonic(1.0);
        let tr = integrate_newton(&v, &[1.0, 0.0], &[0.0, 0.0], std::f64::consts::FRAC_PI_2, 1e-3, NewtonOptions::default())
            .unwrap();
        let last = tr.q.last().unwrap();
        assert!(norm(last) <= 1e-8, "{last:?}");
        assert_eq!(*tr.t.last().unwrap(), std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn free_motion_is_a_line() {
        let v = RadialPolynomial::zero();
        let tr = integrate_newton(&v, &[0.5], &[2.0], 3.0, 0.01, NewtonOptions::default()).unwrap();
        for (t, q) in tr.t.iter().zip(&tr.q) {
            assert!((q[0] - 0.5 - 2.0 * t).abs() < 1e-12);
        }
    }

    #[test]
    fn quartic_energy_is_conserved() {
        let v = RadialPolynomial::quartic(1.0, 0.0);
        for scheme in [Scheme::Rk4, Scheme::Yoshida4] {
            let opts = NewtonOptions { scheme, ..Default::default() };
            let tr = integrate_newton(&v, &[1.0, 0.3], &[0.0, 0.8], 20.0, 1e-3, opts).unwrap();
            assert!(tr.energy_drift() <= 1e-8, "{scheme:?}: {}", tr.energy_drift());
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let v = RadialPolynomial::harmonic(1.0);
        for scheme in [Scheme::Rk4, Scheme::Yoshida4] {
            let err = |dt: f64| {
                let opts = NewtonOptions { scheme, ..Default::default() };
                let tr = integrate_newton(&v, &[1.0], &[0.0], 2.0, dt, opts).unwrap();
                (tr.q.last().unwrap()[0] - 2f64.cos()).abs()
            };
            let ratio = err(0.04) / err(0.02);
            assert!(ratio > 14.0 && ratio < 18.0, "{scheme:?}: {ratio}");
        }
    }

    #[test]
    fn escape_is_reported() {
        let v = RadialPolynomial::zero();
        let opts = NewtonOptions { escape_radius: 2.0, ..Default::default() };
        let err = integrate_newton(&v, &[0.0], &[1.0], 5.0, 0.01, opts).unwrap_err();
        assert!(matches!(err, Error::EscapeDetected { time, .. } if (time - 2.0).abs() < 0.02));
    }

    #[test]
    fn distance_to_itself_and_interpolated() {
        let v = RadialPolynomial::quartic(1.0, 0.5);
        let fine = integrate_newton(&v, &[1.0], &[0.0], 4.0, 1e-3, NewtonOptions::default()).unwrap();
        assert_eq!(trajectory_distance(&fine, &fine.t, &fine.q).unwrap(), 0.0);
        let opts = NewtonOptions { stride: 50, ..Default::default() };
        let coarse = integrate_newton(&v, &[1.0], &[0.0], 4.0, 1e-3, opts).unwrap();
        let d = trajectory_distance(&coarse, &fine.t, &fine.q).unwrap();
        assert!(d < 1e-6, "{d}");
        let (_, p) = coarse.state_at(1.2345).unwrap();
        let (_, want) = fine.state_at(fine.t[1234]).unwrap();
        let (_, near) = coarse.state_at(fine.t[1234]).unwrap();
        assert!((near[0] - want[0]).abs() < 1e-5 && p[0].is_finite(), "{near:?} {want:?}");
        let short = integrate_newton(&v, &[1.0], &[0.0], 3.0, 1e-3, NewtonOptions::default()).unwrap();
        assert!(matches!(trajectory_distance(&short, &fine.t, &fine.q), Err(Error::TimeMismatch(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn time_reversal(q0 in -2.0..2.0f64, v0 in -1.0..1.0f64, yoshida in any::<bool>()) {
            let v = RadialPolynomial::quartic(1.0, 0.5);
            let scheme = if yoshida { Scheme::Yoshida4 } else { Scheme::Rk4 };
            let opts = NewtonOptions { scheme, ..Default::default() };
            let fwd = integrate_newton(&v, &[q0], &[v0], 2.0, 1e-3, opts).unwrap();
            let (q1, p1) = (fwd.q.last().unwrap()[0], fwd.p.last().unwrap()[0]);
            let back = integrate_newton(&v, &[q1], &[-p1], 2.0, 1e-3, opts).unwrap();
            prop_assert!((back.q.last().unwrap()[0] - q0).abs() < 1e-10);
            prop_assert!((back.p.last().unwrap()[0] + v0).abs() < 1e-10);
        }
    }
}

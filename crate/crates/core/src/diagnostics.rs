//! Measured quantities of a wavefield snapshot: barycenter and its time
//! derivatives, energies, the concentration point, and the Newton residual.

use std::sync::Arc;

use num_complex::Complex64;

use crate::energy::energy_parts;
use crate::error::{Error, Result};
use crate::grid::{Grid, WaveField};
use crate::nonlinearity::Nonlinearity;
use crate::params::ModelParams;
use crate::potential::Potential;
use crate::spectral::SpectralPlan;

/// Relative tolerance for ties between concentration-point candidates.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub qddot: Vec<f64>,
    /// `H = qddot + grad V(q)`.
    pub h_res: Vec<f64>,
    /// `grad V(q) - grad V(q_hat)`.
    pub h_shift: Vec<f64>,
    /// `grad V(q_hat) - <grad V>`.
    pub h_spread: Vec<f64>,
    pub charge: f64,
    pub energy: f64,
    pub internal: f64,
    pub dynamical: f64,
    pub q_hat: Vec<f64>,
    pub conc_fraction: f64,
    pub boundary_mass: f64,
    /// `int V |psi|^2`.
    pub potential_moment: f64,
    /// Moment over `h^(N beta - 2 alpha)`.
    pub potential_moment_alpha: f64,
    /// Moment over `h^(N beta - 2 gamma)`.
    pub potential_moment_gamma: f64,
    pub newton_q: Option<Vec<f64>>,
    pub newton_p: Option<Vec<f64>>,
    pub newton_energy: Option<f64>,
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `sum x |psi|^2 / sum |psi|^2` in box coordinates.
pub fn barycenter(psi: &WaveField) -> Vec<f64> {
    let d = psi.grid.dim();
    let mut num = vec![0.0; d];
    let mut den = 0.0;
    for (x, z) in psi.grid.positions().chunks(d).zip(&psi.values) {
        let rho = z.norm_sqr();
        den += rho;
        for a in 0..d {
            num[a] += x[a] * rho;
        }
    }
    num.iter().map(|n| n / den).collect()
}

/// Barycenter, refused when more than `limit` of the charge sits in the
/// outer shell where the periodic coordinate is ambiguous.
pub fn barycenter_checked(psi: &WaveField, limit: f64) -> Result<Vec<f64>> {
    let fraction = psi.boundary_mass_fraction();
    if fraction > limit {
        return Err(Error::BoundaryMassExceeded { step: 0, fraction, limit });
    }
    Ok(barycenter(psi))
}

/// `Im(h sum conj(psi) grad psi) / charge`.
pub fn barycenter_velocity(psi: &WaveField, h: f64, plan: &SpectralPlan) -> Vec<f64> {
    let grads = plan.gradient(&psi.values);
    let charge: f64 = psi.values.iter().map(|z| z.norm_sqr()).sum();
    grads
        .iter()
        .map(|g| {
            let j: f64 = psi.values.iter().zip(g).map(|(z, dz)| (z.conj() * dz).im).sum();
            h * j / charge
        })
        .collect()
}

/// `-sum grad V |psi|^2 / charge`, with `grad_v` sampled point-major.
pub fn ehrenfest_from_samples(psi: &WaveField, grad_v: &[f64]) -> Vec<f64> {
    let d = psi.grid.dim();
    let mut acc = vec![0.0; d];
    let mut charge = 0.0;
    for (g, z) in grad_v.chunks(d).zip(&psi.values) {
        let rho = z.norm_sqr();
        charge += rho;
        for a in 0..d {
            acc[a] -= g[a] * rho;
        }
    }
    acc.iter().map(|a| a / charge).collect()
}

pub fn ehrenfest_acceleration(psi: &WaveField, v: &dyn Potential) -> Vec<f64> {
    ehrenfest_from_samples(psi, &v.sample_gradient(&psi.grid))
}

/// Both sides of the integration-by-parts identity for the force:
/// `(sum V grad|psi|^2 dx^N, -sum grad V |psi|^2 dx^N)`.
pub fn force_identity(psi: &WaveField, v: &dyn Potential, plan: &SpectralPlan) -> (Vec<f64>, Vec<f64>) {
    let d = psi.grid.dim();
    let dv = psi.grid.cell_volume();
    let rho: Vec<f64> = psi.density();
    let grads = plan.gradient_real(&rho);
    let vs = v.sample(&psi.grid);
    let lhs = grads
        .iter()
        .map(|g| g.iter().zip(&vs).map(|(z, vv)| z.re * vv).sum::<f64>() * dv)
        .collect();
    let gv = v.sample_gradient(&psi.grid);
    let mut rhs = vec![0.0; d];
    for (g, r) in gv.chunks(d).zip(&rho) {
        for a in 0..d {
            rhs[a] -= g[a] * r * dv;
        }
    }
    (lhs, rhs)
}

/// Minimum-image offset of `x` from `c` on the periodic box.
fn periodic_offset(grid: &Grid, x: &[f64], c: &[f64], out: &mut [f64]) {
    for a in 0..grid.dim() {
        let l = grid.lengths()[a];
        let mut d = x[a] - c[a];
        d -= l * (d / l).round();
        out[a] = d;
    }
}

/// Spectrum of the indicator of the ball `|x| <= radius` centred at the
/// grid origin in FFT order, for fast ball averages.
fn ball_spectrum(plan: &SpectralPlan, radius: f64) -> Vec<Complex64> {
    let g = plan.grid();
    let d = g.dim();
    let mut idx = vec![0usize; d];
    let mut ball: Vec<Complex64> = (0..g.len())
        .map(|flat| {
            g.unravel(flat, &mut idx);
            let r2: f64 = (0..d)
                .map(|a| {
                    let n = g.points()[a];
                    let i = idx[a] as f64;
                    let off = if idx[a] < n / 2 { i } else { i - n as f64 };
                    (off * g.spacing(a)).powi(2)
                })
                .sum();
            Complex64::new(if r2 <= radius * radius { 1.0 } else { 0.0 }, 0.0)
        })
        .collect();
    plan.forward(&mut ball);
    ball
}

fn argmax_ball(psi: &WaveField, plan: &SpectralPlan, ball: &[Complex64]) -> Vec<f64> {
    let g = &psi.grid;
    let d = g.dim();
    let mut conv: Vec<Complex64> = psi.values.iter().map(|z| Complex64::new(z.norm_sqr(), 0.0)).collect();
    plan.forward(&mut conv);
    conv.iter_mut().zip(ball).for_each(|(a, b)| *a *= b);
    plan.inverse(&mut conv);
    let best = conv.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let cut = best - TIE_TOLERANCE * best.abs();
    let mut pos = vec![0.0; d];
    let mut chosen: Option<(f64, Vec<f64>)> = None;
    for (flat, z) in conv.iter().enumerate() {
        if z.re >= cut {
            g.position(flat, &mut pos);
            let r = norm(&pos);
            if chosen.as_ref().is_none_or(|(rc, _)| r < *rc) {
                chosen = Some((r, pos.clone()));
            }
        }
    }
    chosen.map(|c| c.1).unwrap_or_else(|| vec![0.0; d])
}

/// Grid point whose ball of `radius` holds the most charge; ties go to the
/// point nearest the origin.
pub fn concentration_point(psi: &WaveField, radius: f64) -> Vec<f64> {
    let plan = SpectralPlan::new(&psi.grid);
    argmax_ball(psi, &plan, &ball_spectrum(&plan, radius))
}

/// Fraction of the charge outside `B(q_hat, radius)`.
pub fn concentration_fraction(psi: &WaveField, q_hat: &[f64], radius: f64) -> f64 {
    let g = &psi.grid;
    let d = g.dim();
    let mut off = vec![0.0; d];
    let mut outside = 0.0;
    let mut total = 0.0;
    for (x, z) in g.positions().chunks(d).zip(&psi.values) {
        let rho = z.norm_sqr();
        total += rho;
        periodic_offset(g, x, q_hat, &mut off);
        if norm(&off) > radius {
            outside += rho;
        }
    }
    if total > 0.0 {
        outside / total
    } else {
        0.0
    }
}

/// Smallest `R` (in units of `scale`) whose concentration fraction is at
/// most `eps`, by bisection to relative precision `1e-4`.
pub fn calibrate_radius(psi: &WaveField, eps: f64, scale: f64) -> Result<f64> {
    let plan = SpectralPlan::new(&psi.grid);
    let fraction = |r: f64| {
        let radius = r * scale;
        let q = argmax_ball(psi, &plan, &ball_spectrum(&plan, radius));
        concentration_fraction(psi, &q, radius)
    };
    let max_r = psi.grid.lengths().iter().map(|l| l * l).sum::<f64>().sqrt() / scale;
    let mut hi = 1.0f64.min(max_r);
    while fraction(hi) > eps {
        if hi >= max_r {
            return Err(Error::InvalidParameter(format!("no radius reaches concentration {eps}")));
        }
        hi = (2.0 * hi).min(max_r);
    }
    let mut lo = 0.0;
    while hi - lo > 1e-4 * hi {
        let mid = 0.5 * (lo + hi);
        if fraction(mid) <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `(H, H_shift, H_spread)` from the Ehrenfest acceleration, the
/// barycenter and the concentration point. The two parts sum to `H`.
pub fn residual_h(qddot: &[f64], q: &[f64], q_hat: &[f64], v: &dyn Potential) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let gq = v.gradient_vec(q);
    let gh = v.gradient_vec(q_hat);
    let h: Vec<f64> = qddot.iter().zip(&gq).map(|(a, b)| a + b).collect();
    let shift: Vec<f64> = gq.iter().zip(&gh).map(|(a, b)| a - b).collect();
    let spread: Vec<f64> = gh.iter().zip(qddot).map(|(a, b)| a + b).collect();
    (h, shift, spread)
}

/// Caches transforms and samples so a record costs a handful of FFTs.
pub struct Diagnostics {
    params: ModelParams,
    w: Arc<dyn Nonlinearity>,
    v: Arc<dyn Potential>,
    plan: Arc<SpectralPlan>,
    grad_v: Vec<f64>,
    v_samples: Vec<f64>,
    radius: f64,
    ball: Vec<Complex64>,
}

impl Diagnostics {
    /// `radius` is the physical ball radius `R_hat h^beta`.
    pub fn new(
        params: ModelParams,
        w: Arc<dyn Nonlinearity>,
        v: Arc<dyn Potential>,
        plan: Arc<SpectralPlan>,
        radius: f64,
    ) -> Self {
        let grid = plan.grid().clone();
        let ball = ball_spectrum(&plan, radius);
        Diagnostics {
            grad_v: v.sample_gradient(&grid),
            v_samples: v.sample(&grid),
            params,
            w,
            v,
            plan,
            radius,
            ball,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn record(&self, psi: &WaveField) -> TrajectoryRecord {
        let p = &self.params;
        let q = barycenter(psi);
        let qdot = barycenter_velocity(psi, p.h(), &self.plan);
        let qddot = ehrenfest_from_samples(psi, &self.grad_v);
        let q_hat = argmax_ball(psi, &self.plan, &self.ball);
        let (h_res, h_shift, h_spread) = residual_h(&qddot, &q, &q_hat, self.v.as_ref());
        let e = energy_parts(psi, p, self.w.as_ref(), self.v.as_ref(), &self.plan);
        let moment: f64 = psi.values.iter().zip(&self.v_samples).map(|(z, vv)| z.norm_sqr() * vv).sum::<f64>()
            * psi.grid.cell_volume();
        let nb = p.dim() as f64 * p.beta();
        TrajectoryRecord {
            t: psi.time,
            conc_fraction: concentration_fraction(psi, &q_hat, self.radius),
            q,
            qdot,
            qddot,
            h_res,
            h_shift,
            h_spread,
            charge: psi.charge(),
            energy: e.total,
            internal: e.internal,
            dynamical: e.dynamical,
            q_hat,
            boundary_mass: psi.boundary_mass_fraction(),
            potential_moment: moment,
            potential_moment_alpha: moment / p.h().powf(nb - 2.0 * p.alpha()),
            potential_moment_gamma: moment / p.h().powf(nb - 2.0 * p.gamma()),
            newton_q: None,
            newton_p: None,
            newton_energy: None,
        }
    }
}

/// Running maximum of one monitored series over the two halves of the run.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaSeries {
    pub name: &'static str,
    pub max: f64,
    pub first_half_max: f64,
    pub second_half_max: f64,
    /// Set when the maximum at least doubled in the second half and exceeds
    /// the series' noise floor.
    pub growing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub series: Vec<LemmaSeries>,
}

impl LemmaReport {
    pub fn any_growing(&self) -> bool {
        self.series.iter().any(|s| s.growing)
    }

    pub fn get(&self, name: &str) -> Option<&LemmaSeries> {
        self.series.iter().find(|s| s.name == name)
    }
}

/// Tracks the normalized potential moments, `|q|` and `|q - q_hat|`.
/// `position_floor` (typically `dx`) keeps grid jitter in the position
/// series from counting as growth.
pub fn lemma_monitors(records: &[TrajectoryRecord], position_floor: f64) -> LemmaReport {
    let (t0, t1) = match (records.first(), records.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return LemmaReport { series: Vec::new() },
    };
    let mid = 0.5 * (t0 + t1);
    let build = |name: &'static str, floor: f64, f: &dyn Fn(&TrajectoryRecord) -> f64| {
        let mut first = 0.0f64;
        let mut second = 0.0f64;
        for r in records {
            let v = f(r).abs();
            if r.t <= mid {
                first = first.max(v);
            } else {
                second = second.max(v);
            }
        }
        LemmaSeries {
            name,
            max: first.max(second),
            first_half_max: first,
            second_half_max: second,
            growing: second > 2.0 * (1.0 - 1e-6) * first && second > floor,
        }
    };
    LemmaReport {
        series: vec![
            build("potential_moment_alpha", 0.0, &|r| r.potential_moment_alpha),
            build("potential_moment_gamma", 0.0, &|r| r.potential_moment_gamma),
            build("q_norm", position_floor, &|r| norm(&r.q)),
            build("q_minus_q_hat", position_floor, &|r| {
                norm(&r.q.iter().zip(&r.q_hat).map(|(a, b)| a - b).collect::<Vec<_>>())
            }),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::FocusingPower;
    use crate::potential::RadialPolynomial;

    fn bump(g: &Grid, c: f64, w: f64, mass: f64) -> impl Fn(&[f64]) -> f64 + '_ {
        let _ = g;
        move |x: &[f64]| {
            let norm = (mass / (w * std::f64::consts::PI.sqrt())).sqrt();
            norm * (-(x[0] - c).powi(2) / (2.0 * w * w)).exp()
        }
    }

    #[test]
    fn barycenter_of_two_bumps() {
        let g = Grid::cubic(1, 40.0, 1024).unwrap();
        let a = bump(&g, 0.0, 0.5, 1.0);
        let b = bump(&g, 4.0, 0.5, 3.0);
        let psi = WaveField::from_fn(&g, 0.0, |x| Complex64::new((a(x).powi(2) + b(x).powi(2)).sqrt(), 0.0));
        let q = barycenter(&psi);
        assert!((q[0] - 3.0).abs() < 1e-10, "{q:?}");
        let qh = concentration_point(&psi, 1.0);
        assert!((qh[0] - 4.0).abs() <= g.spacing(0), "{qh:?}");
    }

    #[test]
    fn mode_differs_from_mean() {
        let g = Grid::cubic(1, 40.0, 1024).unwrap();
        let a = bump(&g, -5.0, 0.5, 0.9);
        let b = bump(&g, 5.0, 0.5, 0.1);
        let psi = WaveField::from_fn(&g, 0.0, |x| Complex64::new((a(x).powi(2) + b(x).powi(2)).sqrt(), 0.0));
        let qh = concentration_point(&psi, 1.5);
        assert!((qh[0] + 5.0).abs() <= g.spacing(0));
        assert!((barycenter(&psi)[0] + 4.0).abs() < 1e-10);
    }

    #[test]
    fn velocity_of_a_boosted_profile() {
        let g = Grid::cubic(2, 20.0, 64).unwrap();
        let plan = SpectralPlan::new(&g);
        let h = 0.5;
        let v = [2.0 * std::f64::consts::PI * 2.0 / 20.0 * h, -2.0 * std::f64::consts::PI / 20.0 * h];
        let psi = WaveField::from_fn(&g, 0.0, |x| {
            Complex64::from_polar((-(x[0] * x[0] + x[1] * x[1])).exp(), (v[0] * x[0] + v[1] * x[1]) / h)
        });
        let qd = barycenter_velocity(&psi, h, &plan);
        assert!((qd[0] - v[0]).abs() < 1e-12 && (qd[1] - v[1]).abs() < 1e-12, "{qd:?}");
        let real = WaveField::from_fn(&g, 0.0, |x| Complex64::new((-(x[0] * x[0])).exp(), 0.0));
        assert!(norm(&barycenter_velocity(&real, h, &plan)) < 1e-14);
    }

    #[test]
    fn harmonic_force_is_minus_barycenter() {
        let g = Grid::cubic(1, 30.0, 512).unwrap();
        let psi = WaveField::from_fn(&g, 0.0, |x| Complex64::new((-(x[0] - 1.3).powi(2)).exp() * (1.0 + 0.2 * x[0]), 0.1));
        let a = ehrenfest_acceleration(&psi, &RadialPolynomial::harmonic(1.0));
        let q = barycenter(&psi);
        assert!((a[0] + q[0]).abs() < 1e-13);
        assert_eq!(ehrenfest_acceleration(&psi, &RadialPolynomial::zero()), vec![0.0]);
    }

    #[test]
    fn integration_by_parts_for_the_force() {
        let g = Grid::cubic(2, 16.0, 128).unwrap();
        let plan = SpectralPlan::new(&g);
        let psi = WaveField::from_fn(&g, 0.0, |x| {
            Complex64::from_polar((-((x[0] - 0.7).powi(2) + (x[1] + 0.4).powi(2))).exp(), x[0])
        });
        let (lhs, rhs) = force_identity(&psi, &RadialPolynomial::quartic(1.0, 0.5), &plan);
        for a in 0..2 {
            assert!((lhs[a] - rhs[a]).abs() <= 1e-10 * rhs[a].abs(), "{lhs:?} {rhs:?}");
        }
    }

    #[test]
    fn sech_tail_fraction() {
        let g = Grid::cubic(1, 16.0, 4096).unwrap();
        let h: f64 = 0.25;
        let w = h.powf(1.5);
        let psi = WaveField::from_fn(&g, 0.0, |x| Complex64::new(2f64.sqrt() / ((x[0] - 0.5) / w).cosh(), 0.0));
        let qh = concentration_point(&psi, 3.0 * w);
        assert!((qh[0] - 0.5).abs() <= g.spacing(0));
        let f = concentration_fraction(&psi, &[0.5], 3.0 * w);
        assert!((f - (1.0 - 3f64.tanh())).abs() < 2e-3, "{f}");
        assert_eq!(concentration_fraction(&psi, &qh, 100.0), 0.0);
        let r = calibrate_radius(&psi, 1e-2, w).unwrap();
        assert!((r - (0.99f64).atanh()).abs() < 0.05, "{r}");
    }

    #[test]
    fn concentration_point_ignores_phase_and_scale() {
        let g = Grid::cubic(2, 10.0, 64).unwrap();
        let psi = WaveField::from_fn(&g, 0.0, |x| {
            Complex64::new((-((x[0] - 1.1).powi(2) + 2.0 * (x[1] + 0.3).powi(2))).exp(), 0.0)
        });
        let q = concentration_point(&psi, 0.6);
        let mut rotated = psi.clone();
        rotated.values.iter_mut().for_each(|z| *z *= Complex64::from_polar(3.5, 1.2));
        assert_eq!(concentration_point(&rotated, 0.6), q);
    }

    #[test]
    fn residual_vanishes_for_linear_forces() {
        let g = Grid::cubic(1, 20.0, 256).unwrap();
        let plan = Arc::new(SpectralPlan::new(&g));
        let p = ModelParams::new(0.5, 1.0, 0.0, 2.0, 1).unwrap();
        let psi = WaveField::from_fn(&g, 0.0, |x| Complex64::new(2f64.sqrt() / ((x[0] - 1.0) / 0.35).cosh(), 0.0));
        for v in [RadialPolynomial::harmonic(1.0), RadialPolynomial::zero()] {
            let d = Diagnostics::new(p, Arc::new(FocusingPower::new(4.0)), Arc::new(v), plan.clone(), 1.0);
            let r = d.record(&psi);
            assert!(norm(&r.h_res) < 1e-13, "{:?}", r.h_res);
            let sum = r.h_shift[0] + r.h_spread[0];
            assert!((sum - r.h_res[0]).abs() < 1e-14);
            assert!((r.energy - r.internal - r.dynamical).abs() <= 1e-10 * r.energy.abs());
        }
    }

    #[test]
    fn lemma_monitor_flags_linear_growth() {
        let rec = |t: f64, q: f64| TrajectoryRecord { t, q: vec![q], q_hat: vec![q], ..Default::default() };
        let moving: Vec<_> = (0..=10).map(|i| rec(i as f64, 0.5 * i as f64)).collect();
        let report = lemma_monitors(&moving, 0.01);
        assert!(report.get("q_norm").unwrap().growing);
        assert!(!report.get("q_minus_q_hat").unwrap().growing);
        let trapped: Vec<_> = (0..=10).map(|i| rec(i as f64, (i as f64).cos())).collect();
        assert!(!lemma_monitors(&trapped, 0.01).any_growing());
    }
}

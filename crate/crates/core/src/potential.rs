//! External potentials `V(x)` and sampled probes of their growth conditions.

use std::fmt::Debug;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assumptions::{first_failure, AssumptionCheck};
use crate::error::Result;
use crate::grid::Grid;

/// Large-`|x|` metadata: beyond `r1` the potential should satisfy
/// `|grad V| <= V^b` and `V >= |x|^a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialMeta {
    pub r1: f64,
    pub b: f64,
    pub a: f64,
}

pub trait Potential: Debug + Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    fn meta(&self) -> PotentialMeta;
    fn name(&self) -> String;

    fn gradient_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.gradient(x, &mut g);
        g
    }

    /// `V` at every grid point.
    fn sample(&self, grid: &Grid) -> Vec<f64> {
        grid.positions().chunks(grid.dim()).map(|x| self.value(x)).collect()
    }

    /// `grad V` at every grid point, point-major.
    fn sample_gradient(&self, grid: &Grid) -> Vec<f64> {
        let d = grid.dim();
        let mut out = vec![0.0; grid.len() * d];
        for (x, g) in grid.positions().chunks(d).zip(out.chunks_mut(d)) {
            self.gradient(x, g);
        }
        out
    }
}

/// `V(x) = c + kappa |x|^2 / 2 + lambda |x|^4 / 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPolynomial {
    pub offset: f64,
    pub kappa: f64,
    pub lambda: f64,
    meta: PotentialMeta,
}

impl RadialPolynomial {
    pub fn zero() -> Self {
        RadialPolynomial {
            offset: 0.0,
            kappa: 0.0,
            lambda: 0.0,
            meta: PotentialMeta { r1: 2.0, b: 0.5, a: 1.5 },
        }
    }

    pub fn harmonic(kappa: f64) -> Self {
        Self::with_exponents(kappa, 0.0, 0.75, 1.5)
    }

    /// Quartic-dominated polynomial `kappa |x|^2/2 + lambda |x|^4/4`.
    pub fn quartic(lambda: f64, kappa: f64) -> Self {
        Self::with_exponents(kappa, lambda, 0.95, 2.0)
    }

    /// Polynomial with the given `(b, a)`; `r1` is fitted by a radial scan so
    /// both growth conditions hold on `[r1, 1e3]`.
    pub fn with_exponents(kappa: f64, lambda: f64, b: f64, a: f64) -> Self {
        let mut v = RadialPolynomial {
            offset: 0.0,
            kappa,
            lambda,
            meta: PotentialMeta { r1: 2.0, b, a },
        };
        v.meta.r1 = v.fit_r1();
        v
    }

    /// Add a constant. The growth radius is kept as is.
    pub fn shifted(mut self, c: f64) -> Self {
        self.offset += c;
        self
    }

    fn radial(&self, r: f64) -> (f64, f64) {
        let r2 = r * r;
        (
            self.offset + 0.5 * self.kappa * r2 + 0.25 * self.lambda * r2 * r2,
            self.kappa * r + self.lambda * r2 * r,
        )
    }

    fn fit_r1(&self) -> f64 {
        let (b, a) = (self.meta.b, self.meta.a);
        let steps = 4000;
        let dlog = 1e3f64.ln() / steps as f64;
        let mut last_bad = None;
        for i in 0..=steps {
            let r = (i as f64 * dlog).exp();
            let (v, dv) = self.radial(r);
            if !(v >= 0.0 && dv.abs() <= v.powf(b) && v >= r.powf(a)) {
                last_bad = Some(i);
            }
        }
        match last_bad {
            None => 1.05,
            Some(i) if i == steps => f64::INFINITY,
            Some(i) => ((i + 1) as f64 * dlog).exp().max(1.0) * 1.01,
        }
    }
}

impl Potential for RadialPolynomial {
    fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        self.offset + 0.5 * self.kappa * r2 + 0.25 * self.lambda * r2 * r2
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let c = self.kappa + self.lambda * r2;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = c * xi;
        }
    }
    fn meta(&self) -> PotentialMeta {
        self.meta
    }
    fn name(&self) -> String {
        if self.kappa == 0.0 && self.lambda == 0.0 {
            "zero".into()
        } else if self.lambda == 0.0 {
            format!("harmonic(kappa={})", self.kappa)
        } else {
            format!("quartic(lambda={}, kappa={})", self.lambda, self.kappa)
        }
    }
}

/// Sampled probes of positivity and the large-`|x|` growth conditions on
/// `grid`, plus a finite-difference check of the analytic gradient.
pub fn check_potential(v: &dyn Potential, grid: &Grid) -> Vec<AssumptionCheck> {
    let m = v.meta();
    let d = grid.dim();
    let mut min_v = f64::INFINITY;
    let mut probes = 0usize;
    // worst violations, as (lhs, rhs) of the failing inequality
    let mut worst_v1: Option<(f64, f64)> = None;
    let mut worst_v2: Option<(f64, f64)> = None;
    let mut g = vec![0.0; d];
    for x in grid.positions().chunks(d) {
        let val = v.value(x);
        min_v = min_v.min(val);
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if r <= m.r1 {
            continue;
        }
        probes += 1;
        v.gradient(x, &mut g);
        let gn = g.iter().map(|c| c * c).sum::<f64>().sqrt();
        let vb = val.max(0.0).powf(m.b);
        if gn > vb && worst_v1.is_none_or(|(l, r)| gn - vb > l - r) {
            worst_v1 = Some((gn, vb));
        }
        let ra = r.powf(m.a);
        if val < ra && worst_v2.is_none_or(|(l, r)| ra - val > r - l) {
            worst_v2 = Some((val, ra));
        }
    }
    let meta_ok = m.r1.is_finite() && m.b > 0.0 && m.b < 1.0 && m.a > 1.0;
    let growth = |name: &'static str, worst: Option<(f64, f64)>, ok: String, bad: &str| match (
        probes, worst,
    ) {
        (0, _) => AssumptionCheck::new(name, false, format!("no grid points beyond R1 = {:.3}", m.r1)),
        (_, None) => AssumptionCheck::new(name, true, ok),
        (_, Some((l, r))) => AssumptionCheck::new(name, false, format!("{bad}: {l:.3e} vs {r:.3e}")),
    };
    vec![
        AssumptionCheck::new("V0", min_v >= 0.0, format!("min V on grid = {min_v:.3e}")),
        AssumptionCheck::new("V-meta", meta_ok, format!("R1 = {:.3}, b = {}, a = {}", m.r1, m.b, m.a)),
        growth(
            "V1",
            worst_v1,
            format!("|grad V| <= V^{} on {probes} probes beyond R1 = {:.3}", m.b, m.r1),
            "|grad V| exceeds V^b",
        ),
        growth(
            "V2",
            worst_v2,
            format!("V >= |x|^{} on {probes} probes beyond R1 = {:.3}", m.a, m.r1),
            "V below |x|^a",
        ),
        gradient_probe(v, grid),
    ]
}

fn gradient_probe(v: &dyn Potential, grid: &Grid) -> AssumptionCheck {
    let d = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let step = 1e-4;
    let mut worst = 0.0f64;
    let mut g = vec![0.0; d];
    for _ in 0..32 {
        let x: Vec<f64> = grid.lengths().iter().map(|l| rng.gen_range(-0.5 * l..0.5 * l)).collect();
        v.gradient(&x, &mut g);
        let scale = 1.0 + v.value(&x).abs() + g.iter().map(|c| c.abs()).sum::<f64>();
        for a in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[a] += step;
            xm[a] -= step;
            let fd = (v.value(&xp) - v.value(&xm)) / (2.0 * step);
            worst = worst.max((fd - g[a]).abs() / scale);
        }
    }
    AssumptionCheck::new(
        "V-grad",
        worst < 1e-5,
        format!("max scaled |fd - grad V| = {worst:.3e} at step {step:.0e}"),
    )
}

pub fn validate_potential(v: &dyn Potential, grid: &Grid) -> Result<()> {
    first_failure(&check_potential(v, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[derive(Debug)]
    struct WrongGradient;
    impl Potential for WrongGradient {
        fn value(&self, x: &[f64]) -> f64 {
            x.iter().map(|v| v * v).sum::<f64>().powi(2)
        }
        fn gradient(&self, x: &[f64], out: &mut [f64]) {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            for (o, xi) in out.iter_mut().zip(x) {
                *o = 2.0 * r2 * xi;
            }
        }
        fn meta(&self) -> PotentialMeta {
            PotentialMeta { r1: 2.0, b: 0.9, a: 2.0 }
        }
        fn name(&self) -> String {
            "wrong".into()
        }
    }

    fn passed(checks: &[AssumptionCheck], c: &str) -> bool {
        checks.iter().find(|k| k.condition == c).unwrap().passed
    }

    #[test]
    fn built_ins_pass_on_their_boxes() {
        let g1 = Grid::cubic(1, 40.0, 256).unwrap();
        let g2 = Grid::cubic(2, 30.0, 64).unwrap();
        validate_potential(&RadialPolynomial::harmonic(1.0), &g1).unwrap();
        validate_potential(&RadialPolynomial::harmonic(1.0), &g2).unwrap();
        let q = RadialPolynomial::quartic(1.0, 0.0);
        assert!(q.meta().r1 > 5.0 && q.meta().r1 < 5.5, "r1 = {}", q.meta().r1);
        validate_potential(&q, &Grid::cubic(1, 16.0, 256).unwrap()).unwrap();
        validate_potential(&RadialPolynomial::quartic(0.5, 1.0), &g2).unwrap();
    }

    #[test]
    fn zero_potential_fails_growth() {
        let g = Grid::cubic(1, 40.0, 256).unwrap();
        match validate_potential(&RadialPolynomial::zero(), &g) {
            Err(Error::AssumptionViolation { condition, .. }) => assert_eq!(condition, "V2"),
            other => panic!("{other:?}"),
        }
        assert!(passed(&check_potential(&RadialPolynomial::zero(), &g), "V0"));
    }

    #[test]
    fn broken_potentials_fail() {
        let g = Grid::cubic(2, 20.0, 32).unwrap();
        assert!(!passed(&check_potential(&WrongGradient, &g), "V-grad"));
        let shifted = RadialPolynomial::harmonic(1.0).shifted(-1.0);
        assert!(!passed(&check_potential(&shifted, &g), "V0"));
        let tiny = Grid::cubic(1, 4.0, 32).unwrap();
        assert!(!passed(&check_potential(&RadialPolynomial::harmonic(1.0), &tiny), "V2"));
    }

    #[test]
    fn gradient_matches_value() {
        let v = RadialPolynomial::quartic(0.7, 0.3);
        let x = [0.4, -1.3];
        let g = v.gradient_vec(&x);
        for a in 0..2 {
            let e = 1e-6;
            let (mut xp, mut xm) = (x, x);
            xp[a] += e;
            xm[a] -= e;
            assert!(((v.value(&xp) - v.value(&xm)) / (2.0 * e) - g[a]).abs() < 1e-7);
        }
    }
}

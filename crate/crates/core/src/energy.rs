//! The h-scaled profile map and the energy functionals.
//!
//! `E_h = J_h(|psi|) + G(psi)` with
//! `J_h(u) = sum (h^2/2)|grad u|^2 + h^(-alpha-gamma) W(h^gamma u)` and
//! `G(psi) = sum (h^2/2)(|grad psi|^2 - |grad |psi||^2) + V |psi|^2`,
//! all weighted by `dx^N`.

use crate::error::{Error, Result};
use crate::grid::{Grid, RealField, WaveField};
use crate::interp::resample;
use crate::nonlinearity::Nonlinearity;
use crate::params::ModelParams;
use crate::potential::Potential;
use crate::spectral::SpectralPlan;

/// Minimum number of grid points across a rescaled core.
pub const MIN_CORE_POINTS: f64 = 8.0;

/// Width used for resolution checks: twice the rms radius of `v^2`.
pub fn core_width(v: &RealField) -> f64 {
    2.0 * v.rms_width()
}

/// `u(x) = h^(-gamma) v(x / h^beta)` sampled on `target`.
///
/// When `target` is exactly the source grid shrunk by `h^beta` the samples
/// are copied, so the rescaling identities hold to roundoff. Otherwise the
/// profile is interpolated.
pub fn rescale_profile(v: &RealField, params: &ModelParams, target: &Grid) -> Result<RealField> {
    let ws = params.width_scale();
    let points = core_width(v) * ws / target.min_spacing();
    if points < MIN_CORE_POINTS {
        return Err(Error::UnderResolved { points, required: MIN_CORE_POINTS });
    }
    let amp = params.amplitude_scale();
    let aligned = target.points() == v.grid.points()
        && target
            .lengths()
            .iter()
            .zip(v.grid.lengths())
            .all(|(t, s)| (t - ws * s).abs() <= 1e-12 * t);
    let mut u = if aligned {
        RealField { grid: target.clone(), values: v.values.clone() }
    } else {
        resample(v, target, &vec![0.0; target.dim()], ws)
    };
    u.scale(amp);
    Ok(u)
}

/// The grid on which `rescale_profile` is an exact sample copy.
pub fn scaled_grid(source: &Grid, params: &ModelParams) -> Result<Grid> {
    let ws = params.width_scale();
    let lengths: Vec<f64> = source.lengths().iter().map(|l| l * ws).collect();
    Grid::new(&lengths, source.points())
}

fn gradient_energy_density(plan: &SpectralPlan, u: &[f64]) -> Vec<f64> {
    let grads = plan.gradient_real(u);
    let mut out = vec![0.0; u.len()];
    for g in &grads {
        for (o, z) in out.iter_mut().zip(g) {
            *o += z.re * z.re;
        }
    }
    out
}

/// `J_h(u)`.
pub fn internal_energy(
    u: &RealField,
    params: &ModelParams,
    w: &dyn Nonlinearity,
    plan: &SpectralPlan,
) -> f64 {
    let h = params.h();
    let hg = h.powf(params.gamma());
    let hw = h.powf(-params.alpha() - params.gamma());
    let grad2 = gradient_energy_density(plan, &u.values);
    let sum: f64 = u
        .values
        .iter()
        .zip(&grad2)
        .map(|(&s, &g2)| 0.5 * h * h * g2 + hw * w.value(hg * s.abs()))
        .sum();
    sum * u.grid.cell_volume()
}

/// `J(u) = sum |grad u|^2 / 2 + W(u)`, the unscaled functional.
pub fn reference_energy(u: &RealField, w: &dyn Nonlinearity, plan: &SpectralPlan) -> f64 {
    let grad2 = gradient_energy_density(plan, &u.values);
    let sum: f64 = u.values.iter().zip(&grad2).map(|(&s, &g2)| 0.5 * g2 + w.value(s.abs())).sum();
    sum * u.grid.cell_volume()
}

/// Per-point `|grad psi|^2` and `|grad |psi||^2`.
fn kinetic_densities(psi: &WaveField, plan: &SpectralPlan) -> (Vec<f64>, Vec<f64>) {
    let full = plan.gradient_norm_squared(&psi.values);
    let modulus = psi.modulus();
    let amp = gradient_energy_density(plan, &modulus.values);
    (full, amp)
}

/// `G(psi)`.
pub fn dynamical_energy(
    psi: &WaveField,
    params: &ModelParams,
    v: &dyn Potential,
    plan: &SpectralPlan,
) -> f64 {
    let h2 = params.h() * params.h();
    let (full, amp) = kinetic_densities(psi, plan);
    let vs = v.sample(&psi.grid);
    let sum: f64 = (0..psi.values.len())
        .map(|i| 0.5 * h2 * (full[i] - amp[i]) + vs[i] * psi.values[i].norm_sqr())
        .sum();
    sum * psi.grid.cell_volume()
}

/// The energy split of one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub internal: f64,
    pub dynamical: f64,
    pub total: f64,
}

/// `J_h(|psi|)`, `G(psi)` and their sum, sharing the transforms.
pub fn energy_parts(
    psi: &WaveField,
    params: &ModelParams,
    w: &dyn Nonlinearity,
    v: &dyn Potential,
    plan: &SpectralPlan,
) -> EnergyParts {
    let h = params.h();
    let hg = h.powf(params.gamma());
    let hw = h.powf(-params.alpha() - params.gamma());
    let (full, amp) = kinetic_densities(psi, plan);
    let vs = v.sample(&psi.grid);
    let mut internal = 0.0;
    let mut dynamical = 0.0;
    for (i, z) in psi.values.iter().enumerate() {
        let s = z.norm();
        internal += 0.5 * h * h * amp[i] + hw * w.value(hg * s);
        dynamical += 0.5 * h * h * (full[i] - amp[i]) + vs[i] * s * s;
    }
    let dv = psi.grid.cell_volume();
    EnergyParts { internal: internal * dv, dynamical: dynamical * dv, total: (internal + dynamical) * dv }
}

pub fn total_energy(
    psi: &WaveField,
    params: &ModelParams,
    w: &dyn Nonlinearity,
    v: &dyn Potential,
    plan: &SpectralPlan,
) -> f64 {
    energy_parts(psi, params, w, v, plan).total
}

/// `sum (h^2/2)|grad psi|^2 + W_h(psi) + V|psi|^2`, evaluated directly.
pub fn direct_energy(
    psi: &WaveField,
    params: &ModelParams,
    w: &dyn Nonlinearity,
    v: &dyn Potential,
    plan: &SpectralPlan,
) -> f64 {
    let h = params.h();
    let hg = h.powf(params.gamma());
    let hw = h.powf(-params.alpha() - params.gamma());
    let full = plan.gradient_norm_squared(&psi.values);
    let vs = v.sample(&psi.grid);
    let sum: f64 = psi
        .values
        .iter()
        .enumerate()
        .map(|(i, z)| 0.5 * h * h * full[i] + hw * w.value(hg * z.norm()) + vs[i] * z.norm_sqr())
        .sum();
    sum * psi.grid.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::FocusingPower;
    use crate::potential::RadialPolynomial;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    #[test]
    fn sech_profile_keeps_its_charge() {
        let src = Grid::cubic(1, 40.0, 1024).unwrap();
        let v = RealField::from_fn(&src, |x| sech(x[0]));
        let p = ModelParams::new(0.25, 3.0, 1.0, 2.0, 1).unwrap();
        assert_eq!(p.charge_exponent(), 0.0);
        let target = Grid::cubic(1, 6.0, 1024).unwrap();
        let u = rescale_profile(&v, &p, &target).unwrap();
        assert!((u.norm_squared() - 2.0).abs() < 1e-10, "{}", u.norm_squared());
    }

    #[test]
    fn unit_h_is_identity_and_2d_charge_scales() {
        let src = Grid::cubic(2, 20.0, 128).unwrap();
        let v = RealField::from_fn(&src, |x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp());
        let p1 = ModelParams::new(1.0, 0.0, 0.0, 1.0, 2).unwrap();
        assert_eq!(rescale_profile(&v, &p1, &src).unwrap().values, v.values);
        let p = ModelParams::new(0.5, 0.0, 0.0, 1.0, 2).unwrap();
        let u = rescale_profile(&v, &p, &scaled_grid(&src, &p).unwrap()).unwrap();
        assert!((u.norm_squared() / v.norm_squared() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn under_resolved_target_is_rejected() {
        let src = Grid::cubic(1, 40.0, 256).unwrap();
        let v = RealField::from_fn(&src, |x| sech(x[0]));
        let p = ModelParams::new(0.01, 1.0, 0.0, 2.0, 1).unwrap();
        let target = Grid::cubic(1, 40.0, 256).unwrap();
        assert!(matches!(rescale_profile(&v, &p, &target), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn sech_internal_energy_closed_form() {
        let g = Grid::cubic(1, 40.0, 1024).unwrap();
        let plan = SpectralPlan::new(&g);
        let u = RealField::from_fn(&g, |x| 2f64.sqrt() * sech(x[0]));
        let p = ModelParams::new(1.0, 1.0, 0.0, 2.0, 1).unwrap();
        let w = FocusingPower::new(4.0);
        let j = internal_energy(&u, &p, &w, &plan);
        assert!((j + 2.0 / 3.0).abs() < 1e-12, "{j}");
        assert!((reference_energy(&u, &w, &plan) - j).abs() < 1e-14);
        assert_eq!(internal_energy(&RealField::zeros(&g), &p, &w, &plan), 0.0);
    }

    #[test]
    fn plane_phase_dynamical_energy() {
        let g = Grid::cubic(1, 40.0, 512).unwrap();
        let plan = SpectralPlan::new(&g);
        let h = 0.5;
        let v = 2.0 * std::f64::consts::PI * 3.0 / 40.0 * h; // lattice wavenumber v/h
        let p = ModelParams::new(h, 1.0, 0.0, 2.0, 1).unwrap();
        let psi = WaveField::from_fn(&g, 0.0, |x| {
            Complex64::from_polar(2f64.sqrt() * sech(x[0]), v * x[0] / h)
        });
        let zero = RadialPolynomial::zero();
        let gval = dynamical_energy(&psi, &p, &zero, &plan);
        assert!((gval - 0.5 * v * v * 4.0).abs() < 1e-10, "{gval}");
        let real = WaveField::from_fn(&g, 0.0, |x| Complex64::new(sech(x[0]), 0.0));
        assert!(dynamical_energy(&real, &p, &zero, &plan).abs() < 1e-12);
    }

    #[test]
    fn gaussian_potential_moment() {
        let g = Grid::cubic(2, 20.0, 64).unwrap();
        let plan = SpectralPlan::new(&g);
        let p = ModelParams::new(0.3, 1.0, 0.0, 1.0, 2).unwrap();
        let s = 0.8;
        let psi = WaveField::from_fn(&g, 0.0, |x| {
            Complex64::new((-(x[0] * x[0] + x[1] * x[1]) / (2.0 * s * s)).exp(), 0.0)
        });
        // int |x|^2/2 exp(-|x|^2/s^2) dx = (pi s^2) * s^2 / 2 in 2D
        let want = std::f64::consts::PI * s.powi(4) / 2.0;
        let gval = dynamical_energy(&psi, &p, &RadialPolynomial::harmonic(1.0), &plan);
        assert!((gval - want).abs() < 1e-10 * want, "{gval} vs {want}");
    }

    fn smooth_field(g: &Grid, c: &[f64; 6]) -> WaveField {
        WaveField::from_fn(g, 0.0, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let amp = (1.0 + c[0] * c[0]) * (-(r2) / (1.0 + c[1].abs())).exp();
            let phase = c[2] * x[0] + c[3] * x[0] * x[0] + c[4] * (c[5] * x[0]).sin();
            Complex64::from_polar(amp, phase)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn split_energy_matches_direct(c in proptest::array::uniform6(-1.0f64..1.0), h in 0.2f64..1.0) {
            let g = Grid::cubic(1, 30.0, 256).unwrap();
            let plan = SpectralPlan::new(&g);
            let p = ModelParams::new(h, 1.0, 0.0, 1.0, 1).unwrap();
            let psi = smooth_field(&g, &c);
            let w = FocusingPower::new(3.0);
            let v = RadialPolynomial::quartic(0.1, 0.5);
            let parts = energy_parts(&psi, &p, &w, &v, &plan);
            let direct = direct_energy(&psi, &p, &w, &v, &plan);
            prop_assert!((parts.total - direct).abs() <= 1e-10 * direct.abs().max(1e-300));
            let j = internal_energy(&psi.modulus(), &p, &w, &plan);
            let gval = dynamical_energy(&psi, &p, &v, &plan);
            prop_assert!((parts.internal - j).abs() <= 1e-12 * j.abs().max(1.0));
            prop_assert!((parts.dynamical - gval).abs() <= 1e-12 * gval.abs().max(1.0));
        }

        #[test]
        fn rescaling_identities(h in 0.2f64..1.0, alpha in 0.5f64..3.0, gamma in 0.0f64..0.5, dim in 1usize..3) {
            let (l, n) = if dim == 1 { (24.0, 512) } else { (16.0, 128) };
            let src = Grid::cubic(dim, l, n).unwrap();
            let v = RealField::from_fn(&src, |x| {
                let r2: f64 = x.iter().map(|c| c * c).sum();
                1.2 / (1.0 + r2).powi(2)
            });
            let p = ModelParams::new(h, alpha, gamma, 1.0, dim).unwrap();
            let w = FocusingPower::new(2.0 + 2.0 / dim as f64);
            let target = scaled_grid(&src, &p).unwrap();
            let u = rescale_profile(&v, &p, &target).unwrap();
            let charge_ratio = u.norm_squared() / v.norm_squared();
            prop_assert!((charge_ratio / h.powf(p.charge_exponent()) - 1.0).abs() < 1e-10);
            let j1 = reference_energy(&v, &w, &SpectralPlan::new(&src));
            let jh = internal_energy(&u, &p, &w, &SpectralPlan::new(&target));
            prop_assert!((jh / j1 / h.powf(p.internal_energy_exponent()) - 1.0).abs() < 1e-8);
        }
    }
}

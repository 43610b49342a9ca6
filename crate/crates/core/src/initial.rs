//! h-scaled soliton initial data, the exact free soliton, and the
//! admissible-set checks.

use num_complex::Complex64;

use crate::assumptions::AssumptionCheck;
use crate::energy::{core_width, MIN_CORE_POINTS};
use crate::error::{Error, Result};
use crate::grid::{Grid, RealField, WaveField};
use crate::ground_state::GroundState;
use crate::interp::resample;
use crate::params::ModelParams;
use crate::potential::Potential;
use crate::spectral::SpectralPlan;

/// Required distance from `q0` to the box boundary, as a fraction of `L`.
pub const BOUNDARY_MARGIN: f64 = 0.2;
/// Minimum grid points per phase wavelength `2 pi h / |v|`.
pub const MIN_PHASE_POINTS: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub struct InitialDatumSpec {
    pub q0: Vec<f64>,
    pub v: Vec<f64>,
    /// `w0` on the ground-state grid, already mass-corrected.
    pub perturbation: Option<RealField>,
    pub params: ModelParams,
    pub ground_state: GroundState,
}

impl InitialDatumSpec {
    pub fn new(q0: Vec<f64>, v: Vec<f64>, params: ModelParams, ground_state: GroundState) -> Result<Self> {
        let d = params.dim();
        if q0.len() != d || v.len() != d || ground_state.profile.grid.dim() != d {
            return Err(Error::InvalidParameter(format!(
                "q0, v and the ground state must all have dimension {d}"
            )));
        }
        Ok(InitialDatumSpec { q0, v, perturbation: None, params, ground_state })
    }

    pub fn with_perturbation(mut self, w0: RealField) -> Self {
        self.perturbation = Some(w0);
        self
    }

    /// `U + w0` on the ground-state grid.
    pub fn profile(&self) -> RealField {
        let mut p = self.ground_state.profile.clone();
        if let Some(w) = &self.perturbation {
            p.values.iter_mut().zip(&w.values).for_each(|(a, b)| *a += b);
        }
        p
    }

    fn speed(&self) -> f64 {
        self.v.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

fn check_placement(spec: &InitialDatumSpec, center: &[f64], profile: &RealField, grid: &Grid) -> Result<()> {
    let p = &spec.params;
    for (&q, &l) in center.iter().zip(grid.lengths()) {
        let distance = (0.5 * l - q).min(q + 0.5 * l);
        let required = BOUNDARY_MARGIN * l;
        if distance < required {
            return Err(Error::TooCloseToBoundary { position: center.to_vec(), distance, required });
        }
    }
    let points = core_width(profile) * p.width_scale() / grid.min_spacing();
    if points < MIN_CORE_POINTS {
        return Err(Error::UnderResolved { points, required: MIN_CORE_POINTS });
    }
    let speed = spec.speed();
    if speed > 0.0 {
        let points = 2.0 * std::f64::consts::PI * p.h() / speed / grid.min_spacing();
        if points < MIN_PHASE_POINTS {
            return Err(Error::PhaseUnderResolved { points, required: MIN_PHASE_POINTS });
        }
    }
    Ok(())
}

/// `h^-gamma profile((x - center)/h^beta) exp(i (v.x - e t)/h)` on `grid`.
fn place(spec: &InitialDatumSpec, profile: &RealField, center: &[f64], phase_energy_t: f64, grid: &Grid, t: f64) -> WaveField {
    let p = &spec.params;
    let h = p.h();
    let amp = p.amplitude_scale();
    let modulus = resample(profile, grid, center, p.width_scale());
    let d = grid.dim();
    let values = grid
        .positions()
        .chunks(d)
        .zip(&modulus.values)
        .map(|(x, &m)| {
            let vx: f64 = x.iter().zip(&spec.v).map(|(a, b)| a * b).sum();
            Complex64::from_polar(amp * m, (vx - phase_energy_t) / h)
        })
        .collect();
    WaveField { grid: grid.clone(), values, time: t }
}

/// `psi(0, x) = h^-gamma (U + w0)((x - q0)/h^beta) exp(i v.x / h)`.
///
/// Off-lattice `q0` is handled by band-limited interpolation of the profile,
/// which amounts to a Fourier phase shift.
pub fn build_initial_datum(spec: &InitialDatumSpec, grid: &Grid) -> Result<WaveField> {
    let profile = spec.profile();
    check_placement(spec, &spec.q0, &profile, grid)?;
    Ok(place(spec, &profile, &spec.q0, 0.0, grid, 0.0))
}

/// Internal energy of the travelling soliton, `E = |v|^2/2 + omega / h^(alpha-gamma)`.
pub fn soliton_frequency(spec: &InitialDatumSpec) -> f64 {
    0.5 * spec.speed().powi(2) + spec.params.scaled_omega(spec.ground_state.omega)
}

/// The exact solution for `V = 0` and `w0 = 0`:
/// `h^-gamma U((x - q0 - v t)/h^beta) exp(i (v.x - E t)/h)`.
pub fn exact_free_soliton(spec: &InitialDatumSpec, t: f64, grid: &Grid) -> Result<WaveField> {
    let center: Vec<f64> = spec.q0.iter().zip(&spec.v).map(|(q, v)| q + v * t).collect();
    let profile = &spec.ground_state.profile;
    check_placement(spec, &center, profile, grid)?;
    Ok(place(spec, profile, &center, soliton_frequency(spec) * t, grid, t))
}

/// A smooth radial bump used to build perturbations.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationRecipe {
    /// Gaussian width in ground-state coordinates.
    pub width: f64,
    /// Bump center in ground-state coordinates.
    pub offset: Vec<f64>,
    /// Target `||w0||_H1` as a fraction of `K h^(alpha - gamma)`.
    pub amplitude_fraction: f64,
}

/// `||f||_H1 = (||f||^2 + ||grad f||^2)^(1/2)` with spectral gradients.
pub fn h1_norm(f: &RealField, plan: &SpectralPlan) -> f64 {
    let grads = plan.gradient_real(&f.values);
    let g2: f64 = grads.iter().flat_map(|g| g.iter().map(|z| z.re * z.re)).sum();
    (f.norm_squared() + g2 * f.grid.cell_volume()).sqrt()
}

/// `int V |f|^2` with `V` evaluated at the field's own coordinates.
pub fn potential_moment(f: &RealField, v: &dyn Potential) -> f64 {
    let vs = v.sample(&f.grid);
    f.values.iter().zip(&vs).map(|(a, b)| a * a * b).sum::<f64>() * f.grid.cell_volume()
}

/// Builds `w0` from a bump: project out the `U` direction, scale to the
/// target `H1` size, then rescale `U + w0` back onto the mass sphere and
/// redefine `w0` as the difference.
pub fn make_perturbation(
    recipe: &PerturbationRecipe,
    ground_state: &GroundState,
    params: &ModelParams,
    k: f64,
    v: &dyn Potential,
) -> Result<RealField> {
    let u = &ground_state.profile;
    let grid = &u.grid;
    if recipe.amplitude_fraction < 0.0 || !recipe.amplitude_fraction.is_finite() {
        return Err(Error::InvalidParameter("amplitude fraction must be non-negative".into()));
    }
    if recipe.amplitude_fraction == 0.0 {
        return Ok(RealField::zeros(grid));
    }
    if recipe.offset.len() != grid.dim() || !(recipe.width > 0.0) {
        return Err(Error::InvalidParameter("bump needs a positive width and one offset per axis".into()));
    }
    let plan = SpectralPlan::new(grid);
    let mut bump = RealField::from_fn(grid, |x| {
        let r2: f64 = x.iter().zip(&recipe.offset).map(|(a, c)| (a - c).powi(2)).sum();
        (-0.5 * r2 / (recipe.width * recipe.width)).exp()
    });
    let c = bump.dot(u) / u.norm_squared();
    bump.values.iter_mut().zip(&u.values).for_each(|(b, uu)| *b -= c * uu);
    let bound = k * params.perturbation_scale();
    let size = h1_norm(&bump, &plan);
    if size == 0.0 {
        return Err(Error::BoundUnachievable("bump is parallel to the ground state".into()));
    }
    bump.scale(recipe.amplitude_fraction * bound / size);
    let mut total = u.clone();
    total.values.iter_mut().zip(&bump.values).for_each(|(a, b)| *a += b);
    let n = total.norm();
    total.scale(ground_state.sigma / n);
    let mut w0 = total;
    w0.values.iter_mut().zip(&u.values).for_each(|(a, b)| *a -= b);
    let h1 = h1_norm(&w0, &plan);
    if h1 >= bound {
        return Err(Error::BoundUnachievable(format!(
            "||w0||_H1 = {h1:.4e} is not below K h^(alpha-gamma) = {bound:.4e}"
        )));
    }
    let moment = potential_moment(&w0, v);
    if moment > bound {
        return Err(Error::BoundUnachievable(format!(
            "int V |w0|^2 = {moment:.4e} exceeds K h^(alpha-gamma) = {bound:.4e}"
        )));
    }
    Ok(w0)
}

/// Pass/fail per membership condition of the admissible set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn into_result(self) -> Result<()> {
        match self.checks.iter().find(|c| !c.passed) {
            Some(c) => Err(Error::Inadmissible(format!("({}) {}", c.condition, c.detail))),
            None => Ok(()),
        }
    }
}

/// Checks the datum against the admissible set with constant `k`.
///
/// Two potential-moment conditions are reported. `moment` is
/// `int V(x) |psi0|^2 dx <= K h^(N beta - 2 alpha)` on the run grid;
/// `w0-moment` is `int V(xi) |w0(xi)|^2 dxi < K h^(alpha - gamma)` in
/// ground-state coordinates. They use different exponents and both are shown.
pub fn validate_admissibility(
    psi0: &WaveField,
    spec: &InitialDatumSpec,
    k: f64,
    v: &dyn Potential,
) -> AdmissibilityReport {
    let p = &spec.params;
    let u = &spec.ground_state.profile;
    let plan = SpectralPlan::new(&u.grid);
    let sigma = spec.ground_state.sigma;
    let norm = spec.profile().norm();
    let w0 = spec.perturbation.clone().unwrap_or_else(|| RealField::zeros(&u.grid));
    let h1 = h1_norm(&w0, &plan);
    let h1_bound = k * p.perturbation_scale();
    let speed = spec.speed();
    let density: Vec<f64> = psi0.density();
    let vs = v.sample(&psi0.grid);
    let moment: f64 = density.iter().zip(&vs).map(|(a, b)| a * b).sum::<f64>() * psi0.grid.cell_volume();
    let moment_bound = k * p.h().powf(p.dim() as f64 * p.beta() - 2.0 * p.alpha());
    let w_moment = potential_moment(&w0, v);
    AdmissibilityReport {
        checks: vec![
            AssumptionCheck::new(
                "mass",
                ((norm - sigma) / sigma).abs() <= 1e-10,
                format!("||U + w0|| = {norm:.12}, sigma = {sigma}"),
            ),
            AssumptionCheck::new(
                "H1",
                h1 < h1_bound || (h1 == 0.0 && h1_bound == 0.0),
                format!("||w0||_H1 = {h1:.4e}, bound K h^(alpha-gamma) = {h1_bound:.4e}"),
            ),
            AssumptionCheck::new("phase-gradient", speed <= k, format!("|v| = {speed:.4e}, K = {k}")),
            AssumptionCheck::new(
                "moment",
                moment <= moment_bound,
                format!("int V u_h^2 = {moment:.4e}, bound K h^(N beta - 2 alpha) = {moment_bound:.4e}"),
            ),
            AssumptionCheck::new(
                "w0-moment",
                w_moment <= h1_bound,
                format!("int V |w0|^2 = {w_moment:.4e}, bound K h^(alpha-gamma) = {h1_bound:.4e}"),
            ),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::internal_energy;
    use crate::nonlinearity::FocusingPower;
    use crate::potential::RadialPolynomial;

    fn sech_state(l: f64, n: usize) -> GroundState {
        let g = Grid::cubic(1, l, n).unwrap();
        let profile = RealField::from_fn(&g, |x| 2f64.sqrt() / x[0].cosh());
        GroundState {
            center: vec![0.0],
            profile,
            omega: -0.5,
            energy: -2.0 / 3.0,
            sigma: 2.0,
            residual: 0.0,
            iterations: 0,
        }
    }

    fn spec(h: f64, q0: f64, v: f64) -> InitialDatumSpec {
        let p = ModelParams::new(h, 1.0, 0.0, 2.0, 1).unwrap();
        InitialDatumSpec::new(vec![q0], vec![v], p, sech_state(40.0, 1024)).unwrap()
    }

    #[test]
    fn unit_h_reproduces_the_profile() {
        let s = spec(1.0, 0.0, 0.0);
        let g = s.ground_state.profile.grid.clone();
        let psi = build_initial_datum(&s, &g).unwrap();
        for (z, u) in psi.values.iter().zip(&s.ground_state.profile.values) {
            assert!((z.re - u).abs() < 1e-14 && z.im == 0.0);
        }
    }

    #[test]
    fn charge_follows_the_scaling_law() {
        for h in [0.5, 0.25] {
            let s = spec(h, 0.3, 0.0);
            let g = Grid::cubic(1, 16.0, 2048).unwrap();
            let psi = build_initial_datum(&s, &g).unwrap();
            let want = h.powf(s.params.charge_exponent()) * 4.0;
            assert!((psi.charge() / want - 1.0).abs() < 1e-10, "h={h}: {}", psi.charge() / want);
        }
    }

    #[test]
    fn placement_errors() {
        let g = Grid::cubic(1, 16.0, 512).unwrap();
        assert!(matches!(build_initial_datum(&spec(0.5, 6.0, 0.0), &g), Err(Error::TooCloseToBoundary { .. })));
        assert!(matches!(build_initial_datum(&spec(0.05, 0.0, 0.0), &g), Err(Error::UnderResolved { .. })));
        assert!(matches!(build_initial_datum(&spec(0.5, 0.0, 20.0), &g), Err(Error::PhaseUnderResolved { .. })));
    }

    #[test]
    fn frequency_example() {
        let p = ModelParams::new(0.5, 2.0, 0.0, 2.0, 2).unwrap();
        let mut gs = sech_state(40.0, 64);
        gs.profile = RealField::zeros(&Grid::cubic(2, 40.0, 64).unwrap());
        let s = InitialDatumSpec::new(vec![0.0, 0.0], vec![1.0, 0.0], p, gs).unwrap();
        assert!((soliton_frequency(&s) + 1.5).abs() < 1e-15);
    }

    #[test]
    fn free_soliton_invariants_in_time() {
        let s = spec(0.5, -1.0, 0.8);
        let g = Grid::cubic(1, 16.0, 1024).unwrap();
        let plan = SpectralPlan::new(&g);
        let w = FocusingPower::new(4.0);
        let psi0 = exact_free_soliton(&s, 0.0, &g).unwrap();
        assert_eq!(psi0, build_initial_datum(&s, &g).unwrap());
        let j0 = internal_energy(&psi0.modulus(), &s.params, &w, &plan);
        for t in [0.37, 1.0, 2.5] {
            let psi = exact_free_soliton(&s, t, &g).unwrap();
            assert!((psi.charge() / psi0.charge() - 1.0).abs() < 1e-10);
            let j = internal_energy(&psi.modulus(), &s.params, &w, &plan);
            assert!((j / j0 - 1.0).abs() < 1e-10, "{j} vs {j0}");
        }
    }

    #[test]
    fn perturbation_amplitudes() {
        let s = spec(0.2, 0.0, 0.0);
        let v = RadialPolynomial::quartic(1.0, 0.0);
        let recipe = |f| PerturbationRecipe { width: 1.0, offset: vec![0.5], amplitude_fraction: f };
        let zero = make_perturbation(&recipe(0.0), &s.ground_state, &s.params, 1.0, &v).unwrap();
        assert!(zero.values.iter().all(|x| *x == 0.0));
        let w0 = make_perturbation(&recipe(0.5), &s.ground_state, &s.params, 1.0, &v).unwrap();
        let s = s.with_perturbation(w0);
        let g = Grid::cubic(1, 16.0, 2048).unwrap();
        let psi = build_initial_datum(&s, &g).unwrap();
        let report = validate_admissibility(&psi, &s, 1.0, &v);
        assert!(report.admissible(), "{:?}", report.checks);
        let too_big = make_perturbation(&recipe(2.0), &s.ground_state, &s.params, 1.0, &v);
        assert!(matches!(too_big, Err(Error::BoundUnachievable(_))));
    }

    #[test]
    fn admissibility_failures() {
        let v = RadialPolynomial::quartic(1.0, 0.0);
        let fast = spec(0.2, 0.0, 1.5);
        let g = Grid::cubic(1, 16.0, 2048).unwrap();
        let psi = build_initial_datum(&fast, &g).unwrap();
        let r = validate_admissibility(&psi, &fast, 1.0, &v);
        assert!(!r.checks.iter().find(|c| c.condition == "phase-gradient").unwrap().passed);
        assert!(matches!(r.into_result(), Err(Error::Inadmissible(_))));

        // a perturbation twice the H1 bound, built by hand
        let s = spec(0.2, 0.0, 0.0);
        let plan = SpectralPlan::new(&s.ground_state.profile.grid);
        let mut w0 = RealField::from_fn(&s.ground_state.profile.grid, |x| (-(x[0] - 1.0).powi(2)).exp());
        let n = h1_norm(&w0, &plan);
        w0.scale(2.0 * s.params.perturbation_scale() / n);
        let s = s.with_perturbation(w0);
        let psi = build_initial_datum(&s, &g).unwrap();
        let r = validate_admissibility(&psi, &s, 1.0, &v);
        assert!(!r.checks.iter().find(|c| c.condition == "H1").unwrap().passed);
    }
}

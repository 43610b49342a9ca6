use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `beta = 1 + (alpha - gamma) / 2`, the width exponent that keeps the
/// rescaled ground state a standing wave of the h-scaled equation.
pub fn derive_beta(alpha: f64, gamma: f64) -> f64 {
    1.0 + (alpha - gamma) / 2.0
}

/// Scaling exponents of one run. `beta` is always derived from `alpha` and
/// `gamma`; there is no way to set it independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    h: f64,
    alpha: f64,
    gamma: f64,
    sigma: f64,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    h: f64,
    alpha: f64,
    gamma: f64,
    sigma: f64,
    dim: usize,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.h, r.alpha, r.gamma, r.sigma, r.dim)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams { h: p.h, alpha: p.alpha, gamma: p.gamma, sigma: p.sigma, dim: p.dim }
    }
}

impl ModelParams {
    pub fn new(h: f64, alpha: f64, gamma: f64, sigma: f64, dim: usize) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        if !(alpha.is_finite() && gamma.is_finite()) {
            return Err(Error::InvalidParameter("alpha and gamma must be finite".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        Ok(ModelParams { h, alpha, gamma, sigma, dim })
    }

    /// Same exponents, different semiclassical parameter.
    pub fn with_h(&self, h: f64) -> Result<Self> {
        ModelParams::new(h, self.alpha, self.gamma, self.sigma, self.dim)
    }

    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn beta(&self) -> f64 {
        derive_beta(self.alpha, self.gamma)
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn semiclassical_regime(&self) -> bool {
        self.alpha > self.gamma
    }

    /// Exponent of `h` relating the charge of the rescaled profile to the
    /// charge of the reference profile.
    pub fn charge_exponent(&self) -> f64 {
        self.dim as f64 * self.beta() - 2.0 * self.gamma
    }

    /// Exponent of `h` relating `J_h` of the rescaled profile to `J_1`.
    pub fn internal_energy_exponent(&self) -> f64 {
        self.dim as f64 * self.beta() - self.alpha - self.gamma
    }

    /// Width of the rescaled profile relative to the reference one.
    pub fn width_scale(&self) -> f64 {
        self.h.powf(self.beta())
    }

    pub fn amplitude_scale(&self) -> f64 {
        self.h.powf(-self.gamma)
    }

    /// `h^(alpha - gamma)`, the smallness scale of admissible perturbations.
    pub fn perturbation_scale(&self) -> f64 {
        self.h.powf(self.alpha - self.gamma)
    }

    /// Internal frequency `omega_h = omega / h^(alpha - gamma)`.
    pub fn scaled_omega(&self, omega: f64) -> f64 {
        omega / self.perturbation_scale()
    }
}

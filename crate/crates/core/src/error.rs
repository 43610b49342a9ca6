use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report. Variant names double as the
/// machine-readable error class emitted by the command line front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("assumption ({condition}) violated: {detail}")]
    AssumptionViolation { condition: String, detail: String },
    #[error("ground state did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("ground state iterate collapsed: rms width {width:.3e} below {limit:.3e}")]
    CollapseDetected { width: f64, limit: f64 },
    #[error("profile under-resolved: core spans {points:.2} grid points, need at least {required}")]
    UnderResolved { points: f64, required: f64 },
    #[error("initial position {position:?} is within {distance:.3e} of the box boundary (need {required:.3e})")]
    TooCloseToBoundary { position: Vec<f64>, distance: f64, required: f64 },
    #[error("phase wavelength spans {points:.2} grid points, need at least {required}")]
    PhaseUnderResolved { points: f64, required: f64 },
    #[error("perturbation bound unachievable: {0}")]
    BoundUnachievable(String),
    #[error("initial datum not admissible: {0}")]
    Inadmissible(String),
    #[error("charge drift {drift:.3e} exceeds {limit:.3e} at step {step}")]
    ChargeDrift { step: usize, drift: f64, limit: f64 },
    #[error("energy drift {drift:.3e} exceeds {limit:.3e} at step {step}")]
    EnergyDrift { step: usize, drift: f64, limit: f64 },
    #[error("boundary mass fraction {fraction:.3e} exceeds {limit:.3e} at step {step}")]
    BoundaryMassExceeded { step: usize, fraction: f64, limit: f64 },
    #[error("spectral tail fraction {fraction:.3e} exceeds {limit:.3e} at step {step}")]
    SpectralTailExceeded { step: usize, fraction: f64, limit: f64 },
    #[error("peak amplitude grew by a factor {factor:.3e} at step {step}")]
    AmplitudeGrowth { step: usize, factor: f64 },
    #[error("newton trajectory left the box interior at t = {time:.6} (|q| = {radius:.3e})")]
    EscapeDetected { time: f64, radius: f64 },
    #[error("time horizons differ: {0}")]
    TimeMismatch(String),
    #[error("sweep has {valid} valid runs, need at least {required}")]
    InsufficientPoints { valid: usize, required: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error("field file error: {0}")]
    FieldFile(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable class name used on the machine-readable error line.
    pub fn class(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::AssumptionViolation { .. } => "AssumptionViolation",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::CollapseDetected { .. } => "CollapseDetected",
            Error::UnderResolved { .. } => "UnderResolved",
            Error::TooCloseToBoundary { .. } => "TooCloseToBoundary",
            Error::PhaseUnderResolved { .. } => "PhaseUnderResolved",
            Error::BoundUnachievable(_) => "BoundUnachievable",
            Error::Inadmissible(_) => "Inadmissible",
            Error::ChargeDrift { .. } => "ChargeDrift",
            Error::EnergyDrift { .. } => "EnergyDrift",
            Error::BoundaryMassExceeded { .. } => "BoundaryMassExceeded",
            Error::SpectralTailExceeded { .. } => "SpectralTailExceeded",
            Error::AmplitudeGrowth { .. } => "AmplitudeGrowth",
            Error::EscapeDetected { .. } => "EscapeDetected",
            Error::TimeMismatch(_) => "TimeMismatch",
            Error::InsufficientPoints { .. } => "InsufficientPoints",
            Error::Config(_) => "Config",
            Error::FieldFile(_) => "FieldFile",
            Error::Io(_) => "Io",
        }
    }

    /// Step index for run-time monitor failures.
    pub fn step(&self) -> Option<usize> {
        match self {
            Error::ChargeDrift { step, .. }
            | Error::EnergyDrift { step, .. }
            | Error::BoundaryMassExceeded { step, .. }
            | Error::SpectralTailExceeded { step, .. }
            | Error::AmplitudeGrowth { step, .. } => Some(*step),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

//! Soliton dynamics of the semiclassical nonlinear Schroedinger equation
//!
//! ```text
//! i h psi_t = -(h^2/2) Lap psi + (1/(2 h^alpha)) W'(h^gamma |psi|) psi/|psi| + V psi
//! ```
//!
//! on a periodic box: constrained ground states, h-scaled initial data,
//! split-step propagation, barycenter diagnostics and the Newton reference.

pub mod assumptions;
pub mod config;
pub mod csvio;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod fieldfile;
pub mod grid;
pub mod ground_state;
pub mod harness;
pub mod initial;
pub mod interp;
pub mod newton;
pub mod nonlinearity;
pub mod params;
pub mod potential;
pub mod presets;
pub mod propagator;
pub mod spectral;

pub use assumptions::AssumptionCheck;
pub use config::ExperimentConfig;
pub use diagnostics::{Diagnostics, TrajectoryRecord};
pub use energy::EnergyParts;
pub use error::{Error, Result};
pub use grid::{Grid, RealField, WaveField};
pub use ground_state::{GroundState, SolverOptions};
pub use harness::{RunArtifacts, RunOptions, RunSummary, SweepReport, SweepRow};
pub use initial::{InitialDatumSpec, PerturbationRecipe};
pub use newton::{NewtonTrajectory, Scheme};
pub use nonlinearity::{FocusingPower, MassShifted, NoInteraction, Nonlinearity};
pub use params::ModelParams;
pub use potential::{Potential, PotentialMeta, RadialPolynomial};
pub use propagator::{MonitorLimits, PropagatorState, TimeStep};
pub use spectral::SpectralPlan;

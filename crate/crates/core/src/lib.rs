//! Combined energy and comfort optimization for an automotive A/C system.
//!
//! The crate is `no_std` (with `alloc`) and contains only arithmetic: the
//! control-oriented cabin model and its perturbed surrogate plant, the
//! modified PMV comfort model, a small bound-constrained penalty NLP solver,
//! the receding-horizon controllers and the closed-loop harness with its
//! metrics. File formats, timing and the command line live in the `ceco`
//! crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod comfort;
pub mod error;
pub mod model;
pub mod mpc;
pub mod nlp;
pub mod sim;

pub use comfort::{ComfortBoundsSpec, ComfortEnv, OccupantParams, SensationLevel};
pub use error::{FieldError, ModelError, SimError, SolverError, ValidationErrors};
pub use model::{AcParams, AcState, ControlInput, ExogenousSample, Plant, PlantParams};
pub use mpc::{ControllerKind, MpcConfig, PreviewWindow};
pub use nlp::{NlpProblem, NlpSolution, SolverOptions, SolverStatus};
pub use sim::{DriveCycle, MetricsReport, Scenario, SimRecord, SimTrace};

/// Offset between the Kelvin and Celsius scales.
pub const KELVIN_OFFSET: f64 = 273.15;

#[inline]
pub fn to_celsius(kelvin: f64) -> f64 {
    kelvin - KELVIN_OFFSET
}

#[inline]
pub fn to_kelvin(celsius: f64) -> f64 {
    celsius + KELVIN_OFFSET
}

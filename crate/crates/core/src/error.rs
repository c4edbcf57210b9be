use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::sim::SimTrace;

/// A temperature left the physically meaningful range or became non-finite.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("model diverged: {quantity} = {value} K is outside [230, 360] K")]
    Divergence { quantity: &'static str, value: f64 },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("non-finite objective or constraint at z = {z:?}")]
    NonFinite { z: Vec<f64> },
    #[error("initial point has dimension {got}, problem has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid bounds at index {index}: lower {lower} > upper {upper} or non-finite")]
    InvalidBounds { index: usize, lower: f64, upper: f64 },
}

/// One offending configuration field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

/// Every invariant violation found while validating a parameter set.
///
/// Validation never stops at the first problem, so a config file can be
/// fixed in one pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationErrors {
    pub errors: Vec<FieldError>,
}

impl ValidationErrors {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.errors.push(FieldError {
            field: field.into(),
            message: message.into(),
        });
    }

    /// Records `message` against `field` unless `ok` holds.
    pub fn check(&mut self, ok: bool, field: &str, message: &str) {
        if !ok {
            self.push(field, message);
        }
    }

    /// Appends another set of errors, prefixing each field with `section.`.
    pub fn extend_prefixed(&mut self, section: &str, other: ValidationErrors) {
        for e in other.errors {
            let mut field = String::from(section);
            field.push('.');
            field.push_str(&e.field);
            self.errors.push(FieldError {
                field,
                message: e.message,
            });
        }
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn into_result(self) -> Result<(), ValidationErrors> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(self)
        }
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} invalid field(s):", self.errors.len())?;
        for e in &self.errors {
            write!(f, "\n  {}: {}", e.field, e.message)?;
        }
        Ok(())
    }
}

impl core::error::Error for ValidationErrors {}

/// A closed-loop run that aborted. The records produced before the failure
/// are kept in `partial`.
#[derive(Debug, Clone, thiserror::Error)]
#[error("simulation aborted at step {step} (t = {time} s): {cause}")]
pub struct SimError {
    pub step: usize,
    pub time: f64,
    pub cause: SimFailure,
    pub partial: SimTrace,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimFailure {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("controller solve failed: {0}")]
    Solver(#[from] SolverError),
    #[error("invalid scenario: {0}")]
    Invalid(ValidationErrors),
}

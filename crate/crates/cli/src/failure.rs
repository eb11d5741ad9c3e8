//! Failure classes and the exit codes they map to.

use std::fmt;

/// Failures raised by the command layer itself.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or flag combinations.
    Usage(String),
    /// The data contradict an assumption the command needs.
    Assumption(String),
    /// A verification or truth check did not pass.
    Verification(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "invalid arguments: {m}"),
            Failure::Assumption(m) => write!(f, "assumption failure: {m}"),
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_IDENTIFICATION: u8 = 3;
pub const EXIT_VERIFICATION: u8 = 4;

pub fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(f) = err.downcast_ref::<Failure>() {
        return match f {
            Failure::Usage(_) => EXIT_VALIDATION,
            Failure::Assumption(_) => EXIT_IDENTIFICATION,
            Failure::Verification(_) => EXIT_VERIFICATION,
        };
    }
    if let Some(e) = err.downcast_ref::<factorial_iv::Error>() {
        return if e.is_validation() {
            EXIT_VALIDATION
        } else {
            EXIT_IDENTIFICATION
        };
    }
    EXIT_VALIDATION
}

//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row}, column `{column}`: {message}")]
    Schema {
        row: usize,
        column: String,
        message: String,
    },

    #[error("input contains no usable rows")]
    EmptyInput,

    #[error("invalid moments input: {0}")]
    Moments(String),

    #[error("instrument cell (z_a={z_a}, z_b={z_b}) has no mass")]
    MissingCell { z_a: u8, z_b: u8 },

    #[error("weak first stage: {what} = {value:e}")]
    WeakFirstStage { what: String, value: f64 },

    #[error("not identified: {0}")]
    Identification(String),

    #[error("moment {0} is undefined but carries positive weight")]
    UndefinedMoment(String),

    #[error("restriction {restriction} contradicts the data: {detail}")]
    Inconsistent { restriction: String, detail: String },

    #[error("assumptions are refuted by the data: {0}")]
    EmptyIdentifiedSet(String),

    #[error("unit-level data required: {0}")]
    NeedsUnitData(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("invalid population spec: {0}")]
    Spec(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by malformed input rather than by the
    /// identifying assumptions.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Schema { .. }
                | Error::EmptyInput
                | Error::Moments(_)
                | Error::Spec(_)
                | Error::InvalidArgument(_)
                | Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}

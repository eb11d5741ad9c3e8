//! Instrumental-variable analysis of 2×2 factorial designs in which two paired
//! members each receive a randomized instrument for their own treatment and
//! takeup may respond to the partner's instrument as well.
//!
//! The pipeline runs over a [`data::CellTable`], the sufficient statistics of
//! a dataset (or of published cell moments):
//!
//! * [`estimands`]: split-sample Wald ratios, first stage, reduced form,
//!   saturated IV coefficients and robust standard errors.
//! * [`identification`]: compliance-type shares and the point-identified
//!   conditional means of potential outcomes.
//! * [`bounds`]: bounds on the joint effect and the local average interaction
//!   effect of complier pairs.
//! * [`sensitivity`]: affine λ-multiplier models, box bounds and level-set grids.
//! * [`oracle`]: an exact finite-population simulator used to check every
//!   identity numerically.

pub mod bounds;
pub mod data;
pub mod error;
pub mod estimands;
pub mod identification;
pub mod interval;
pub mod oracle;
pub mod sensitivity;

pub use error::{Error, Result};

/// Denominators (first-stage contrasts, type shares) below this are treated as zero.
pub const FIRST_STAGE_TOL: f64 = 1e-8;

/// Resolved shares in `[-SHARE_CLAMP_TOL, 0)` are clamped to zero; anything lower is an error.
pub const SHARE_CLAMP_TOL: f64 = 1e-9;

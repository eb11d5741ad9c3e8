//! Exact finite-population oracle: synthetic pairs with known compliance
//! maps and potential outcomes, their exact cell tables, and checks of the
//! identification results against ground truth.

mod compliance;
mod population;
mod random;
mod truth;
mod verify;

pub use compliance::{ComplianceMap, MapSet, PairSet, TypeLabel};
pub use population::{
    make_population, AssignmentProbs, Mode, OutcomeModel, OutcomeRow, Population, PopulationSpec,
    PotentialOutcome, PotentialOutcomes, ProfileShare, SyntheticPair, Y11Order,
};
pub use random::{random_spec, seeded_random_spec, RandomOptions};
pub use truth::{effect_mass, outcome_mass, share, true_effect, true_mean, EffectKind};
pub use verify::{
    moment_target, verify, Check, Theorem, VerifyReport, CONTAINMENT_SLACK, EQUALITY_TOL,
    IDENTITY_TOL,
};

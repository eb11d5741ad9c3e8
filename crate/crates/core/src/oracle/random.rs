use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::compliance::{ComplianceMap, PairSet, TypeLabel};
use super::population::{
    AssignmentProbs, Mode, OutcomeModel, PopulationSpec, ProfileShare, Y11Order,
};

/// Knobs for [`random_spec`].
#[derive(Clone, Debug, PartialEq)]
pub struct RandomOptions {
    pub monotone_response: bool,
    pub y11: Y11Order,
    /// Always include a (self-complier, self-complier) profile so every first stage is positive.
    pub anchor: bool,
    /// Profiles that must not appear.
    pub exclude: PairSet,
    /// Chance that each allowed profile is included.
    pub inclusion: f64,
    pub k: f64,
}

impl Default for RandomOptions {
    fn default() -> Self {
        Self {
            monotone_response: true,
            y11: Y11Order::Free,
            anchor: true,
            exclude: PairSet::EMPTY,
            inclusion: 0.6,
            k: 100.0,
        }
    }
}

/// Draws a random valid spec for `mode`.
pub fn random_spec(rng: &mut impl Rng, mode: Mode, options: &RandomOptions) -> PopulationSpec {
    let anchor = (TypeLabel::SelfComplier.map(), TypeLabel::SelfComplier.map());
    let mut candidates: Vec<(ComplianceMap, ComplianceMap)> = mode
        .allowed_a()
        .iter()
        .flat_map(|a| mode.allowed_b().iter().map(move |b| (a, b)))
        .filter(|(a, b)| !options.exclude.contains(*a, *b))
        .collect();
    candidates.shuffle(rng);

    let mut chosen: Vec<(ComplianceMap, ComplianceMap)> = candidates
        .iter()
        .copied()
        .filter(|_| rng.random::<f64>() < options.inclusion)
        .collect();
    if options.anchor && !chosen.contains(&anchor) {
        chosen.push(anchor);
    }
    if chosen.is_empty() {
        chosen.push(candidates.first().copied().unwrap_or(anchor));
    }

    let raw: Vec<f64> = chosen.iter().map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let profiles = chosen
        .into_iter()
        .zip(&raw)
        .map(|((a, b), w)| ProfileShare {
            a,
            b,
            prob: w / total,
        })
        .collect();

    let cells: [f64; 4] = std::array::from_fn(|_| rng.random_range(1.0..4.0));
    let cell_total: f64 = cells.iter().sum();
    PopulationSpec {
        mode,
        profiles,
        outcomes: OutcomeModel::Uniform {
            monotone_response: options.monotone_response,
            y11: options.y11,
        },
        k: options.k,
        assignment: AssignmentProbs(cells.map(|c| c / cell_total)),
        seed: rng.random(),
    }
}

/// [`random_spec`] driven by a ChaCha8 stream seeded with `seed`.
pub fn seeded_random_spec(seed: u64, mode: Mode, options: &RandomOptions) -> PopulationSpec {
    random_spec(&mut ChaCha8Rng::seed_from_u64(seed), mode, options)
}

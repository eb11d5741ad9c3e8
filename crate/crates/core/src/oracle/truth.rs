use serde::{Deserialize, Serialize};

use super::compliance::PairSet;
use super::population::{Population, PotentialOutcome, PotentialOutcomes};
use crate::{Error, Result};

/// A potential-outcome contrast.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EffectKind {
    /// `Y(10) − Y(00)`
    AGivenNotB,
    /// `Y(11) − Y(01)`
    AGivenB,
    /// `Y(01) − Y(00)`
    BGivenNotA,
    /// `Y(11) − Y(10)`
    BGivenA,
    /// `Y(11) − Y(00)`
    Joint,
    /// `Y(11) − Y(01) − Y(10) + Y(00)`
    Laie,
}

impl EffectKind {
    pub const ALL: [EffectKind; 6] = [
        EffectKind::AGivenNotB,
        EffectKind::AGivenB,
        EffectKind::BGivenNotA,
        EffectKind::BGivenA,
        EffectKind::Joint,
        EffectKind::Laie,
    ];

    pub fn contrast(self, po: &PotentialOutcomes) -> f64 {
        match self {
            EffectKind::AGivenNotB => po.y10 - po.y00,
            EffectKind::AGivenB => po.y11 - po.y01,
            EffectKind::BGivenNotA => po.y01 - po.y00,
            EffectKind::BGivenA => po.y11 - po.y10,
            EffectKind::Joint => po.y11 - po.y00,
            EffectKind::Laie => po.y11 - po.y01 - po.y10 + po.y00,
        }
    }
}

fn members<'a>(
    pop: &'a Population,
    set: &'a PairSet,
) -> impl Iterator<Item = &'a super::SyntheticPair> + 'a {
    pop.pairs
        .iter()
        .filter(move |p| set.contains(p.map_a, p.map_b))
}

/// Population share of pairs whose profile lies in `set`.
pub fn share(pop: &Population, set: &PairSet) -> f64 {
    members(pop, set).map(|p| p.weight).sum()
}

/// `E[contrast · 1(profile ∈ set)]`; zero on an empty set.
pub fn effect_mass(pop: &Population, set: &PairSet, kind: EffectKind) -> f64 {
    members(pop, set)
        .map(|p| p.weight * kind.contrast(&p.po))
        .sum()
}

/// `E[Y(d) · 1(profile ∈ set)]`; zero on an empty set.
pub fn outcome_mass(pop: &Population, set: &PairSet, which: PotentialOutcome) -> f64 {
    members(pop, set).map(|p| p.weight * p.po.get(which)).sum()
}

fn require_mass(pop: &Population, set: &PairSet) -> Result<f64> {
    let mass = share(pop, set);
    if mass > 0.0 {
        Ok(mass)
    } else {
        Err(Error::InvalidArgument(
            "the selected pair set has zero mass".into(),
        ))
    }
}

/// Average effect over pairs in `set`.
pub fn true_effect(pop: &Population, set: &PairSet, kind: EffectKind) -> Result<f64> {
    let mass = require_mass(pop, set)?;
    Ok(effect_mass(pop, set, kind) / mass)
}

/// Mean potential outcome over pairs in `set`.
pub fn true_mean(pop: &Population, set: &PairSet, which: PotentialOutcome) -> Result<f64> {
    let mass = require_mass(pop, set)?;
    Ok(outcome_mass(pop, set, which) / mass)
}

use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::compliance::{ComplianceMap, MapSet, TypeLabel};
use crate::data::{Assignment, CellTable, Dataset, Observation, Takeup};
use crate::{Error, Result};

/// Which compliance maps each member may have.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Both members are self-compliers, joint compliers, never-takers or cross-defiers.
    #[serde(rename = "ONE_SIDED")]
    OneSided,
    /// A has any of the eight monotone types; B one of the four basic ones.
    #[serde(rename = "MONOTONE_A_ONESIDED_B")]
    MonotoneAOneSidedB,
    /// A has one of the four basic types; B any of the eight monotone ones.
    #[serde(rename = "ONESIDED_A_MONOTONE_B")]
    OneSidedAMonotoneB,
    /// Any of the 16 maps on either side.
    #[serde(rename = "UNRESTRICTED")]
    Unrestricted,
}

impl Mode {
    pub fn allowed_a(self) -> MapSet {
        match self {
            Mode::OneSided | Mode::OneSidedAMonotoneB => MapSet::of(&TypeLabel::BASIC),
            Mode::MonotoneAOneSidedB => MapSet::of(&TypeLabel::MONOTONE),
            Mode::Unrestricted => MapSet::ALL,
        }
    }

    pub fn allowed_b(self) -> MapSet {
        match self {
            Mode::OneSided | Mode::MonotoneAOneSidedB => MapSet::of(&TypeLabel::BASIC),
            Mode::OneSidedAMonotoneB => MapSet::of(&TypeLabel::MONOTONE),
            Mode::Unrestricted => MapSet::ALL,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialOutcomes {
    pub y00: f64,
    pub y01: f64,
    pub y10: f64,
    pub y11: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PotentialOutcome {
    Y00,
    Y01,
    Y10,
    Y11,
}

impl PotentialOutcomes {
    pub fn get(&self, which: PotentialOutcome) -> f64 {
        match which {
            PotentialOutcome::Y00 => self.y00,
            PotentialOutcome::Y01 => self.y01,
            PotentialOutcome::Y10 => self.y10,
            PotentialOutcome::Y11 => self.y11,
        }
    }

    /// Outcome realized under the given takeup.
    pub fn realized(&self, t: Takeup) -> f64 {
        match (t.d_a, t.d_b) {
            (0, 0) => self.y00,
            (0, _) => self.y01,
            (_, 0) => self.y10,
            _ => self.y11,
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.y10 >= self.y00 && self.y01 >= self.y00
    }

    pub fn within(&self, k: f64) -> bool {
        [self.y00, self.y01, self.y10, self.y11]
            .iter()
            .all(|y| (0.0..=k).contains(y))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPair {
    pub map_a: ComplianceMap,
    /// Indexed as (B's own instrument, A's instrument).
    pub map_b: ComplianceMap,
    pub po: PotentialOutcomes,
    pub weight: f64,
}

impl SyntheticPair {
    pub fn takeup(&self, z: Assignment) -> Takeup {
        Takeup::new(
            self.map_a.takes(z.z_a, z.z_b) as u8,
            self.map_b.takes(z.z_b, z.z_a) as u8,
        )
    }

    /// Realized takeup and outcome under an instrument assignment.
    pub fn realize(&self, z: Assignment) -> (Takeup, f64) {
        let t = self.takeup(z);
        (t, self.po.realized(t))
    }
}

/// Ordering imposed on `Y(11)` by the uniform outcome generator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Y11Order {
    #[default]
    Free,
    GeY00,
    GeMax,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum OutcomeModel {
    /// Uniform draws on `[0, K]`, each profile with its own skew. Monotone
    /// response draws `Y(10)`, `Y(01)` above `Y(00)`.
    Uniform {
        monotone_response: bool,
        #[serde(default)]
        y11: Y11Order,
    },
    /// Constant effects around a uniform baseline.
    Homogeneous {
        base_lo: f64,
        base_hi: f64,
        tau_a: f64,
        tau_b: f64,
        tau_ab: f64,
    },
    /// Fixed potential outcomes per profile.
    Table { rows: Vec<OutcomeRow> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub a: ComplianceMap,
    pub b: ComplianceMap,
    pub po: PotentialOutcomes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileShare {
    pub a: ComplianceMap,
    pub b: ComplianceMap,
    pub prob: f64,
}

/// Probabilities of the instrument cells in (0,0), (0,1), (1,0), (1,1) order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentProbs(pub [f64; 4]);

impl Default for AssignmentProbs {
    fn default() -> Self {
        Self([0.25; 4])
    }
}

impl AssignmentProbs {
    pub fn get(&self, z: Assignment) -> f64 {
        self.0[z.index()]
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|p| p.is_nan() || *p <= 0.0)
            || (self.0.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::Spec(format!(
                "assignment probabilities must be positive and sum to 1, found {:?}",
                self.0
            )));
        }
        Ok(())
    }
}

fn default_k() -> f64 {
    100.0
}

/// A replayable population description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub mode: Mode,
    pub profiles: Vec<ProfileShare>,
    pub outcomes: OutcomeModel,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default)]
    pub assignment: AssignmentProbs,
    pub seed: u64,
}

impl PopulationSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Spec(format!("K must be positive, found {}", self.k)));
        }
        self.assignment.validate()?;
        if self.profiles.is_empty() {
            return Err(Error::Spec("no profiles".into()));
        }
        let mut seen = BTreeSet::new();
        for p in &self.profiles {
            if !(p.prob >= 0.0 && p.prob.is_finite()) {
                return Err(Error::Spec(format!(
                    "profile ({}, {}) has probability {}",
                    p.a, p.b, p.prob
                )));
            }
            if !self.mode.allowed_a().contains(p.a) || !self.mode.allowed_b().contains(p.b) {
                return Err(Error::Spec(format!(
                    "profile ({}, {}) is not allowed in mode {:?}",
                    p.a, p.b, self.mode
                )));
            }
            if !seen.insert((p.a, p.b)) {
                return Err(Error::Spec(format!(
                    "profile ({}, {}) appears twice",
                    p.a, p.b
                )));
            }
        }
        let total: f64 = self.profiles.iter().map(|p| p.prob).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Spec(format!("profile probabilities sum to {total}")));
        }
        if let OutcomeModel::Table { rows } = &self.outcomes {
            for p in self.profiles.iter().filter(|p| p.prob > 0.0) {
                if !rows.iter().any(|r| r.a == p.a && r.b == p.b) {
                    return Err(Error::Spec(format!(
                        "outcome table has no row for ({}, {})",
                        p.a, p.b
                    )));
                }
            }
        }
        if let OutcomeModel::Homogeneous {
            base_lo, base_hi, ..
        } = &self.outcomes
        {
            if base_lo > base_hi {
                return Err(Error::Spec("homogeneous baseline range is reversed".into()));
            }
        }
        Ok(())
    }
}

/// A finite weighted list of pairs; weights sum to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub mode: Mode,
    pub k: f64,
    pub pairs: Vec<SyntheticPair>,
}

fn draw_outcomes(
    model: &OutcomeModel,
    k: f64,
    skew: [f64; 4],
    rng: &mut ChaCha8Rng,
) -> PotentialOutcomes {
    match model {
        OutcomeModel::Uniform {
            monotone_response,
            y11,
        } => {
            let mut u = |i: usize| rng.random::<f64>().powf(skew[i]);
            let y00 = k * u(0);
            let (y10, y01) = if *monotone_response {
                (y00 + (k - y00) * u(1), y00 + (k - y00) * u(2))
            } else {
                (k * u(1), k * u(2))
            };
            let floor = match y11 {
                Y11Order::Free => 0.0,
                Y11Order::GeY00 => y00,
                Y11Order::GeMax => y00.max(y10).max(y01),
            };
            let y11 = floor + (k - floor) * u(3);
            PotentialOutcomes { y00, y01, y10, y11 }
        }
        OutcomeModel::Homogeneous {
            base_lo,
            base_hi,
            tau_a,
            tau_b,
            tau_ab,
        } => {
            let y00 = base_lo + (base_hi - base_lo) * rng.random::<f64>();
            PotentialOutcomes {
                y00,
                y10: y00 + tau_a,
                y01: y00 + tau_b,
                y11: y00 + tau_a + tau_b + tau_ab,
            }
        }
        OutcomeModel::Table { .. } => unreachable!("table outcomes are looked up"),
    }
}

/// Instantiates `spec` with about `n_pairs` pairs.
///
/// Each profile with positive probability gets `max(1, round(n_pairs·p))`
/// pairs sharing its probability equally, so profile frequencies are exact.
pub fn make_population(spec: &PopulationSpec, n_pairs: usize) -> Result<Population> {
    spec.validate()?;
    if n_pairs == 0 {
        return Err(Error::Spec("n_pairs must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pairs = Vec::new();
    for p in spec.profiles.iter().filter(|p| p.prob > 0.0) {
        let count = ((n_pairs as f64 * p.prob).round() as usize).max(1);
        let weight = p.prob / count as f64;
        let skew: [f64; 4] = std::array::from_fn(|_| 0.3 + 2.7 * rng.random::<f64>());
        for _ in 0..count {
            let po = match &spec.outcomes {
                OutcomeModel::Table { rows } => {
                    rows.iter()
                        .find(|r| r.a == p.a && r.b == p.b)
                        .expect("validated")
                        .po
                }
                model => draw_outcomes(model, spec.k, skew, &mut rng),
            };
            pairs.push(SyntheticPair {
                map_a: p.a,
                map_b: p.b,
                po,
                weight,
            });
        }
    }
    Ok(Population {
        mode: spec.mode,
        k: spec.k,
        pairs,
    })
}

impl Population {
    /// Cell table in the limit of infinitely many draws.
    pub fn exact_cell_table(&self, assignment: &AssignmentProbs) -> Result<CellTable> {
        assignment.validate()?;
        if self.pairs.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut rows = Vec::with_capacity(self.pairs.len() * 4);
        for z in Assignment::ALL {
            for pair in &self.pairs {
                let (t, y) = pair.realize(z);
                rows.push(Observation {
                    y,
                    d_a: t.d_a == 1,
                    d_b: t.d_b == 1,
                    z_a: z.z_a == 1,
                    z_b: z.z_b == 1,
                    weight: pair.weight * assignment.get(z),
                });
            }
        }
        CellTable::from_observations(&rows)
    }

    /// `n` i.i.d. draws of a pair (by weight) and an instrument cell.
    pub fn sample_dataset(
        &self,
        n: usize,
        seed: u64,
        assignment: &AssignmentProbs,
    ) -> Result<Dataset> {
        assignment.validate()?;
        if n == 0 {
            return Err(Error::InvalidArgument(
                "sample size must be at least 1".into(),
            ));
        }
        let pick_pair = WeightedIndex::new(self.pairs.iter().map(|p| p.weight))
            .map_err(|e| Error::Spec(format!("pair weights: {e}")))?;
        let pick_cell = WeightedIndex::new(assignment.0)
            .map_err(|e| Error::Spec(format!("assignment: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let observations = (0..n)
            .map(|_| {
                let pair = &self.pairs[pick_pair.sample(&mut rng)];
                let z = Assignment::ALL[pick_cell.sample(&mut rng)];
                let (t, y) = pair.realize(z);
                Observation::new(y, t.d_a == 1, t.d_b == 1, z.z_a == 1, z.z_b == 1)
            })
            .collect();
        Ok(Dataset::new(observations))
    }

    pub fn all_outcomes(&self, pred: impl Fn(&PotentialOutcomes) -> bool) -> bool {
        self.pairs.iter().all(|p| pred(&p.po))
    }
}

//! Cell tables from published moments instead of unit records.
//!
//! Published tables are rounded independently, so the per-cell summaries
//! (`mean_d_a`, `mean_d_b`, `mean_y`) are taken as given when supplied and
//! the takeup probabilities are only checked against them up to
//! `rounding_tolerance`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cells::{Assignment, CellOrigin, CellTable, InstrumentCell, Takeup, TreatmentCell};
use crate::{Error, Result};

pub const MOMENTS_SCHEMA_VERSION: u32 = 1;

const DEFAULT_ROUNDING_TOLERANCE: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentsInput {
    pub schema_version: u32,
    pub cells: Vec<MomentsCell>,
    /// Coefficients (and optionally standard errors) of a published IV fit,
    /// ordered as intercept, D_A, D_B, D_A·D_B.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_iv: Option<PublishedIv>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounding_tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentsCell {
    pub z_a: u8,
    pub z_b: u8,
    /// Number of units (or total weight); defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_d_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_d_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_d_ab: Option<f64>,
    #[serde(default)]
    pub takeup: Vec<TakeupMoment>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TakeupMoment {
    pub d_a: u8,
    pub d_b: u8,
    pub prob: f64,
    #[serde(default)]
    pub mean_y: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublishedIv {
    pub coef: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se: Option<[f64; 4]>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Moments(msg.into())
}

fn check_prob(x: f64, what: &str, z: Assignment) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(bad(format!("{what} at {z} must lie in [0,1], found {x}")))
    }
}

impl MomentsInput {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Exports a cell table in this schema (probabilities and means per cell).
    pub fn from_cell_table(table: &CellTable) -> Self {
        let cells = Assignment::ALL
            .iter()
            .map(|&z| {
                let c = table.cell(z);
                let takeup = Takeup::ALL
                    .iter()
                    .filter(|t| c.mass > 0.0 && c.takeup[t.index()].mass > 0.0)
                    .map(|&t| TakeupMoment {
                        d_a: t.d_a,
                        d_b: t.d_b,
                        prob: c.takeup[t.index()].mass / c.mass,
                        mean_y: c.takeup[t.index()].mean_y,
                    })
                    .collect();
                MomentsCell {
                    z_a: z.z_a,
                    z_b: z.z_b,
                    n: Some(c.mass),
                    mean_y: c.mean_y,
                    mean_d_a: c.mean_d_a,
                    mean_d_b: c.mean_d_b,
                    mean_d_ab: c.mean_d_ab,
                    takeup,
                }
            })
            .collect();
        Self {
            schema_version: MOMENTS_SCHEMA_VERSION,
            cells,
            published_iv: None,
            rounding_tolerance: None,
        }
    }

    pub fn to_cell_table(&self) -> Result<CellTable> {
        if self.schema_version != MOMENTS_SCHEMA_VERSION {
            return Err(bad(format!(
                "unsupported schema_version {} (expected {MOMENTS_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let tol = self
            .rounding_tolerance
            .unwrap_or(DEFAULT_ROUNDING_TOLERANCE);
        let mut seen = [false; 4];
        let mut cells = [InstrumentCell::default(); 4];
        for mc in &self.cells {
            if mc.z_a > 1 || mc.z_b > 1 {
                return Err(bad(format!(
                    "instrument values must be 0/1, found ({}, {})",
                    mc.z_a, mc.z_b
                )));
            }
            let z = Assignment::new(mc.z_a, mc.z_b);
            if std::mem::replace(&mut seen[z.index()], true) {
                return Err(bad(format!("instrument cell {z} appears twice")));
            }
            cells[z.index()] = cell_from_moments(mc, z, tol)?;
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            let z = Assignment::ALL[i];
            return Err(Error::MissingCell {
                z_a: z.z_a,
                z_b: z.z_b,
            });
        }
        Ok(CellTable::from_cells(cells, CellOrigin::Moments))
    }
}

fn cell_from_moments(mc: &MomentsCell, z: Assignment, tol: f64) -> Result<InstrumentCell> {
    let n = mc.n.unwrap_or(1.0);
    if !(n > 0.0 && n.is_finite()) {
        return Err(bad(format!("cell {z} needs a positive n, found {n}")));
    }
    for (v, what) in [
        (mc.mean_d_a, "mean_d_a"),
        (mc.mean_d_b, "mean_d_b"),
        (mc.mean_d_ab, "mean_d_ab"),
    ] {
        if let Some(v) = v {
            check_prob(v, what, z)?;
        }
    }

    let mut probs: [Option<(f64, Option<f64>)>; 4] = [None; 4];
    for tm in &mc.takeup {
        if tm.d_a > 1 || tm.d_b > 1 {
            return Err(bad(format!("takeup values must be 0/1 at {z}")));
        }
        check_prob(tm.prob, "takeup probability", z)?;
        let t = Takeup::new(tm.d_a, tm.d_b);
        if probs[t.index()].is_some() {
            return Err(bad(format!("takeup cell {t} appears twice at {z}")));
        }
        let mean = if tm.prob > 0.0 { tm.mean_y } else { None };
        probs[t.index()] = Some((tm.prob, mean));
    }
    if mc.takeup.is_empty() {
        probs = derive_takeup(mc, z)?;
    }

    let p = |t: Takeup| probs[t.index()].map_or(0.0, |(p, _)| p);
    let total: f64 = Takeup::ALL.iter().map(|&t| p(t)).sum();
    if (total - 1.0).abs() > tol {
        return Err(bad(format!("takeup probabilities at {z} sum to {total}")));
    }

    let derived_d_a = p(Takeup::new(1, 0)) + p(Takeup::new(1, 1));
    let derived_d_b = p(Takeup::new(0, 1)) + p(Takeup::new(1, 1));
    let derived_d_ab = p(Takeup::new(1, 1));
    let reconcile = |given: Option<f64>, derived: f64, what: &str| -> Result<f64> {
        match given {
            Some(g) if (g - derived).abs() > tol => Err(bad(format!(
                "{what} at {z} is {g} but the takeup probabilities imply {derived}"
            ))),
            Some(g) => Ok(g),
            None => Ok(derived),
        }
    };
    let mean_d_a = reconcile(mc.mean_d_a, derived_d_a, "mean_d_a")?;
    let mean_d_b = reconcile(mc.mean_d_b, derived_d_b, "mean_d_b")?;
    let mean_d_ab = reconcile(mc.mean_d_ab, derived_d_ab, "mean_d_ab")?;

    let mean_y = match mc.mean_y {
        Some(y) if y.is_finite() => y,
        Some(y) => return Err(bad(format!("mean_y at {z} must be finite, found {y}"))),
        None => {
            let mut acc = 0.0;
            for t in Takeup::ALL {
                if let Some((pt, m)) = probs[t.index()] {
                    if pt > 0.0 {
                        acc += pt
                            * m.ok_or_else(|| {
                                bad(format!(
                                "mean_y at {z} is missing and cannot be derived ({t} has no mean)"
                            ))
                            })?;
                    }
                }
            }
            acc / total
        }
    };

    let mut takeup = [TreatmentCell::default(); 4];
    for t in Takeup::ALL {
        if let Some((pt, m)) = probs[t.index()] {
            if let Some(m) = m {
                if !m.is_finite() {
                    return Err(bad(format!("mean at {z}, {t} must be finite")));
                }
            }
            takeup[t.index()] = TreatmentCell {
                mass: pt * n,
                mean_y: m,
            };
        }
    }
    Ok(InstrumentCell {
        mass: n,
        takeup,
        mean_y: Some(mean_y),
        mean_d_a: Some(mean_d_a),
        mean_d_b: Some(mean_d_b),
        mean_d_ab: Some(mean_d_ab),
    })
}

/// Probability of one takeup configuration and, if known, its outcome mean.
type TakeupCell = Option<(f64, Option<f64>)>;

/// Takeup probabilities implied by the marginals when at most one treatment
/// is ever taken in the cell. A cell with a single takeup configuration
/// inherits the cell's outcome mean.
fn derive_takeup(mc: &MomentsCell, z: Assignment) -> Result<[TakeupCell; 4]> {
    let (Some(da), Some(db)) = (mc.mean_d_a, mc.mean_d_b) else {
        return Err(bad(format!(
            "cell {z} needs either takeup probabilities or both mean_d_a and mean_d_b"
        )));
    };
    let mut probs = [None; 4];
    if da == 0.0 {
        probs[Takeup::new(0, 1).index()] = Some((db, None));
        probs[Takeup::new(0, 0).index()] = Some((1.0 - db, None));
    } else if db == 0.0 {
        probs[Takeup::new(1, 0).index()] = Some((da, None));
        probs[Takeup::new(0, 0).index()] = Some((1.0 - da, None));
    } else {
        return Err(bad(format!(
            "takeup probabilities at {z} are not determined by the marginals; list them explicitly"
        )));
    }
    let live: Vec<usize> = (0..4)
        .filter(|&i| probs[i].is_some_and(|(p, _)| p > 0.0))
        .collect();
    if let [only] = live[..] {
        probs[only] = Some((1.0, mc.mean_y));
    }
    for slot in probs.iter_mut() {
        if slot.is_some_and(|(p, _)| p == 0.0) {
            *slot = Some((0.0, None));
        }
    }
    Ok(probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(z_a: u8, z_b: u8, takeup: Vec<TakeupMoment>) -> MomentsCell {
        MomentsCell {
            z_a,
            z_b,
            n: None,
            mean_y: None,
            mean_d_a: None,
            mean_d_b: None,
            mean_d_ab: None,
            takeup,
        }
    }

    fn tm(d_a: u8, d_b: u8, prob: f64, mean_y: Option<f64>) -> TakeupMoment {
        TakeupMoment {
            d_a,
            d_b,
            prob,
            mean_y,
        }
    }

    fn full() -> MomentsInput {
        MomentsInput {
            schema_version: 1,
            cells: vec![
                cell(0, 0, vec![tm(0, 0, 1.0, Some(1.0))]),
                cell(
                    0,
                    1,
                    vec![tm(0, 1, 0.5, Some(2.0)), tm(0, 0, 0.5, Some(4.0))],
                ),
                cell(
                    1,
                    0,
                    vec![tm(1, 0, 0.25, Some(8.0)), tm(0, 0, 0.75, Some(0.0))],
                ),
                cell(
                    1,
                    1,
                    vec![tm(1, 1, 0.5, Some(3.0)), tm(0, 0, 0.5, Some(1.0))],
                ),
            ],
            published_iv: None,
            rounding_tolerance: None,
        }
    }

    #[test]
    fn derives_marginals_and_means_from_takeup() {
        let t = full().to_cell_table().unwrap();
        let z = Assignment::new(1, 1);
        assert_eq!(t.dbar_a(z).unwrap(), 0.5);
        assert_eq!(t.dbar_ab(z).unwrap(), 0.5);
        assert_eq!(t.ybar(z).unwrap(), 2.0);
        assert_eq!(t.ybar(Assignment::new(0, 1)).unwrap(), 3.0);
        assert_eq!(t.origin(), CellOrigin::Moments);
    }

    #[test]
    fn missing_cell_is_rejected() {
        let mut m = full();
        m.cells.pop();
        assert!(matches!(
            m.to_cell_table(),
            Err(Error::MissingCell { z_a: 1, z_b: 1 })
        ));
    }

    #[test]
    fn inconsistent_marginal_is_rejected() {
        let mut m = full();
        m.cells[3].mean_d_a = Some(0.6);
        assert!(m.to_cell_table().is_err());
        m.cells[3].mean_d_a = Some(0.51);
        assert_eq!(
            m.to_cell_table()
                .unwrap()
                .dbar_a(Assignment::new(1, 1))
                .unwrap(),
            0.51
        );
    }

    #[test]
    fn zero_probability_means_are_undefined() {
        let mut m = full();
        m.cells[3].takeup.push(tm(1, 0, 0.0, Some(50.0)));
        let t = m.to_cell_table().unwrap();
        assert_eq!(t.mean(Assignment::new(1, 1), Takeup::new(1, 0)), None);
    }

    #[test]
    fn takeup_can_be_derived_from_one_sided_marginals() {
        let mut m = full();
        m.cells[0] = MomentsCell {
            mean_y: Some(5.0),
            mean_d_a: Some(0.0),
            mean_d_b: Some(0.0),
            ..cell(0, 0, vec![])
        };
        let t = m.to_cell_table().unwrap();
        assert_eq!(t.mean(Assignment::new(0, 0), Takeup::new(0, 0)), Some(5.0));
    }

    #[test]
    fn round_trip_through_export() {
        let t = full().to_cell_table().unwrap();
        let back = MomentsInput::from_cell_table(&t).to_cell_table().unwrap();
        for z in Assignment::ALL {
            for d in Takeup::ALL {
                assert!((t.takeup_mass(z, d) - back.takeup_mass(z, d)).abs() < 1e-12);
                assert_eq!(t.mean(z, d), back.mean(z, d));
            }
        }
    }
}

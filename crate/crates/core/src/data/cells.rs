use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Dataset, Observation};
use crate::{Error, Result};

/// An instrument configuration `(z_a, z_b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment {
    pub z_a: u8,
    pub z_b: u8,
}

impl Assignment {
    pub const fn new(z_a: u8, z_b: u8) -> Self {
        assert!(z_a <= 1 && z_b <= 1);
        Self { z_a, z_b }
    }

    /// Cells in the order (0,0), (0,1), (1,0), (1,1).
    pub const ALL: [Assignment; 4] = [
        Assignment::new(0, 0),
        Assignment::new(0, 1),
        Assignment::new(1, 0),
        Assignment::new(1, 1),
    ];

    pub const fn index(self) -> usize {
        (self.z_a * 2 + self.z_b) as usize
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z_A={},Z_B={}", self.z_a, self.z_b)
    }
}

/// A realized takeup configuration `(d_a, d_b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Takeup {
    pub d_a: u8,
    pub d_b: u8,
}

impl Takeup {
    pub const fn new(d_a: u8, d_b: u8) -> Self {
        assert!(d_a <= 1 && d_b <= 1);
        Self { d_a, d_b }
    }

    /// Cells in the order (0,0), (0,1), (1,0), (1,1).
    pub const ALL: [Takeup; 4] = [
        Takeup::new(0, 0),
        Takeup::new(0, 1),
        Takeup::new(1, 0),
        Takeup::new(1, 1),
    ];

    pub const fn index(self) -> usize {
        (self.d_a * 2 + self.d_b) as usize
    }
}

impl fmt::Display for Takeup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D_A={},D_B={}", self.d_a, self.d_b)
    }
}

/// Mass and mean outcome of one takeup cell within an instrument cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TreatmentCell {
    pub mass: f64,
    /// `None` when the cell has no mass.
    pub mean_y: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InstrumentCell {
    pub mass: f64,
    /// Indexed by [`Takeup::index`].
    pub takeup: [TreatmentCell; 4],
    pub mean_y: Option<f64>,
    pub mean_d_a: Option<f64>,
    pub mean_d_b: Option<f64>,
    pub mean_d_ab: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellOrigin {
    /// Aggregated from (weighted) unit records.
    Units,
    /// Supplied as published cell probabilities and means.
    Moments,
}

/// Sufficient statistics for every `(z_a, z_b, d_a, d_b)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellTable {
    cells: [InstrumentCell; 4],
    origin: CellOrigin,
}

impl CellTable {
    pub(crate) fn from_cells(cells: [InstrumentCell; 4], origin: CellOrigin) -> Self {
        Self { cells, origin }
    }

    /// Aggregates weighted observations; zero-weight rows contribute nothing.
    pub fn from_observations<'a, I>(observations: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Observation>,
    {
        let mut mass = [[0.0f64; 4]; 4];
        let mut sum_y = [[0.0f64; 4]; 4];
        let mut rows = 0usize;
        for o in observations {
            rows += 1;
            if o.weight.is_nan() || o.weight < 0.0 || !o.y.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "observation {rows} has weight {} and outcome {}",
                    o.weight, o.y
                )));
            }
            let (z, t) = (o.assignment().index(), o.takeup().index());
            mass[z][t] += o.weight;
            sum_y[z][t] += o.weight * o.y;
        }
        if rows == 0 {
            return Err(Error::EmptyInput);
        }
        let mut cells = [InstrumentCell::default(); 4];
        for z in 0..4 {
            let cell = &mut cells[z];
            for t in 0..4 {
                cell.takeup[t] = TreatmentCell {
                    mass: mass[z][t],
                    mean_y: (mass[z][t] > 0.0).then(|| sum_y[z][t] / mass[z][t]),
                };
            }
            cell.mass = mass[z].iter().sum();
            if cell.mass > 0.0 {
                let m = cell.mass;
                let by = |pred: fn(Takeup) -> bool| -> f64 {
                    Takeup::ALL
                        .iter()
                        .filter(|t| pred(**t))
                        .map(|t| mass[z][t.index()])
                        .sum::<f64>()
                        / m
                };
                cell.mean_y = Some(sum_y[z].iter().sum::<f64>() / m);
                cell.mean_d_a = Some(by(|t| t.d_a == 1));
                cell.mean_d_b = Some(by(|t| t.d_b == 1));
                cell.mean_d_ab = Some(by(|t| t.d_a == 1 && t.d_b == 1));
            }
        }
        Ok(Self {
            cells,
            origin: CellOrigin::Units,
        })
    }

    pub fn origin(&self) -> CellOrigin {
        self.origin
    }

    pub fn cell(&self, z: Assignment) -> &InstrumentCell {
        &self.cells[z.index()]
    }

    pub fn mass(&self, z: Assignment) -> f64 {
        self.cell(z).mass
    }

    pub fn total_mass(&self) -> f64 {
        self.cells.iter().map(|c| c.mass).sum()
    }

    pub fn takeup_mass(&self, z: Assignment, t: Takeup) -> f64 {
        self.cell(z).takeup[t.index()].mass
    }

    fn nonempty(&self, z: Assignment) -> Result<&InstrumentCell> {
        let cell = self.cell(z);
        if cell.mass > 0.0 {
            Ok(cell)
        } else {
            Err(Error::MissingCell {
                z_a: z.z_a,
                z_b: z.z_b,
            })
        }
    }

    /// `P(D_A=d_a, D_B=d_b | Z_A=z_a, Z_B=z_b)`.
    pub fn prob(&self, z: Assignment, t: Takeup) -> Result<f64> {
        let cell = self.nonempty(z)?;
        Ok(cell.takeup[t.index()].mass / cell.mass)
    }

    /// Mean outcome in a takeup cell; `None` on a zero-mass cell.
    pub fn mean(&self, z: Assignment, t: Takeup) -> Option<f64> {
        self.cell(z).takeup[t.index()].mean_y
    }

    pub fn ybar(&self, z: Assignment) -> Result<f64> {
        let cell = self.nonempty(z)?;
        cell.mean_y.ok_or(Error::MissingCell {
            z_a: z.z_a,
            z_b: z.z_b,
        })
    }

    pub fn dbar_a(&self, z: Assignment) -> Result<f64> {
        let cell = self.nonempty(z)?;
        cell.mean_d_a.ok_or(Error::MissingCell {
            z_a: z.z_a,
            z_b: z.z_b,
        })
    }

    pub fn dbar_b(&self, z: Assignment) -> Result<f64> {
        let cell = self.nonempty(z)?;
        cell.mean_d_b.ok_or(Error::MissingCell {
            z_a: z.z_a,
            z_b: z.z_b,
        })
    }

    /// Mean of `D_A·D_B` in an instrument cell.
    pub fn dbar_ab(&self, z: Assignment) -> Result<f64> {
        let cell = self.nonempty(z)?;
        cell.mean_d_ab.ok_or(Error::MissingCell {
            z_a: z.z_a,
            z_b: z.z_b,
        })
    }

    /// Mass-weighted outcome mean over all instrument cells.
    pub fn overall_mean_y(&self) -> Option<f64> {
        let total = self.total_mass();
        if total <= 0.0 {
            return None;
        }
        let mut acc = 0.0;
        for c in &self.cells {
            if c.mass > 0.0 {
                acc += c.mass * c.mean_y?;
            }
        }
        Some(acc / total)
    }
}

/// Aggregates a dataset into its cell table.
pub fn build_cell_table(dataset: &Dataset) -> Result<CellTable> {
    CellTable::from_observations(&dataset.observations)
}

/// Mass of units treated without their own instrument.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneSidedReport {
    /// Mass with `D_A = 1` in cells where `Z_A = 0`.
    pub violation_mass_a: f64,
    /// Mass with `D_B = 1` in cells where `Z_B = 0`.
    pub violation_mass_b: f64,
    pub pass: bool,
}

pub fn check_one_sided(table: &CellTable) -> OneSidedReport {
    let treated_mass = |z: Assignment, pick: fn(&InstrumentCell) -> Option<f64>| {
        let cell = table.cell(z);
        if cell.mass > 0.0 {
            cell.mass * pick(cell).unwrap_or(0.0)
        } else {
            0.0
        }
    };
    let violation_mass_a = [Assignment::new(0, 0), Assignment::new(0, 1)]
        .into_iter()
        .map(|z| treated_mass(z, |c| c.mean_d_a))
        .sum::<f64>();
    let violation_mass_b = [Assignment::new(0, 0), Assignment::new(1, 0)]
        .into_iter()
        .map(|z| treated_mass(z, |c| c.mean_d_b))
        .sum::<f64>();
    OneSidedReport {
        violation_mass_a,
        violation_mass_b,
        pass: violation_mass_a == 0.0 && violation_mass_b == 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(y: f64, d_a: u8, d_b: u8, z_a: u8, z_b: u8) -> Observation {
        Observation::new(y, d_a == 1, d_b == 1, z_a == 1, z_b == 1)
    }

    #[test]
    fn single_observation_fills_one_cell() {
        let t = CellTable::from_observations(&[obs(5.0, 1, 1, 1, 1)]).unwrap();
        let z11 = Assignment::new(1, 1);
        assert_eq!(t.takeup_mass(z11, Takeup::new(1, 1)), 1.0);
        assert_eq!(t.mean(z11, Takeup::new(1, 1)), Some(5.0));
        for z in Assignment::ALL {
            for d in Takeup::ALL {
                if (z, d) != (z11, Takeup::new(1, 1)) {
                    assert_eq!(t.takeup_mass(z, d), 0.0);
                    assert_eq!(t.mean(z, d), None);
                }
            }
        }
        assert!(matches!(
            t.ybar(Assignment::new(0, 0)),
            Err(Error::MissingCell { .. })
        ));
    }

    #[test]
    fn one_sided_violation_mass_is_reported() {
        let mut rows = vec![obs(1.0, 0, 0, 1, 1)];
        for _ in 0..3 {
            rows.push(obs(2.0, 1, 0, 0, 0));
        }
        rows.push(obs(2.0, 0, 0, 0, 0));
        let t = CellTable::from_observations(&rows).unwrap();
        let report = check_one_sided(&t);
        assert!(!report.pass);
        assert!((report.violation_mass_a - 3.0).abs() < 1e-12);
        assert_eq!(report.violation_mass_b, 0.0);
    }

    #[test]
    fn takeup_means_follow_masses() {
        let rows = [
            obs(1.0, 1, 0, 1, 0).with_weight(3.0),
            obs(2.0, 0, 0, 1, 0).with_weight(1.0),
        ];
        let t = CellTable::from_observations(&rows).unwrap();
        let z = Assignment::new(1, 0);
        assert_eq!(t.dbar_a(z).unwrap(), 0.75);
        assert_eq!(t.dbar_b(z).unwrap(), 0.0);
        assert_eq!(t.ybar(z).unwrap(), 1.25);
        assert_eq!(t.prob(z, Takeup::new(0, 0)).unwrap(), 0.25);
    }

    #[test]
    fn negative_weight_is_rejected() {
        let rows = [obs(1.0, 0, 0, 0, 0).with_weight(-1.0)];
        assert!(CellTable::from_observations(&rows).is_err());
    }
}

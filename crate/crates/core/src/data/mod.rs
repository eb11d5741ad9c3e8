//! Observations, ingestion and the cell-table sufficient statistics.
//!
//! Every estimand and bound is a function of a [`CellTable`]: for each
//! instrument cell `(z_a, z_b)` the total mass, and for each takeup cell
//! `(d_a, d_b)` inside it the mass and mean outcome. A table can be built
//! from weighted unit records or directly from published cell moments.

mod cells;
mod ingest;
mod moments;

pub use cells::{
    build_cell_table, check_one_sided, Assignment, CellOrigin, CellTable, InstrumentCell,
    OneSidedReport, Takeup, TreatmentCell,
};
pub use ingest::{ingest_csv, ingest_path, ingest_rows, ColumnMap, IngestOptions};
pub use moments::{MomentsCell, MomentsInput, PublishedIv, TakeupMoment, MOMENTS_SCHEMA_VERSION};

use serde::{Deserialize, Serialize};

/// One unit's record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub y: f64,
    pub d_a: bool,
    pub d_b: bool,
    pub z_a: bool,
    pub z_b: bool,
    pub weight: f64,
}

impl Observation {
    pub fn new(y: f64, d_a: bool, d_b: bool, z_a: bool, z_b: bool) -> Self {
        Self {
            y,
            d_a,
            d_b,
            z_a,
            z_b,
            weight: 1.0,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn assignment(&self) -> Assignment {
        Assignment::new(self.z_a as u8, self.z_b as u8)
    }

    pub fn takeup(&self) -> Takeup {
        Takeup::new(self.d_a as u8, self.d_b as u8)
    }
}

/// Validated observations plus the number of rows dropped for a missing outcome.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub observations: Vec<Observation>,
    pub dropped_missing_outcome: usize,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>) -> Self {
        Self {
            observations,
            dropped_missing_outcome: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.observations.iter().map(|o| o.weight).sum()
    }
}

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Observation};
use crate::{Error, Result};

/// Column names for each field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub y: String,
    pub d_a: String,
    pub d_b: String,
    pub z_a: String,
    pub z_b: String,
    /// Weight column; used when present in the header.
    pub weight: String,
    /// Fail instead of defaulting to unit weights when the weight column is absent.
    pub require_weight: bool,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            y: "y".into(),
            d_a: "d_a".into(),
            d_b: "d_b".into(),
            z_a: "z_a".into(),
            z_b: "z_b".into(),
            weight: "weight".into(),
            require_weight: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub columns: ColumnMap,
    /// Accept `true`/`yes` and `false`/`no` (any case) in binary columns.
    pub lenient_binary: bool,
}

const MISSING_MARKERS: [&str; 5] = ["", "na", "nan", ".", "null"];

struct Positions {
    y: usize,
    d_a: usize,
    d_b: usize,
    z_a: usize,
    z_b: usize,
    weight: Option<usize>,
}

fn locate(header: &[String], columns: &ColumnMap) -> Result<Positions> {
    let find = |name: &str| header.iter().position(|h| h.trim() == name);
    let need = |name: &str| {
        find(name).ok_or_else(|| Error::Schema {
            row: 0,
            column: name.to_owned(),
            message: "required column missing from header".into(),
        })
    };
    let weight = find(&columns.weight);
    if weight.is_none() && columns.require_weight {
        need(&columns.weight)?;
    }
    Ok(Positions {
        y: need(&columns.y)?,
        d_a: need(&columns.d_a)?,
        d_b: need(&columns.d_b)?,
        z_a: need(&columns.z_a)?,
        z_b: need(&columns.z_b)?,
        weight,
    })
}

fn parse_binary(raw: &str, lenient: bool, row: usize, column: &str) -> Result<bool> {
    let v = raw.trim();
    match v {
        "0" => return Ok(false),
        "1" => return Ok(true),
        _ => {}
    }
    if lenient {
        match v.to_ascii_lowercase().as_str() {
            "true" | "yes" => return Ok(true),
            "false" | "no" => return Ok(false),
            _ => {}
        }
    }
    Err(Error::Schema {
        row,
        column: column.to_owned(),
        message: format!("expected a binary value, found `{v}`"),
    })
}

fn parse_real(raw: &str, row: usize, column: &str) -> Result<f64> {
    let v = raw.trim();
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(Error::Schema {
            row,
            column: column.to_owned(),
            message: format!("expected a finite number, found `{v}`"),
        }),
    }
}

fn is_missing(raw: &str) -> bool {
    let v = raw.trim().to_ascii_lowercase();
    MISSING_MARKERS.contains(&v.as_str())
}

/// Validates raw string rows against `header`.
///
/// Rows are numbered from 1 (the first data row) in error messages. Rows with
/// a missing outcome are dropped and counted; every other defect is an error.
pub fn ingest_rows<I, R>(header: &[String], rows: I, options: &IngestOptions) -> Result<Dataset>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[String]>,
{
    let cols = &options.columns;
    let pos = locate(header, cols)?;
    let mut observations = Vec::new();
    let mut dropped = 0;
    for (i, row) in rows.into_iter().enumerate() {
        let row = row.as_ref();
        let n = i + 1;
        let field = |idx: usize, name: &str| -> Result<&str> {
            row.get(idx)
                .map(String::as_str)
                .ok_or_else(|| Error::Schema {
                    row: n,
                    column: name.to_owned(),
                    message: "row is too short".into(),
                })
        };
        let lenient = options.lenient_binary;
        let d_a = parse_binary(field(pos.d_a, &cols.d_a)?, lenient, n, &cols.d_a)?;
        let d_b = parse_binary(field(pos.d_b, &cols.d_b)?, lenient, n, &cols.d_b)?;
        let z_a = parse_binary(field(pos.z_a, &cols.z_a)?, lenient, n, &cols.z_a)?;
        let z_b = parse_binary(field(pos.z_b, &cols.z_b)?, lenient, n, &cols.z_b)?;
        let weight = match pos.weight {
            Some(idx) => {
                let w = parse_real(field(idx, &cols.weight)?, n, &cols.weight)?;
                if w < 0.0 {
                    return Err(Error::Schema {
                        row: n,
                        column: cols.weight.clone(),
                        message: format!("weight must be nonnegative, found {w}"),
                    });
                }
                w
            }
            None => 1.0,
        };
        let raw_y = field(pos.y, &cols.y)?;
        if is_missing(raw_y) {
            dropped += 1;
            continue;
        }
        let y = parse_real(raw_y, n, &cols.y)?;
        observations.push(Observation {
            y,
            d_a,
            d_b,
            z_a,
            z_b,
            weight,
        });
    }
    if observations.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(Dataset {
        observations,
        dropped_missing_outcome: dropped,
    })
}

/// Reads a headed CSV stream.
pub fn ingest_csv<R: Read>(reader: R, options: &IngestOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        rows.push(record.iter().map(str::to_owned).collect::<Vec<_>>());
    }
    ingest_rows(&header, rows, options)
}

pub fn ingest_path(path: impl AsRef<Path>, options: &IngestOptions) -> Result<Dataset> {
    ingest_csv(File::open(path)?, options)
}

//! Arguments shared by several subcommands.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use factorial_iv::bounds::Strengthenings;
use factorial_iv::data::{ColumnMap, IngestOptions};
use factorial_iv::identification::Restrictions;
use factorial_iv::interval::Interval;
use factorial_iv::oracle::Mode;

use crate::failure::Failure;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Options every subcommand accepts.
#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Directory for report and data files; reports go to stdout when omitted.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for random populations and sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Decimal places in text reports.
    #[arg(long, global = true, default_value_t = 2)]
    pub digits: usize,
}

/// Where the cell moments come from.
#[derive(Args, Clone, Debug)]
pub struct InputArgs {
    /// Unit-level CSV with columns y, d_a, d_b, z_a, z_b and an optional weight.
    #[arg(long, value_name = "CSV", required_unless_present_any = ["moments", "spec"], conflicts_with_all = ["moments", "spec"])]
    pub input: Option<PathBuf>,
    /// Published cell moments in JSON.
    #[arg(long, value_name = "JSON", conflicts_with = "spec")]
    pub moments: Option<PathBuf>,
    /// Population spec in JSON; the exact cell moments of the population are analysed.
    #[arg(long, value_name = "JSON")]
    pub spec: Option<PathBuf>,
    /// Number of pairs drawn for a population spec.
    #[arg(long, default_value_t = 200)]
    pub pairs: usize,
    /// Accept true/false and yes/no in binary columns.
    #[arg(long)]
    pub lenient: bool,
    #[command(flatten)]
    pub columns: ColumnArgs,
}

#[derive(Args, Clone, Debug)]
pub struct ColumnArgs {
    /// Outcome column.
    #[arg(long, value_name = "NAME", default_value = "y")]
    pub col_y: String,
    /// Takeup column of member A.
    #[arg(long, value_name = "NAME", default_value = "d_a")]
    pub col_d_a: String,
    /// Takeup column of member B.
    #[arg(long, value_name = "NAME", default_value = "d_b")]
    pub col_d_b: String,
    /// Instrument column of member A.
    #[arg(long, value_name = "NAME", default_value = "z_a")]
    pub col_z_a: String,
    /// Instrument column of member B.
    #[arg(long, value_name = "NAME", default_value = "z_b")]
    pub col_z_b: String,
    /// Weight column, used when present.
    #[arg(long, value_name = "NAME", default_value = "weight")]
    pub col_weight: String,
    /// Fail when the weight column is missing.
    #[arg(long)]
    pub require_weight: bool,
}

impl InputArgs {
    pub fn ingest_options(&self) -> IngestOptions {
        let c = &self.columns;
        IngestOptions {
            columns: ColumnMap {
                y: c.col_y.clone(),
                d_a: c.col_d_a.clone(),
                d_b: c.col_d_b.clone(),
                z_a: c.col_z_a.clone(),
                z_b: c.col_z_b.clone(),
                weight: c.col_weight.clone(),
                require_weight: c.require_weight,
            },
            lenient_binary: self.lenient,
        }
    }
}

#[derive(Args, Clone, Copy, Debug)]
pub struct RestrictionArgs {
    /// Rule out cross-defiers as member A.
    #[arg(long)]
    pub no_cross_defiers_a: bool,
    /// Rule out joint compliers as member B.
    #[arg(long)]
    pub no_joint_compliers_b: bool,
    /// Rule out joint compliers as member A.
    #[arg(long)]
    pub no_joint_compliers_a: bool,
    /// Rule out cross-defiers as member B.
    #[arg(long)]
    pub no_cross_defiers_b: bool,
    /// Rule out pairs of a never-taker and a joint complier.
    #[arg(long)]
    pub no_nj_pairs: bool,
}

impl RestrictionArgs {
    pub fn restrictions(&self) -> Restrictions {
        Restrictions {
            no_cross_defiers_a: self.no_cross_defiers_a,
            no_joint_compliers_a: self.no_joint_compliers_a,
            no_cross_defiers_b: self.no_cross_defiers_b,
            no_joint_compliers_b: self.no_joint_compliers_b,
            no_nj_pairs: self.no_nj_pairs,
        }
    }
}

/// The joint-complier share of member B: a value, or every value the data allow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShareArg {
    Free,
    Value(f64),
}

impl FromStr for ShareArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("free") {
            return Ok(ShareArg::Free);
        }
        match s.parse::<f64>() {
            Ok(v) if (0.0..=1.0).contains(&v) => Ok(ShareArg::Value(v)),
            _ => Err(format!("expected a share in [0, 1] or `free`, found `{s}`")),
        }
    }
}

#[derive(Args, Clone, Copy, Debug)]
pub struct OutcomeArgs {
    /// Upper end of the outcome range [0, K].
    #[arg(long, default_value_t = 100.0)]
    pub k: f64,
    /// Assume Y(11) >= Y(00) for every pair.
    #[arg(long)]
    pub y11_ge_y00: bool,
    /// Assume Y(11) >= max(Y(10), Y(01)) for every pair.
    #[arg(long)]
    pub y11_ge_max: bool,
    /// Keep component intervals unclipped (diagnostics).
    #[arg(long)]
    pub no_clip: bool,
    /// Joint-complier share of member B: a number in [0, 1] or `free`.
    #[arg(long, value_name = "SHARE|free", default_value = "free")]
    pub p_j_b: ShareArg,
}

impl OutcomeArgs {
    pub fn validate(&self) -> Result<(), Failure> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Failure::Usage(format!(
                "--k must be positive, found {}",
                self.k
            )));
        }
        Ok(())
    }

    pub fn strengthenings(&self) -> Strengthenings {
        Strengthenings {
            y11_ge_y00: self.y11_ge_y00,
            y11_ge_max: self.y11_ge_max,
        }
    }
}

/// Parses `lo,hi` into a nonnegative range.
pub fn parse_range(s: &str) -> Result<Interval, String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `lo,hi`, found `{s}`"))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad lower end `{lo}`"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad upper end `{hi}`"))?;
    if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
        return Err(format!("need 0 <= lo <= hi, found [{lo}, {hi}]"));
    }
    Ok(Interval::new(lo, hi))
}

/// Parses `name=value`.
pub fn parse_fixed(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected `name=value`, found `{s}`"))?;
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("bad value `{value}`"))?;
    Ok((name.trim().to_owned(), v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    OneSided,
    MonotoneA,
    MonotoneB,
    Unrestricted,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::OneSided => Mode::OneSided,
            ModeArg::MonotoneA => Mode::MonotoneAOneSidedB,
            ModeArg::MonotoneB => Mode::OneSidedAMonotoneB,
            ModeArg::Unrestricted => Mode::Unrestricted,
        }
    }
}

//! Samples unit records from a population spec.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use factorial_iv::data::Dataset;
use factorial_iv::oracle::{make_population, seeded_random_spec, RandomOptions};

use crate::args::{Common, ModeArg};
use crate::failure::Failure;
use crate::input::read_spec;
use crate::report::{Report, Table};

#[derive(Args, Clone, Debug)]
pub struct SimulateArgs {
    /// Population spec in JSON.
    #[arg(
        long,
        value_name = "JSON",
        required_unless_present = "random",
        conflicts_with = "random"
    )]
    pub spec: Option<PathBuf>,
    /// Draw a random spec from --seed instead of reading one.
    #[arg(long)]
    pub random: bool,
    /// Compliance structure of a random spec.
    #[arg(long, value_enum, default_value_t = ModeArg::OneSided)]
    pub mode: ModeArg,
    /// Pairs in the finite population.
    #[arg(long, default_value_t = 200)]
    pub pairs: usize,
    /// Units to sample.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
}

/// Returns the CSV text and, when `--out` is set, a report listing the files.
pub fn run(args: &SimulateArgs, common: &Common) -> Result<(String, Option<Report>)> {
    if args.pairs == 0 || args.n == 0 {
        return Err(Failure::Usage("--pairs and --n must be positive".into()).into());
    }
    let spec = match &args.spec {
        Some(path) => read_spec(path)?,
        None => seeded_random_spec(common.seed, args.mode.into(), &RandomOptions::default()),
    };
    let population = make_population(&spec, args.pairs)?;
    let dataset = population.sample_dataset(args.n, common.seed, &spec.assignment)?;
    let csv = to_csv(&dataset);
    let Some(dir) = &common.out else {
        return Ok((csv, None));
    };

    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let data_path = dir.join("simulated.csv");
    fs::write(&data_path, &csv).with_context(|| format!("writing {}", data_path.display()))?;
    let spec_path = dir.join("population_spec.json");
    fs::write(&spec_path, spec.to_json())
        .with_context(|| format!("writing {}", spec_path.display()))?;

    let mut report = Report::new("simulate");
    report.insert("seed", common.seed)?;
    report.insert("pairs", population.pairs.len())?;
    report.insert("units", dataset.len())?;
    let mut t = Table::new("simulate", "Simulated sample", &["quantity", "value"]);
    t.row(vec![
        "pairs in population".into(),
        population.pairs.len().to_string(),
    ]);
    t.row(vec!["sampled units".into(), dataset.len().to_string()]);
    t.row(vec!["seed".into(), common.seed.to_string()]);
    report.tables.push(t);
    report.files.extend([data_path, spec_path]);
    Ok((csv, Some(report)))
}

pub fn to_csv(dataset: &Dataset) -> String {
    let weighted = dataset.observations.iter().any(|o| o.weight != 1.0);
    let mut out = String::from(if weighted {
        "y,d_a,d_b,z_a,z_b,weight\n"
    } else {
        "y,d_a,d_b,z_a,z_b\n"
    });
    for o in &dataset.observations {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            o.y, o.d_a as u8, o.d_b as u8, o.z_a as u8, o.z_b as u8
        );
        if weighted {
            let _ = write!(out, ",{}", o.weight);
        }
        out.push('\n');
    }
    out
}

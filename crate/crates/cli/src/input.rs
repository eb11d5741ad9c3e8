//! Loading cell moments from unit records, published moments or a population spec.

use std::fs;

use anyhow::{Context, Result};
use factorial_iv::data::{
    build_cell_table, check_one_sided, ingest_path, CellTable, Dataset, MomentsInput,
};
use factorial_iv::estimands::saturated_iv;
use factorial_iv::oracle::{make_population, Population, PopulationSpec};

use crate::args::InputArgs;
use crate::failure::Failure;

pub struct Loaded {
    pub table: CellTable,
    /// Unit records, when the input was a CSV.
    pub dataset: Option<Dataset>,
    pub moments: Option<MomentsInput>,
    pub population: Option<(PopulationSpec, Population)>,
    /// Human-readable name of the input.
    pub source: String,
}

pub fn load(args: &InputArgs) -> Result<Loaded> {
    if let Some(path) = &args.input {
        let dataset = ingest_path(path, &args.ingest_options())
            .with_context(|| format!("reading {}", path.display()))?;
        let table = build_cell_table(&dataset)?;
        return Ok(Loaded {
            table,
            dataset: Some(dataset),
            moments: None,
            population: None,
            source: path.display().to_string(),
        });
    }
    if let Some(path) = &args.moments {
        let moments =
            MomentsInput::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        let table = moments.to_cell_table()?;
        return Ok(Loaded {
            table,
            dataset: None,
            moments: Some(moments),
            population: None,
            source: path.display().to_string(),
        });
    }
    if let Some(path) = &args.spec {
        let spec = read_spec(path)?;
        if args.pairs == 0 {
            return Err(Failure::Usage("--pairs must be positive".into()).into());
        }
        let population = make_population(&spec, args.pairs)?;
        let table = population.exact_cell_table(&spec.assignment)?;
        return Ok(Loaded {
            table,
            dataset: None,
            moments: None,
            population: Some((spec, population)),
            source: path.display().to_string(),
        });
    }
    Err(Failure::Usage("one of --input, --moments or --spec is required".into()).into())
}

pub fn read_spec(path: &std::path::Path) -> Result<PopulationSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(PopulationSpec::from_json_str(&text)?)
}

/// Aborts unless takeup is zero wherever the own instrument is off.
pub fn require_one_sided(table: &CellTable) -> Result<()> {
    let report = check_one_sided(table);
    if report.pass {
        return Ok(());
    }
    Err(Failure::Assumption(format!(
        "one-sided noncompliance is violated (treated mass without the own instrument: A {}, B {})",
        report.violation_mass_a, report.violation_mass_b
    ))
    .into())
}

/// Reference IV coefficients: published ones when the moments file carries
/// them, otherwise the closed form from the cell table.
pub struct IvChoice {
    pub beta: [f64; 4],
    pub source: &'static str,
}

pub fn iv_reference(loaded: &Loaded) -> Result<IvChoice> {
    if let Some(published) = loaded
        .moments
        .as_ref()
        .and_then(|m| m.published_iv.as_ref())
    {
        return Ok(IvChoice {
            beta: published.coef,
            source: "published coefficients",
        });
    }
    Ok(IvChoice {
        beta: saturated_iv(&loaded.table)?.beta,
        source: "saturated IV on the cell table",
    })
}

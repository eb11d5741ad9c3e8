//! Runs theorem checks on exact populations.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use factorial_iv::oracle::{
    make_population, seeded_random_spec, verify, PopulationSpec, RandomOptions, Theorem,
};
use factorial_iv::Error;
use serde::Serialize;

use crate::args::{Common, ModeArg};
use crate::failure::Failure;
use crate::input::read_spec;
use crate::report::{Report, Table};

#[derive(Args, Clone, Debug)]
pub struct VerifyArgs {
    /// Population spec in JSON.
    #[arg(
        long,
        value_name = "JSON",
        required_unless_present = "random",
        conflicts_with = "random"
    )]
    pub spec: Option<PathBuf>,
    /// Number of random specs to draw, seeded from --seed.
    #[arg(long, value_name = "N")]
    pub random: Option<usize>,
    /// Compliance structure of random specs.
    #[arg(long, value_enum, default_value_t = ModeArg::OneSided)]
    pub mode: ModeArg,
    /// Theorems to check (comma-separated); all applicable ones when omitted.
    #[arg(long, value_delimiter = ',', value_parser = parse_theorem)]
    pub theorem: Vec<Theorem>,
    /// Pairs in each finite population.
    #[arg(long, default_value_t = 150)]
    pub pairs: usize,
}

fn parse_theorem(s: &str) -> Result<Theorem, String> {
    s.parse::<Theorem>().map_err(|e| e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum Status {
    Pass,
    Fail,
    Error,
    Skipped,
}

#[derive(Debug, Serialize)]
struct CaseResult {
    case: usize,
    theorem: Theorem,
    status: Status,
    checks: usize,
    /// Failing check labels, or the error message.
    detail: Vec<String>,
}

#[derive(Debug, Default, Serialize)]
struct Tally {
    pass: usize,
    fail: usize,
    error: usize,
    skipped: usize,
}

pub fn run(args: &VerifyArgs, common: &Common) -> Result<Report> {
    if args.pairs == 0 {
        return Err(Failure::Usage("--pairs must be positive".into()).into());
    }
    let specs: Vec<PopulationSpec> = match (&args.spec, args.random) {
        (Some(path), _) => vec![read_spec(path)?],
        (None, Some(0)) => {
            return Err(Failure::Usage("--random needs at least one case".into()).into())
        }
        (None, Some(n)) => (0..n as u64)
            .map(|i| {
                seeded_random_spec(
                    common.seed.wrapping_add(i),
                    args.mode.into(),
                    &RandomOptions::default(),
                )
            })
            .collect(),
        (None, None) => {
            return Err(Failure::Usage("one of --spec or --random is required".into()).into())
        }
    };
    let explicit = !args.theorem.is_empty();
    let theorems: Vec<Theorem> = if explicit {
        args.theorem.clone()
    } else {
        Theorem::ALL.to_vec()
    };

    let mut results = Vec::new();
    for (case, spec) in specs.iter().enumerate() {
        let population = make_population(spec, args.pairs)?;
        for &theorem in &theorems {
            let result = match verify(&population, &spec.assignment, theorem) {
                Ok(r) => CaseResult {
                    case,
                    theorem,
                    status: if r.pass { Status::Pass } else { Status::Fail },
                    checks: r.checks.len(),
                    detail: r
                        .failures()
                        .map(|c| format!("{}: {} vs {}", c.label, c.lhs, c.rhs))
                        .collect(),
                },
                Err(Error::Precondition(m)) if !explicit => CaseResult {
                    case,
                    theorem,
                    status: Status::Skipped,
                    checks: 0,
                    detail: vec![m],
                },
                Err(e) => CaseResult {
                    case,
                    theorem,
                    status: Status::Error,
                    checks: 0,
                    detail: vec![e.to_string()],
                },
            };
            results.push(result);
        }
    }

    let mut tallies: BTreeMap<&'static str, Tally> = BTreeMap::new();
    for r in &results {
        let t = tallies.entry(r.theorem.name()).or_default();
        match r.status {
            Status::Pass => t.pass += 1,
            Status::Fail => t.fail += 1,
            Status::Error => t.error += 1,
            Status::Skipped => t.skipped += 1,
        }
    }

    let mut report = Report::new("verify");
    report.insert("cases", specs.len())?;
    report.insert("pairs", args.pairs)?;
    report.insert("seed", common.seed)?;
    let mut summary = Table::new(
        "summary",
        "Theorem checks",
        &["theorem", "pass", "fail", "error", "skipped"],
    );
    for t in theorems.iter() {
        if let Some(tally) = tallies.get(t.name()) {
            summary.row(vec![
                t.name().into(),
                tally.pass.to_string(),
                tally.fail.to_string(),
                tally.error.to_string(),
                tally.skipped.to_string(),
            ]);
        }
    }
    report.tables.push(summary);

    let bad: Vec<&CaseResult> = results
        .iter()
        .filter(|r| matches!(r.status, Status::Fail | Status::Error))
        .collect();
    if !bad.is_empty() {
        let mut t = Table::new(
            "failures",
            "Failed cases",
            &["case", "theorem", "status", "detail"],
        );
        for r in &bad {
            t.row(vec![
                r.case.to_string(),
                r.theorem.name().into(),
                format!("{:?}", r.status).to_lowercase(),
                r.detail.join("; "),
            ]);
        }
        report.tables.push(t);
        report.failure = Some(format!("{} theorem checks failed or errored", bad.len()));
    }
    report.insert("summary", &tallies)?;
    report.insert("results", &results)?;
    Ok(report)
}

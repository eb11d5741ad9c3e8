//! λ-multiplier models of the LAIE, box bounds, level-set grids and zero contours.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use factorial_iv::bounds::{bound_joint_cc, BoundInputs, IvReference};
use factorial_iv::identification::{identified_moments, type_shares, Restrictions, TypeShares};
use factorial_iv::interval::Interval;
use factorial_iv::sensitivity::{
    bound_over_box, bound_over_box_affine, contour_segment, direct_lambda_model,
    indirect_lambda_model, level_set_grid, write_grid_csv, write_grid_gnuplot, GridSpec,
    LevelSetGrid, DEFAULT_GRID_RESOLUTION,
};
use serde_json::json;

use crate::args::{
    parse_fixed, parse_range, Common, InputArgs, OutcomeArgs, RestrictionArgs, ShareArg,
};
use crate::failure::Failure;
use crate::input::{iv_reference, load, require_one_sided};
use crate::report::{fixed, Report, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Direct,
    Indirect,
    Both,
}

#[derive(Args, Clone, Debug)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub restrictions: RestrictionArgs,
    #[command(flatten)]
    pub outcome: OutcomeArgs,
    /// Which model to evaluate.
    #[arg(long, value_enum, default_value_t = ModelChoice::Both)]
    pub model: ModelChoice,
    /// Multiplier range `lo,hi` for box bounds and grid axes.
    #[arg(long, value_name = "LO,HI", value_parser = parse_range, default_value = "0,3")]
    pub lambda_box: Interval,
    /// Grid points per axis.
    #[arg(long, default_value_t = DEFAULT_GRID_RESOLUTION)]
    pub grid_res: usize,
    /// Hold an off-axis multiplier of the indirect model at a value, as `name=value`.
    #[arg(long, value_name = "NAME=VALUE", value_parser = parse_fixed)]
    pub fix: Vec<(String, f64)>,
}

pub fn run(args: &SensitivityArgs, common: &Common) -> Result<Report> {
    args.outcome.validate()?;
    if args.grid_res == 0 {
        return Err(Failure::Usage("--grid-res must be positive".into()).into());
    }
    let loaded = load(&args.input)?;
    require_one_sided(&loaded.table)?;
    let iv = iv_reference(&loaded)?;
    let reference = IvReference::from_beta(&iv.beta);
    let mut report = Report::new("sensitivity");
    report.insert("source", &loaded.source)?;
    report.insert(
        "iv_reference",
        json!({ "beta": iv.beta, "source": iv.source }),
    )?;
    report.insert("lambda_box", args.lambda_box)?;
    report.note(format!("reference effects from {}", iv.source));
    let grid = GridSpec::square(args.lambda_box, args.grid_res);
    let restrictions = args.restrictions.restrictions();

    if matches!(args.model, ModelChoice::Direct | ModelChoice::Both) {
        direct(args, common, &loaded.table, &reference, &grid, &mut report)?;
    }
    if matches!(args.model, ModelChoice::Indirect | ModelChoice::Both) {
        if restrictions.no_cross_defiers_a {
            let shares = type_shares(&loaded.table, &restrictions)?;
            indirect(args, common, &shares, &reference, &grid, &mut report)?;
        } else if args.model == ModelChoice::Indirect {
            return Err(Failure::Assumption(
                "the indirect model needs --no-cross-defiers-a".into(),
            )
            .into());
        } else {
            report.note("indirect model skipped: it needs --no-cross-defiers-a");
        }
    }
    if common.out.is_none() {
        report.note("pass --out to write the level-set grids");
    }
    Ok(report)
}

fn direct(
    args: &SensitivityArgs,
    common: &Common,
    table: &factorial_iv::data::CellTable,
    iv: &IvReference,
    grid: &GridSpec,
    report: &mut Report,
) -> Result<()> {
    let d = common.digits;
    // The joint effect bound does not rely on the type restrictions.
    let shares = type_shares(table, &Restrictions::default())?;
    let moments = identified_moments(table, &shares)?;
    let inputs = BoundInputs::new(&shares, &moments, args.outcome.k)?
        .with_strengthenings(args.outcome.strengthenings())
        .with_clipping(!args.outcome.no_clip);
    let joint = bound_joint_cc(&inputs)?;
    let (lower, upper) = direct_lambda_model(iv, &joint);
    let mut t = Table::new(
        "direct",
        "Direct model: joint-effect bound − λ_A·β_A − λ_B·β_B",
        &[
            "bound",
            "intercept",
            "slope λ_A",
            "slope λ_B",
            "box min",
            "box max",
            "zero contour",
        ],
    );
    let mut out = serde_json::Map::new();
    for (name, model) in [("lower", lower), ("upper", upper)] {
        let model = model.with_box(args.lambda_box)?;
        let (c, slopes) = model.coefficients()?;
        let boxed = bound_over_box(&model)?;
        let contour = contour_segment(&model, "lambda_a", "lambda_b", grid, &[], 0.0)?;
        t.row(vec![
            name.into(),
            fixed(c, d),
            fixed(slopes[0], d),
            fixed(slopes[1], d),
            fixed(boxed.lo, d),
            fixed(boxed.hi, d),
            describe_contour(&contour, d),
        ]);
        let level = level_set_grid(&model, "lambda_a", "lambda_b", grid, &[])?;
        write_grids(
            common,
            &format!("sensitivity_direct_{name}"),
            &level,
            report,
        )?;
        out.insert(
            name.into(),
            json!({ "model": model, "box": boxed, "zero_contour": contour, "levels": level.levels }),
        );
    }
    report.tables.push(t);
    report.insert("direct", out)?;
    Ok(())
}

fn indirect(
    args: &SensitivityArgs,
    common: &Common,
    shares: &TypeShares,
    iv: &IvReference,
    grid: &GridSpec,
    report: &mut Report,
) -> Result<()> {
    let d = common.digits;
    let share = match (args.outcome.p_j_b, shares.restrictions.no_joint_compliers_b) {
        (ShareArg::Value(v), true) if v != 0.0 => {
            return Err(
                Failure::Usage(format!("--p-j-b {v} contradicts --no-joint-compliers-b")).into(),
            )
        }
        (_, true) => Some(0.0),
        (ShareArg::Value(v), false) => Some(v),
        (ShareArg::Free, false) => None,
    };
    let model = indirect_lambda_model(shares, iv, share)?.with_box(args.lambda_box)?;

    let mut t = Table::new(
        "indirect",
        "Indirect model: intercept + Σ slope·λ, slopes affine in P(·,j)",
        &["term", "at P(·,j)=0", "per unit P(·,j)"],
    );
    t.row(vec![
        "intercept".into(),
        fixed(model.intercept.constant, d),
        fixed(model.intercept.per_share, d),
    ]);
    for term in &model.terms {
        t.row(vec![
            term.name.clone(),
            fixed(term.slope.constant, d),
            fixed(term.slope.per_share, d),
        ]);
    }
    let (lo, hi) = shares.joint_share_b_range();
    let share_range = match share {
        Some(p) => Interval::point(p),
        None => Interval::new(lo, hi),
    };
    let mut out = json!({ "model": model, "share_range": share_range });
    match bound_over_box_affine(&model, share_range) {
        Ok(b) => {
            t.row(vec![
                "box min".into(),
                fixed(b.lower.constant, d),
                fixed(b.lower.per_share, d),
            ]);
            t.row(vec![
                "box max".into(),
                fixed(b.upper.constant, d),
                fixed(b.upper.per_share, d),
            ]);
            out["box"] = serde_json::to_value(b)?;
        }
        Err(e) => report.note(format!("box bound is not affine over the share range: {e}")),
    }
    report.tables.push(t);

    let grid_share = share.unwrap_or(0.0);
    if share.is_none() {
        report.note(format!(
            "P(·,j) is free in [{}, {}]; the indirect grid is drawn at P(·,j) = 0",
            fixed(lo, d),
            fixed(hi, d)
        ));
    }
    let at = model.clone().with_share(grid_share);
    let boxed = bound_over_box(&at)?;
    let level = level_set_grid(&at, "lambda_1", "lambda_2", grid, &args.fix)?;
    let contour = contour_segment(&at, "lambda_1", "lambda_2", grid, &args.fix, 0.0)?;
    let mut c = Table::new(
        "indirect_grid",
        "Indirect model on the λ1 × λ2 grid",
        &["quantity", "value"],
    );
    c.row(vec!["P(·,j)".into(), fixed(grid_share, d)]);
    for (name, v) in &level.fixed {
        c.row(vec![format!("{name} (held)"), fixed(*v, d)]);
    }
    c.row(vec!["box min".into(), fixed(boxed.lo, d)]);
    c.row(vec!["box max".into(), fixed(boxed.hi, d)]);
    c.row(vec!["zero contour".into(), describe_contour(&contour, d)]);
    report.tables.push(c);
    write_grids(common, "sensitivity_indirect", &level, report)?;
    out["grid_share"] = grid_share.into();
    out["box_at_grid_share"] = serde_json::to_value(boxed)?;
    out["zero_contour"] = serde_json::to_value(&contour)?;
    out["fixed"] = serde_json::to_value(&level.fixed)?;
    out["levels"] = serde_json::to_value(&level.levels)?;
    report.insert("indirect", out)?;
    Ok(())
}

fn describe_contour(points: &[(f64, f64)], d: usize) -> String {
    match points {
        [] => "outside the box".into(),
        [p] => format!("touches ({}, {})", fixed(p.0, d), fixed(p.1, d)),
        [p, q, ..] => format!(
            "({}, {}) to ({}, {})",
            fixed(p.0, d),
            fixed(p.1, d),
            fixed(q.0, d),
            fixed(q.1, d)
        ),
    }
}

fn write_grids(
    common: &Common,
    stem: &str,
    grid: &LevelSetGrid,
    report: &mut Report,
) -> Result<()> {
    let Some(dir) = &common.out else {
        return Ok(());
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv: PathBuf = dir.join(format!("{stem}.csv"));
    write_grid_csv(grid, BufWriter::new(File::create(&csv)?))?;
    let dat: PathBuf = dir.join(format!("{stem}.dat"));
    write_grid_gnuplot(grid, BufWriter::new(File::create(&dat)?))?;
    report.files.extend([csv, dat]);
    Ok(())
}

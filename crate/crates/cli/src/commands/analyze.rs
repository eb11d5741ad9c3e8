//! Descriptive statistics, takeup tables with their type interpretations,
//! conditional means and the saturated IV regression.

use anyhow::Result;
use clap::Args;
use factorial_iv::data::{check_one_sided, Assignment, CellTable, Takeup};
use factorial_iv::estimands::{robust_se, saturated_iv, HcVariant};
use factorial_iv::identification::{
    compliance_diagnostics, identified_moments, type_shares, MomentId, Restrictions,
};
use serde_json::json;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::args::{Common, InputArgs, RestrictionArgs};
use crate::input::load;
use crate::report::{fixed, num, Report, Table};

#[derive(Args, Clone, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub restrictions: RestrictionArgs,
    /// Report descriptive statistics even when one-sided noncompliance fails.
    #[arg(long)]
    pub allow_violations: bool,
    /// Use HC0 instead of HC1 robust standard errors.
    #[arg(long)]
    pub hc0: bool,
}

/// Published coefficients more than this far from the closed form are flagged.
const PUBLISHED_GAP: f64 = 0.08;

const CELL_ORDER: [Assignment; 4] = [
    Assignment::new(1, 1),
    Assignment::new(0, 1),
    Assignment::new(1, 0),
    Assignment::new(0, 0),
];

const Z10: Assignment = Assignment::new(1, 0);
const Z01: Assignment = Assignment::new(0, 1);
const Z11: Assignment = Assignment::new(1, 1);

pub fn run(args: &AnalyzeArgs, common: &Common) -> Result<Report> {
    let d = common.digits;
    let loaded = load(&args.input)?;
    let table = &loaded.table;
    let mut report = Report::new("analyze");
    report.insert("source", &loaded.source)?;

    report.tables.push(descriptive(table, d)?);

    let one_sided = check_one_sided(table);
    report.insert("one_sided", one_sided)?;
    if !one_sided.pass {
        if !args.allow_violations {
            crate::input::require_one_sided(table)?;
        }
        report.note("one-sided noncompliance fails; type interpretations and identified moments are suppressed");
    }
    let restrictions = args.restrictions.restrictions();
    let interpret = one_sided.pass;

    report
        .tables
        .push(takeup_a(table, &restrictions, interpret, d)?);
    report
        .tables
        .push(takeup_b(table, &restrictions, interpret, d)?);
    report
        .tables
        .push(takeup_joint(table, &restrictions, interpret, d)?);

    if interpret {
        let diagnostics = compliance_diagnostics(table)?;
        report.note(format!("member A: {}", diagnostics.a.implication));
        report.note(format!("member B: {}", diagnostics.b.implication));
        report.insert("diagnostics", diagnostics)?;

        let shares = type_shares(table, &restrictions)?;
        report.insert("shares", shares)?;
        let mut t = Table::new("shares", "Type shares", &["share", "estimate"]);
        for (name, v) in [
            ("P(c,c)", shares.p_cc),
            ("P(c,n∪d)", shares.p_c_nd),
            ("P(n∪d,c)", shares.p_nd_c),
            ("P(n∪d,n∪d)", shares.p_nd_nd),
        ] {
            t.row(vec![name.into(), fixed(v, d)]);
        }
        for (side, m) in [("A", shares.marginals_a), ("B", shares.marginals_b)] {
            if let Some(m) = m {
                for (label, v) in [("s", m.s), ("j", m.j), ("n", m.n), ("d", m.d)] {
                    let name = if side == "A" {
                        format!("P({label},·)")
                    } else {
                        format!("P(·,{label})")
                    };
                    t.row(vec![name, fixed(v, d)]);
                }
            }
        }
        if shares.marginals_b.is_none() {
            let (lo, hi) = shares.joint_share_b_range();
            t.row(vec![
                "P(·,j) range".into(),
                format!("[{}, {}]", fixed(lo, d), fixed(hi, d)),
            ]);
        }
        report.tables.push(t);

        let moments = identified_moments(table, &shares)?;
        report.insert("moments", moments)?;
    }
    report.tables.push(conditional_means(table, interpret, d));

    iv_section(&mut report, &loaded, args.hc0, d)?;
    Ok(report)
}

fn descriptive(table: &CellTable, d: usize) -> Result<Table> {
    let mut t = Table::new(
        "descriptive",
        "Treatment and outcome means by instrument cell",
        &[
            "variable",
            "total",
            "Z_A=1,Z_B=1",
            "Z_A=0,Z_B=1",
            "Z_A=1,Z_B=0",
            "Z_A=0,Z_B=0",
        ],
    );
    let total = table.total_mass();
    let pooled = |f: &dyn Fn(Assignment) -> factorial_iv::Result<f64>| -> Option<f64> {
        let mut acc = 0.0;
        for z in Assignment::ALL {
            acc += table.mass(z) * f(z).ok()?;
        }
        (total > 0.0).then(|| acc / total)
    };
    type CellStat<'a> = &'a dyn Fn(Assignment) -> factorial_iv::Result<f64>;
    let rows: [(&str, CellStat); 3] = [
        ("D_A", &|z| table.dbar_a(z)),
        ("D_B", &|z| table.dbar_b(z)),
        ("Y", &|z| table.ybar(z)),
    ];
    for (name, f) in rows {
        let mut cells = vec![name.to_owned(), num(pooled(f), d)];
        cells.extend(CELL_ORDER.iter().map(|&z| num(f(z).ok(), d)));
        t.row(cells);
    }
    let mut n = vec!["N".to_owned(), format!("{total}")];
    n.extend(CELL_ORDER.iter().map(|&z| format!("{}", table.mass(z))));
    t.row(n);
    Ok(t)
}

fn takeup_a(table: &CellTable, r: &Restrictions, interpret: bool, d: usize) -> Result<Table> {
    let on = table.dbar_a(Z10)?;
    let both = table.dbar_a(Z11)?;
    let labels = if r.no_cross_defiers_a {
        ["P(s,·)", "P(c,·) = P(s,·) + P(j,·)", "P(j,·)", "P(n,·)"]
    } else if r.no_joint_compliers_a {
        ["P(s∪d,·)", "P(s,·)", "−P(d,·)", "P(n∪d,·)"]
    } else {
        [
            "P(s∪d,·)",
            "P(c,·) = P(s,·) + P(j,·)",
            "P(j,·) − P(d,·)",
            "P(n∪d,·)",
        ]
    };
    let rows = [
        ("P(D_A=1|Z_A=1,Z_B=0)", on),
        ("P(D_A=1|Z_A=1,Z_B=1)", both),
        ("P(D_A=1|Z_A=1,Z_B=1) − P(D_A=1|Z_A=1,Z_B=0)", both - on),
        ("P(D_A=0|Z_A=1,Z_B=1)", 1.0 - both),
    ];
    Ok(probability_table(
        "takeup_a",
        "Conditional probabilities of D_A",
        &rows,
        &labels,
        interpret,
        d,
    ))
}

fn takeup_b(table: &CellTable, r: &Restrictions, interpret: bool, d: usize) -> Result<Table> {
    let on = table.dbar_b(Z01)?;
    let both = table.dbar_b(Z11)?;
    let labels = if r.no_joint_compliers_b {
        ["P(·,s∪d)", "P(·,s)", "P(·,d)", "P(·,n)"]
    } else if r.no_cross_defiers_b {
        [
            "P(·,s)",
            "P(·,c) = P(·,s) + P(·,j)",
            "−P(·,j)",
            "P(·,n) + P(·,j)",
        ]
    } else {
        [
            "P(·,s∪d)",
            "P(·,c) = P(·,s) + P(·,j)",
            "P(·,d) − P(·,j)",
            "P(·,n) + P(·,j)",
        ]
    };
    let rows = [
        ("P(D_B=1|Z_A=0,Z_B=1)", on),
        ("P(D_B=1|Z_A=1,Z_B=1)", both),
        ("P(D_B=1|Z_A=0,Z_B=1) − P(D_B=1|Z_A=1,Z_B=1)", on - both),
        ("P(D_B=0|Z_A=0,Z_B=1)", 1.0 - on),
    ];
    Ok(probability_table(
        "takeup_b",
        "Conditional probabilities of D_B",
        &rows,
        &labels,
        interpret,
        d,
    ))
}

fn takeup_joint(table: &CellTable, r: &Restrictions, interpret: bool, d: usize) -> Result<Table> {
    let p = |da, db| table.prob(Z11, Takeup::new(da, db));
    let labels = if r.no_cross_defiers_a {
        ["P(c,c)", "P(n,c)", "P(c,n∪d)", "P(n,n∪d)"]
    } else {
        ["P(c,c)", "P(n∪d,c)", "P(c,n∪d)", "P(n∪d,n∪d)"]
    };
    let rows = [
        ("P(D_A=1,D_B=1|Z_A=1,Z_B=1)", p(1, 1)?),
        ("P(D_A=0,D_B=1|Z_A=1,Z_B=1)", p(0, 1)?),
        ("P(D_A=1,D_B=0|Z_A=1,Z_B=1)", p(1, 0)?),
        ("P(D_A=0,D_B=0|Z_A=1,Z_B=1)", p(0, 0)?),
    ];
    Ok(probability_table(
        "takeup_joint",
        "Joint takeup probabilities at Z_A=1, Z_B=1",
        &rows,
        &labels,
        interpret,
        d,
    ))
}

fn probability_table(
    name: &str,
    title: &str,
    rows: &[(&str, f64)],
    labels: &[&str],
    interpret: bool,
    d: usize,
) -> Table {
    let mut t = Table::new(
        name,
        title,
        &["conditional probability", "estimate", "interpretation"],
    );
    for ((label, v), meaning) in rows.iter().zip(labels) {
        let meaning = if interpret {
            (*meaning).to_owned()
        } else {
            "n/a".to_owned()
        };
        t.row(vec![(*label).to_owned(), fixed(*v, d), meaning]);
    }
    t
}

fn conditional_means(table: &CellTable, interpret: bool, d: usize) -> Table {
    let mut t = Table::new(
        "conditional_means",
        "Conditional means of Y",
        &["conditional mean", "estimate", "interpretation"],
    );
    for id in MomentId::ALL {
        let Some((z, k)) = id.cell() else { continue };
        let label = format!(
            "E[Y|D_A={},D_B={},Z_A={},Z_B={}]",
            k.d_a, k.d_b, z.z_a, z.z_b
        );
        let meaning = if interpret {
            id.label().to_owned()
        } else {
            "n/a".to_owned()
        };
        t.row(vec![label, num(table.mean(z, k), d), meaning]);
    }
    t
}

const COEF_NAMES: [&str; 4] = ["Constant", "D_A", "D_B", "D_A*D_B"];

fn iv_section(
    report: &mut Report,
    loaded: &crate::input::Loaded,
    hc0: bool,
    d: usize,
) -> Result<()> {
    let iv = saturated_iv(&loaded.table)?;
    let published = loaded.moments.as_ref().and_then(|m| m.published_iv.clone());
    let robust = match &loaded.dataset {
        Some(ds) => Some(robust_se(
            ds,
            &iv.beta,
            if hc0 { HcVariant::Hc0 } else { HcVariant::Hc1 },
        )?),
        None => None,
    };
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut header = vec!["variable", "coefficient", "standard error", "p-value"];
    if published.is_some() {
        header.push("published");
    }
    let mut t = Table::new("iv", "IV regression of Y on D_A, D_B and D_A*D_B", &header);
    let mut p_values = Vec::new();
    for (i, name) in COEF_NAMES.iter().enumerate() {
        let se = robust.as_ref().map(|r| r.se[i]);
        let p = se
            .filter(|s| *s > 0.0)
            .map(|s| 2.0 * (1.0 - normal.cdf((iv.beta[i] / s).abs())));
        p_values.push(p);
        let mut row = vec![
            (*name).to_owned(),
            fixed(iv.beta[i], d),
            num(se, d),
            num(p, d),
        ];
        if let Some(pubd) = &published {
            row.push(fixed(pubd.coef[i], d));
        }
        t.row(row);
    }
    report.tables.push(t);

    let mut w = Table::new("wald", "Split-sample Wald ratios", &["ratio", "estimate"]);
    for (name, v) in [
        ("δ_A, Z_B=0", iv.delta_a0),
        ("δ_A, Z_B=1", iv.delta_a1),
        ("δ_B, Z_A=0", iv.delta_b0),
        ("δ_B, Z_A=1", iv.delta_b1),
    ] {
        w.row(vec![name.into(), num(v, d)]);
    }
    report.tables.push(w);

    if robust.is_none() {
        report.note("standard errors need unit-level data; coefficients are the closed form from cell moments");
    }
    if let Some(pubd) = &published {
        let gap = pubd
            .coef
            .iter()
            .zip(&iv.beta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        report.insert("published_gap", gap)?;
        if gap > PUBLISHED_GAP {
            report.note(format!(
                "closed-form coefficients differ from the published ones by up to {gap:.3}"
            ));
        } else {
            report.note(format!(
                "closed-form coefficients agree with the published ones within {PUBLISHED_GAP}"
            ));
        }
    }
    report.insert(
        "iv",
        json!({
            "estimates": iv,
            "robust": robust,
            "p_values": p_values,
            "published": published,
        }),
    )?;
    Ok(())
}

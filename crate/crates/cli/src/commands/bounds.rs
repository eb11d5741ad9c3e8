//! Bounds on the joint effect and the LAIE of complier pairs, with their
//! assumption tags.

use anyhow::Result;
use clap::Args;
use factorial_iv::bounds::{
    bound_aux_cross_defier_b, bound_aux_joint_complier_a, bound_joint_cc, bound_laie_direct,
    bound_laie_indirect, bound_y00_cc, BoundInputs, IvReference, ShareValue,
};
use factorial_iv::identification::{identified_moments, type_shares, TypeShares};
use factorial_iv::interval::AssumedInterval;
use factorial_iv::oracle::{
    true_effect, true_mean, verify, EffectKind, PairSet, Population, PotentialOutcome, Theorem,
    TypeLabel,
};
use serde_json::{json, Value};

use crate::args::{Common, InputArgs, OutcomeArgs, RestrictionArgs, ShareArg};
use crate::failure::Failure;
use crate::input::{iv_reference, load, require_one_sided};
use crate::report::{fixed, Report, Table};

#[derive(Args, Clone, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub restrictions: RestrictionArgs,
    #[command(flatten)]
    pub outcome: OutcomeArgs,
}

/// Which population mean or effect an interval targets, for truth stamps.
#[derive(Clone, Copy)]
enum Target {
    Mean(PairSetName, PotentialOutcome),
    Effect(PairSetName, EffectKind),
}

#[derive(Clone, Copy)]
enum PairSetName {
    ComplierPairs,
    JointComplierA,
    CrossDefierB,
}

impl PairSetName {
    fn set(self) -> PairSet {
        let c = [TypeLabel::SelfComplier, TypeLabel::JointComplier];
        match self {
            PairSetName::ComplierPairs => PairSet::both(&c, &c),
            PairSetName::JointComplierA => PairSet::a_in(&[TypeLabel::JointComplier]),
            PairSetName::CrossDefierB => PairSet::b_in(&[TypeLabel::CrossDefier]),
        }
    }
}

impl Target {
    fn truth(self, pop: &Population) -> Option<f64> {
        match self {
            Target::Mean(s, which) => true_mean(pop, &s.set(), which).ok(),
            Target::Effect(s, kind) => true_effect(pop, &s.set(), kind).ok(),
        }
    }
}

struct Entry {
    key: &'static str,
    label: &'static str,
    interval: AssumedInterval,
    target: Option<Target>,
}

pub fn run(args: &BoundsArgs, common: &Common) -> Result<Report> {
    args.outcome.validate()?;
    let d = common.digits;
    let loaded = load(&args.input)?;
    require_one_sided(&loaded.table)?;
    let restrictions = args.restrictions.restrictions();
    let shares = type_shares(&loaded.table, &restrictions)?;
    let moments = identified_moments(&loaded.table, &shares)?;
    let inputs = BoundInputs::new(&shares, &moments, args.outcome.k)?
        .with_strengthenings(args.outcome.strengthenings())
        .with_clipping(!args.outcome.no_clip);

    let mut report = Report::new("bounds");
    report.insert("source", &loaded.source)?;
    report.insert("restrictions", restrictions)?;
    report.insert("k", args.outcome.k)?;

    use PairSetName::*;
    let mut entries = vec![
        Entry {
            key: "y00_cc",
            label: "E[Y(00)|(c,c)]",
            interval: bound_y00_cc(&inputs)?,
            target: Some(Target::Mean(ComplierPairs, PotentialOutcome::Y00)),
        },
        Entry {
            key: "joint_cc",
            label: "joint effect (c,c)",
            interval: bound_joint_cc(&inputs)?,
            target: Some(Target::Effect(ComplierPairs, EffectKind::Joint)),
        },
    ];

    let direct_ok = restrictions.no_cross_defiers_a && restrictions.no_joint_compliers_b;
    let mut direct = None;
    if direct_ok {
        let b = bound_laie_direct(&inputs)?;
        entries.push(Entry {
            key: "y10_cc",
            label: "E[Y(10)|(c,c)]",
            interval: b.y10.clone(),
            target: Some(Target::Mean(ComplierPairs, PotentialOutcome::Y10)),
        });
        entries.push(Entry {
            key: "y01_cc",
            label: "E[Y(01)|(c,c)]",
            interval: b.y01.clone(),
            target: Some(Target::Mean(ComplierPairs, PotentialOutcome::Y01)),
        });
        entries.push(Entry {
            key: "laie_direct",
            label: "LAIE (c,c), direct",
            interval: b.laie.clone(),
            target: Some(Target::Effect(ComplierPairs, EffectKind::Laie)),
        });
        direct = Some(b.laie.clone());
        report.insert("direct", &b)?;

        match bound_aux_joint_complier_a(&inputs) {
            Ok(a) => {
                entries.push(Entry {
                    key: "ate_a_joint_complier",
                    label: "ATE_A|notB (j,·)",
                    interval: a.effect.clone(),
                    target: Some(Target::Effect(JointComplierA, EffectKind::AGivenNotB)),
                });
                report.insert("aux_joint_complier_a", &a)?;
            }
            Err(e) => report.note(format!(
                "bounds for joint-complier A members unavailable: {e}"
            )),
        }
        match bound_aux_cross_defier_b(&inputs) {
            Ok(b) => {
                entries.push(Entry {
                    key: "ate_b_cross_defier",
                    label: "ATE_B|notA (·,d)",
                    interval: b.effect.clone(),
                    target: Some(Target::Effect(CrossDefierB, EffectKind::BGivenNotA)),
                });
                report.insert("aux_cross_defier_b", &b)?;
            }
            Err(e) => report.note(format!(
                "bounds for cross-defier B members unavailable: {e}"
            )),
        }
    } else {
        report.note("direct LAIE bounds need --no-cross-defiers-a and --no-joint-compliers-b");
    }

    let mut indirect = None;
    if restrictions.no_cross_defiers_a {
        let iv = iv_reference(&loaded)?;
        report.note(format!("indirect bound uses {}", iv.source));
        let share = share_value(args.outcome.p_j_b, &shares)?;
        let b = bound_laie_indirect(&inputs, &IvReference::from_beta(&iv.beta), share)?;
        entries.push(Entry {
            key: "laie_indirect",
            label: "LAIE (c,c), indirect",
            interval: b.laie.clone(),
            target: Some(Target::Effect(ComplierPairs, EffectKind::Laie)),
        });
        indirect = Some(b.laie.clone());
        report.insert("indirect", &b)?;
        report.insert(
            "iv_reference",
            json!({ "beta": iv.beta, "source": iv.source }),
        )?;
    } else {
        report.note("the indirect LAIE bound needs --no-cross-defiers-a");
    }

    if let (Some(a), Some(b)) = (&direct, &indirect) {
        match a.intersect(b) {
            Ok(both) => entries.push(Entry {
                key: "laie_intersection",
                label: "LAIE (c,c), direct ∩ indirect",
                interval: both,
                target: Some(Target::Effect(ComplierPairs, EffectKind::Laie)),
            }),
            Err(e) => report.note(format!("direct and indirect LAIE bounds do not meet: {e}")),
        }
    }

    let population = loaded.population.as_ref().map(|(_, p)| p);
    let mut header = vec!["quantity", "lower", "upper", "assumptions", "clipped"];
    if population.is_some() {
        header.extend(["truth", "inside"]);
    }
    let mut table = Table::new("bounds", "Bounds for complier pairs", &header);
    let mut intervals = serde_json::Map::new();
    for e in &entries {
        let tags: Vec<String> = e
            .interval
            .assumptions
            .iter()
            .map(|a| a.to_string())
            .collect();
        let mut row = vec![
            e.label.to_owned(),
            fixed(e.interval.lo, d),
            fixed(e.interval.hi, d),
            tags.join(" "),
            if e.interval.clipped {
                "yes".into()
            } else {
                "no".into()
            },
        ];
        let mut value = serde_json::to_value(&e.interval)?;
        if let (Some(pop), Some(target)) = (population, e.target) {
            let truth = target.truth(pop);
            row.push(crate::report::num(truth, d));
            row.push(match truth {
                Some(t)
                    if e.interval
                        .interval()
                        .contains_within(t, 1e-9 * t.abs().max(1.0)) =>
                {
                    "yes".into()
                }
                Some(_) => "no".into(),
                None => "n/a".into(),
            });
            value["truth"] = truth.map_or(Value::Null, Value::from);
        }
        intervals.insert(e.key.to_owned(), value);
        table.row(row);
    }
    report.tables.push(table);
    report.insert("intervals", intervals)?;

    if let Some((spec, pop)) = &loaded.population {
        let stamp = verify(pop, &spec.assignment, Theorem::BoundsContain)?;
        let failures: Vec<String> = stamp.failures().map(|c| c.label.clone()).collect();
        report.note(format!(
            "truth containment over {} checks: {}",
            stamp.checks.len(),
            if stamp.pass { "pass" } else { "FAIL" }
        ));
        report.insert(
            "truth_check",
            json!({ "pass": stamp.pass, "checks": stamp.checks.len(), "failures": failures }),
        )?;
        if !stamp.pass {
            report.failure = Some(format!("true values fall outside {}", failures.join(", ")));
        }
    }
    Ok(report)
}

fn share_value(arg: ShareArg, shares: &TypeShares) -> Result<ShareValue> {
    if shares.restrictions.no_joint_compliers_b {
        return match arg {
            ShareArg::Value(v) if v != 0.0 => Err(Failure::Usage(format!(
                "--p-j-b {v} contradicts --no-joint-compliers-b"
            ))
            .into()),
            _ => Ok(ShareValue::Fixed(0.0)),
        };
    }
    match arg {
        ShareArg::Value(v) => {
            shares.marginals_b_given_joint(v)?;
            Ok(ShareValue::Fixed(v))
        }
        ShareArg::Free => {
            let (lo, hi) = shares.joint_share_b_range();
            Ok(ShareValue::Range { lo, hi })
        }
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::compliance::{ComplianceMap, PairSet, TypeLabel};
use super::population::{AssignmentProbs, Population, PotentialOutcome};
use super::truth::{effect_mass, share, EffectKind};
use crate::bounds::{
    bound_aux_cross_defier_b, bound_aux_joint_complier_a, bound_joint_cc, bound_laie_direct,
    bound_laie_indirect, bound_y00_cc, BoundInputs, IvReference, ShareValue, Strengthenings,
};
use crate::data::{Assignment, CellTable, Takeup};
use crate::estimands::{saturated_iv, wald, Side};
use crate::identification::{identified_moments, type_shares, MomentId, Restrictions, TypeShares};
use crate::interval::Interval;
use crate::sensitivity::{direct_lambda_model, indirect_lambda_model};
use crate::{Error, Result, FIRST_STAGE_TOL};

const SELF: &[TypeLabel] = &[TypeLabel::SelfComplier];
const JOINT: &[TypeLabel] = &[TypeLabel::JointComplier];
const NEVER: &[TypeLabel] = &[TypeLabel::NeverTaker];
const CROSS: &[TypeLabel] = &[TypeLabel::CrossDefier];
const COMPLIER: &[TypeLabel] = &[TypeLabel::SelfComplier, TypeLabel::JointComplier];
const SELF_CROSS: &[TypeLabel] = &[TypeLabel::SelfComplier, TypeLabel::CrossDefier];
const NEVER_CROSS: &[TypeLabel] = &[TypeLabel::NeverTaker, TypeLabel::CrossDefier];
const NEVER_JOINT: &[TypeLabel] = &[TypeLabel::NeverTaker, TypeLabel::JointComplier];

/// Relative tolerance of equality checks.
pub const EQUALITY_TOL: f64 = 1e-9;
/// Relative tolerance of the brute-force moment and decomposition identities.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Relative slack allowed when checking that an interval contains a value.
pub const CONTAINMENT_SLACK: f64 = 1e-9;

/// Identity or bound to check against ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Theorem {
    /// Wald ratio with the partner instrument off equals the average effect on own-instrument compliers.
    #[serde(rename = "T1")]
    T1,
    /// Wald ratio with the partner instrument on, as effects on compliers, joint compliers and cross-defiers.
    #[serde(rename = "T2_EQ5")]
    T2Eq5,
    /// The same ratio as a five-term average over pair profiles.
    #[serde(rename = "T2_EQ6")]
    T2Eq6,
    /// The five-term form without cross-defiers or never-taker/joint-complier pairs.
    #[serde(rename = "COR2")]
    Cor2,
    /// Saturated IV coefficients, including the interaction coefficient.
    #[serde(rename = "T3")]
    T3,
    /// Intention-to-treat and first-stage contrasts with arbitrary compliance maps.
    #[serde(rename = "B1")]
    B1,
    /// Wald ratio with the partner instrument off when A may have extended monotone types.
    #[serde(rename = "B2")]
    B2,
    /// Wald ratio with the partner instrument on when B may have extended monotone types.
    #[serde(rename = "B3")]
    B3,
    /// Takeup rates as type shares, and shares resolved under restrictions.
    #[serde(rename = "L1")]
    L1,
    /// Additive decomposition of effects over partitions of pair sets.
    #[serde(rename = "A1")]
    A1,
    /// Point-identified conditional means.
    #[serde(rename = "A2")]
    A2,
    /// Every bound contains its true target.
    #[serde(rename = "BOUNDS_CONTAIN")]
    BoundsContain,
}

impl Theorem {
    pub const ALL: [Theorem; 12] = [
        Theorem::T1,
        Theorem::T2Eq5,
        Theorem::T2Eq6,
        Theorem::Cor2,
        Theorem::T3,
        Theorem::B1,
        Theorem::B2,
        Theorem::B3,
        Theorem::L1,
        Theorem::A1,
        Theorem::A2,
        Theorem::BoundsContain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::T1 => "T1",
            Theorem::T2Eq5 => "T2_EQ5",
            Theorem::T2Eq6 => "T2_EQ6",
            Theorem::Cor2 => "COR2",
            Theorem::T3 => "T3",
            Theorem::B1 => "B1",
            Theorem::B2 => "B2",
            Theorem::B3 => "B3",
            Theorem::L1 => "L1",
            Theorem::A1 => "A1",
            Theorem::A2 => "A2",
            Theorem::BoundsContain => "BOUNDS_CONTAIN",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theorem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_uppercase().replace('-', "_");
        Theorem::ALL
            .into_iter()
            .find(|t| t.name() == wanted)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown theorem `{s}`")))
    }
}

/// One comparison between an estimand and its ground-truth counterpart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
    pub pass: bool,
    /// Set for containment checks: `lhs` is the truth and `rhs` its projection onto the interval.
    pub bounds: Option<Interval>,
}

impl Check {
    pub fn equal(label: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let diff = lhs - rhs;
        Self {
            label: label.into(),
            lhs,
            rhs,
            diff,
            pass: diff.abs() <= tol * lhs.abs().max(1.0),
            bounds: None,
        }
    }

    pub fn contains(label: impl Into<String>, bounds: Interval, truth: f64) -> Self {
        let projected = truth.clamp(bounds.lo, bounds.hi);
        let slack = CONTAINMENT_SLACK * truth.abs().max(1.0);
        Self {
            label: label.into(),
            lhs: truth,
            rhs: projected,
            diff: truth - projected,
            pass: bounds.contains_within(truth, slack),
            bounds: Some(bounds),
        }
    }

    fn failed(label: impl Into<String>, why: &Error) -> Self {
        Self {
            label: format!("{}: {why}", label.into()),
            lhs: f64::NAN,
            rhs: f64::NAN,
            diff: f64::NAN,
            pass: false,
            bounds: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub theorem: Theorem,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    fn new(theorem: Theorem, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self {
            theorem,
            pass,
            checks,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Ground-truth quantities for one population.
struct Truth<'a> {
    pop: &'a Population,
}

impl Truth<'_> {
    fn p(&self, set: &PairSet) -> f64 {
        share(self.pop, set)
    }

    fn em(&self, set: &PairSet, kind: EffectKind) -> f64 {
        effect_mass(self.pop, set, kind)
    }

    /// Average effect over `set`, or an error naming the set when it is empty.
    fn ate(&self, set: &PairSet, kind: EffectKind, name: &str) -> Result<f64> {
        let mass = self.p(set);
        if mass > 0.0 {
            Ok(self.em(set, kind) / mass)
        } else {
            Err(Error::Precondition(format!(
                "{name} has zero mass in the population"
            )))
        }
    }

    fn mean(&self, set: &PairSet, which: PotentialOutcome) -> Option<f64> {
        let mass = self.p(set);
        (mass > 0.0).then(|| super::truth::outcome_mass(self.pop, set, which) / mass)
    }

    fn any(&self, set: &PairSet) -> bool {
        self.pop
            .pairs
            .iter()
            .any(|p| p.weight > 0.0 && set.contains(p.map_a, p.map_b))
    }
}

fn a_in(labels: &[TypeLabel]) -> PairSet {
    PairSet::a_in(labels)
}

fn b_in(labels: &[TypeLabel]) -> PairSet {
    PairSet::b_in(labels)
}

fn both(a: &[TypeLabel], b: &[TypeLabel]) -> PairSet {
    PairSet::both(a, b)
}

fn require(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(what.to_owned()))
    }
}

fn require_pairs(
    pop: &Population,
    what: &str,
    pred: impl Fn(ComplianceMap, ComplianceMap) -> bool,
) -> Result<()> {
    require(pop.pairs.iter().all(|p| pred(p.map_a, p.map_b)), what)
}

fn require_one_sided(pop: &Population) -> Result<()> {
    require_pairs(
        pop,
        "needs one-sided compliance maps for both members",
        |a, b| a.is_one_sided() && b.is_one_sided(),
    )
}

/// Checks `theorem` on the exact cell table of `pop` under `assignment`.
pub fn verify(
    pop: &Population,
    assignment: &AssignmentProbs,
    theorem: Theorem,
) -> Result<VerifyReport> {
    if pop.pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let table = pop.exact_cell_table(assignment)?;
    let truth = Truth { pop };
    let checks = match theorem {
        Theorem::T1 => {
            require_one_sided(pop)?;
            verify_t1(&table, &truth)?
        }
        Theorem::T2Eq5 => {
            require_one_sided(pop)?;
            verify_t2_eq5(&table, &truth)?
        }
        Theorem::T2Eq6 => {
            require_one_sided(pop)?;
            verify_t2_eq6(&table, &truth)?
        }
        Theorem::Cor2 => {
            require_one_sided(pop)?;
            verify_cor2(&table, &truth)?
        }
        Theorem::T3 => {
            require_one_sided(pop)?;
            verify_t3(&table, &truth)?
        }
        Theorem::B1 => verify_b1(&table, &truth)?,
        Theorem::B2 => {
            require_pairs(
                pop,
                "needs monotone maps for A and one-sided maps for B",
                |a, b| a.is_monotone() && b.is_one_sided(),
            )?;
            verify_b2(&table, &truth)?
        }
        Theorem::B3 => {
            require_pairs(
                pop,
                "needs one-sided maps for A and monotone maps for B",
                |a, b| a.is_one_sided() && b.is_monotone(),
            )?;
            verify_b3(&table, &truth)?
        }
        Theorem::L1 => {
            require_one_sided(pop)?;
            verify_l1(&table, &truth)?
        }
        Theorem::A1 => verify_a1(&truth)?,
        Theorem::A2 => {
            require_one_sided(pop)?;
            verify_a2(&table, &truth)?
        }
        Theorem::BoundsContain => {
            require_one_sided(pop)?;
            verify_bounds(&table, &truth)?
        }
    };
    Ok(VerifyReport::new(theorem, checks))
}

fn verify_t1(table: &CellTable, t: &Truth) -> Result<Vec<Check>> {
    let rhs_a = t.ate(&a_in(SELF_CROSS), EffectKind::AGivenNotB, "(s∪d,·)")?;
    let rhs_b = t.ate(&b_in(SELF_CROSS), EffectKind::BGivenNotA, "(·,s∪d)")?;
    Ok(vec![
        Check::equal(
            "Wald of A with Z_B=0 vs ATE_A|notB(s∪d,·)",
            wald(table, Side::A, 0)?,
            rhs_a,
            EQUALITY_TOL,
        ),
        Check::equal(
            "Wald of B with Z_A=0 vs ATE_B|notA(·,s∪d)",
            wald(table, Side::B, 0)?,
            rhs_b,
            EQUALITY_TOL,
        ),
    ])
}

fn verify_t2_eq5(table: &CellTable, t: &Truth) -> Result<Vec<Check>> {
    use EffectKind::*;
    let p_c_a = t.p(&a_in(COMPLIER));
    let p_c_b = t.p(&b_in(COMPLIER));
    require(p_c_a > 0.0 && p_c_b > 0.0, "needs compliers on both sides")?;
    let cc = both(COMPLIER, COMPLIER);
    let rhs_a = (t.em(&a_in(COMPLIER), AGivenNotB) + t.em(&b_in(JOINT), BGivenNotA)
        - t.em(&b_in(CROSS), BGivenNotA)
        + t.em(&cc, Laie))
        / p_c_a;
    let rhs_b = (t.em(&b_in(COMPLIER), BGivenNotA) + t.em(&a_in(JOINT), AGivenNotB)
        - t.em(&a_in(CROSS), AGivenNotB)
        + t.em(&cc, Laie))
        / p_c_b;
    Ok(vec![
        Check::equal(
            "Wald of A with Z_B=1 vs complier/joint/cross-defier decomposition",
            wald(table, Side::A, 1)?,
            rhs_a,
            EQUALITY_TOL,
        ),
        Check::equal(
            "Wald of B with Z_A=1 vs complier/joint/cross-defier decomposition",
            wald(table, Side::B, 1)?,
            rhs_b,
            EQUALITY_TOL,
        ),
    ])
}

/// Five-term numerator of the Wald ratio of A with the partner instrument on.
fn five_term_numerator_a(t: &Truth) -> f64 {
    use EffectKind::*;
    t.em(&both(COMPLIER, JOINT), Joint)
        + t.em(&both(COMPLIER, SELF), AGivenB)
        + t.em(&both(COMPLIER, NEVER_CROSS), AGivenNotB)
        - t.em(&b_in(CROSS), BGivenNotA)
        + t.em(&both(NEVER_CROSS, JOINT), BGivenNotA)
}

fn five_term_numerator_b(t: &Truth) -> f64 {
    use EffectKind::*;
    t.em(&both(JOINT, COMPLIER), Joint)
        + t.em(&both(SELF, COMPLIER), BGivenA)
        + t.em(&both(NEVER_CROSS, COMPLIER), BGivenNotA)
        - t.em(&a_in(CROSS), AGivenNotB)
        + t.em(&both(JOINT, NEVER_CROSS), AGivenNotB)
}

fn verify_t2_eq6(table: &CellTable, t: &Truth) -> Result<Vec<Check>> {
    let p_c_a = t.p(&a_in(COMPLIER));
    let p_c_b = t.p(&b_in(COMPLIER));
    require(p_c_a > 0.0 && p_c_b > 0.0, "needs compliers on both sides")?;
    let eq5 = verify_t2_eq5(table, t)?;
    let rhs_a = five_term_numerator_a(t) / p_c_a;
    let rhs_b = five_term_numerator_b(t) / p_c_b;
    Ok(vec![
        Check::equal(
            "Wald of A with Z_B=1 vs five-term profile average",
            wald(table, Side::A, 1)?,
            rhs_a,
            EQUALITY_TOL,
        ),
        Check::equal(
            "Wald of B with Z_A=1 vs five-term profile average",
            wald(table, Side::B, 1)?,
            rhs_b,
            EQUALITY_TOL,
        ),
        Check::equal(
            "four-term and five-term forms agree for A",
            eq5[0].rhs,
            rhs_a,
            EQUALITY_TOL,
        ),
        Check::equal(
            "four-term and five-term forms agree for B",
            eq5[1].rhs,
            rhs_b,
            EQUALITY_TOL,
        ),
    ])
}

fn verify_cor2(table: &CellTable, t: &Truth) -> Result<Vec<Check>> {
    use EffectKind::*;
    require(
        !t.any(&a_in(CROSS)) && !t.any(&b_in(CROSS)),
        "needs a population without cross-defiers",
    )?;
    require(
        !t.any(&both(NEVER, JOINT)) && !t.any(&both(JOINT, NEVER)),
        "needs a population without never-taker/joint-complier pairs",
    )?;
    let p_c_a = t.p(&a_in(COMPLIER));
    let p_c_b = t.p(&b_in(COMPLIER));
    require(p_c_a > 0.0 && p_c_b > 0.0, "needs compliers on both sides")?;
    let rhs_a = (t.em(&both(COMPLIER, JOINT), Joint)
        + t.em(&both(COMPLIER, SELF), AGivenB)
        + t.em(&both(COMPLIER, NEVER), AGivenNotB))
        / p_c_a;
    let rhs_b = (t.em(&both(JOINT, COMPLIER), Joint)
        + t.em(&both(SELF, COMPLIER), BGivenA)
        + t.em(&both(NEVER, COMPLIER), BGivenNotA))
        / p_c_b;
    Ok(vec![
        Check::equal(
            "Wald of A with Z_B=1 vs three-term profile average",
            wald(table, Side::A, 1)?,
            rhs_a,
            EQUALITY_TOL,
        ),
        Check::equal(
            "Wald of B with Z_A=1 vs three-term profile average",
            wald(table, Side::B, 1)?,
            rhs_b,
            EQUALITY_TOL,
        ),
    ])
}

/// Ground-truth value of the interaction coefficient.
fn interaction_truth(t: &Truth) -> Result<f64> {
    use EffectKind::*;
    let p_cc = t.p(&both(COMPLIER, COMPLIER));
    require(p_cc > 0.0, "needs (c,c) pairs")?;
    let ate_a = t.ate(&a_in(SELF_CROSS), AGivenNotB, "(s∪d,·)")?;
    let ate_b = t.ate(&b_in(SELF_CROSS), BGivenNotA, "(·,s∪d)")?;
    let (joint_a, joint_b) = (a_in(JOINT), b_in(JOINT));
    let (cross_a, cross_b) = (a_in(CROSS), b_in(CROSS));
    let numerator = t.em(&both(COMPLIER, COMPLIER), Laie)
        + (t.em(&joint_a, AGivenNotB) - t.p(&joint_a) * ate_a)
        + (t.em(&joint_b, BGivenNotA) - t.p(&joint_b) * ate_b)
        + (t.p(&cross_a) * ate_a - t.em(&cross_a, AGivenNotB))
        + (t.p(&cross_b) * ate_b - t.em(&cross_b, BGivenNotA));
    Ok(numerator / p_cc)
}

fn verify_t3(table: &CellTable, t: &Truth) -> Result<Vec<Check>> {
    let iv = saturated_iv(table)?;
    let ate_a = t.ate(&a_in(SELF_CROSS), EffectKind::AGivenNotB, "(s∪d,·)")?;
    let ate_b = t.ate(&b_in(SELF_CROSS), EffectKind::BGivenNotA, "(·,s∪d)")?;
    let base = t
        .mean(&PairSet::ALL, PotentialOutcome::Y00)
        .expect("population has mass");
    Ok(vec![
        Check::equal("intercept vs E[Y(00)]", iv.beta[0], base, EQUALITY_TOL),
        Check::equal(
            "coefficient on D_A vs ATE_A|notB(s∪d,·)",
            iv.beta[1],
            ate_a,
            EQUALITY_TOL,
        ),
        Check::equal(
            "coefficient on D_B vs ATE_B|notA(·,s∪d)",
            iv.beta[2],
            ate_b,
            EQUALITY_TOL,
        ),
        Check::equal(
            "coefficient on D_A·D_B vs LAIE(c,c) plus heterogeneity terms",
            iv.beta[3],
            interaction_truth(t)?,
            EQUALITY_TOL,
        ),
    ])
}

/// Pair sets of the extended decomposition for one side and partner instrument value.
struct SwitchSets {
    own_up: PairSet,
    own_down: PairSet,
    partner_up: PairSet,
    partner_down: PairSet,
    both_up: PairSet,
    both_down: PairSet,
}

fn switch_sets(side: Side, partner_z: u8) -> SwitchSets {
    // Takeup of (own, partner) member when the own instrument is `own_z`.
    let takes = |a: ComplianceMap, b: ComplianceMap, own_z: u8| -> (bool, bool) {
        let z = side.cell(own_z, partner_z);
        (a.takes(z.z_a, z.z_b), b.takes(z.z_b, z.z_a))
    };
    let own = |a, b, on: bool| {
        let (ta, tb) = takes(a, b, on as u8);
        match side {
            Side::A => (ta, tb),
            Side::B => (tb, ta),
        }
    };
    SwitchSets {
        own_up: PairSet::from_predicate(|a, b| own(a, b, true).0 && !own(a, b, false).0),
        own_down: PairSet::from_predicate(|a, b| !own(a, b, true).0 && own(a, b, false).0),
        partner_up: PairSet::from_predicate(|a, b| own(a, b, true).1 && !own(a, b, false).1),
        partner_down: PairSet::from_predicate(|a, b| !own(a, b, true).1 && own(a, b, false).1),
        both_up: PairSet::from_predicate(|a, b| {
            let (on, off) = (own(a, b, true), own(a, b, false));
            on.0 && on.1 && !(off.0 && off.1)
        }),
        both_down: PairSet::from_predicate(|a, b| {
            let (on, off) = (own(a, b, true), own(a, b, false));
            !(on.0 && on.1) && off.0 && off.1
        }),
    }
}

fn verify_b1(table: &CellTable, t: &Truth) -> Result<Vec<Check>> {
    use EffectKind::*;
    let mut checks = Vec::new();
    for side in [Side::A, Side::B] {
        let (own_kind, partner_kind) = match side {
            Side::A => (AGivenNotB, BGivenNotA),
            Side::B => (BGivenNotA, AGivenNotB),
        };
        for partner_z in 0..=1u8 {
            let sets = switch_sets(side, partner_z);
            let on = side.cell(1, partner_z);
            let off = side.cell(0, partner_z);
            let itt = table.ybar(on)? - table.ybar(off)?;
            let first = match side {
                Side::A => table.dbar_a(on)? - table.dbar_a(off)?,
                Side::B => table.dbar_b(on)? - table.dbar_b(off)?,
            };
            let numerator = t.em(&sets.own_up, own_kind) - t.em(&sets.own_down, own_kind)
                + t.em(&sets.partner_up, partner_kind)
                - t.em(&sets.partner_down, partner_kind)
                + t.em(&sets.both_up, Laie)
                - t.em(&sets.both_down, Laie);
            let denominator = t.p(&sets.own_up) - t.p(&sets.own_down);
            let tag = format!("{side:?} with partner instrument {partner_z}");
            checks.push(Check::equal(
                format!("outcome contrast, {tag}"),
                itt,
                numerator,
                EQUALITY_TOL,
            ));
            checks.push(Check::equal(
                format!("takeup contrast, {tag}"),
                first,
                denominator,
                EQUALITY_TOL,
            ));
            if first.abs() >= FIRST_STAGE_TOL && denominator.abs() >= FIRST_STAGE_TOL {
                checks.push(Check::equal(
                    format!("Wald ratio, {tag}"),
                    wald(table, side, partner_z)?,
                    numerator / denominator,
                    EQUALITY_TOL,
                ));
            }
        }
    }
    Ok(checks)
}

fn verify_b2(table: &CellTable, t: &Truth) -> Result<Vec<Check>> {
    let compliers = PairSet::a_in(&[
        TypeLabel::SelfComplier,
        TypeLabel::CrossDefier,
        TypeLabel::CrossComplier,
    ]);
    let rhs = t.ate(&compliers, EffectKind::AGivenNotB, "(s∪d∪xc,·)")?;
    Ok(vec![Check::equal(
        "Wald of A with Z_B=0 vs ATE_A|notB(s∪d∪xc,·)",
        wald(table, Side::A, 0)?,
        rhs,
        EQUALITY_TOL,
    )])
}

fn verify_b3(table: &CellTable, t: &Truth) -> Result<Vec<Check>> {
    use EffectKind::*;
    use TypeLabel::*;
    let compliers = a_in(COMPLIER);
    let p_c = t.p(&compliers);
    require(p_c > 0.0, "needs compliers for A")?;
    let b_treated_both_on = [
        SelfComplier,
        JointComplier,
        CrossComplier,
        AlwaysTaker,
        CrossDefier2,
    ];
    let numerator = t.em(&compliers, AGivenNotB) + t.em(&b_in(JOINT), BGivenNotA)
        - t.em(&b_in(&[CrossDefier, CrossDefier3]), BGivenNotA)
        + t.em(&both(COMPLIER, &b_treated_both_on), Laie);
    Ok(vec![Check::equal(
        "Wald of A with Z_B=1 vs extended-type decomposition",
        wald(table, Side::A, 1)?,
        numerator / p_c,
        EQUALITY_TOL,
    )])
}

fn verify_l1(table: &CellTable, t: &Truth) -> Result<Vec<Check>> {
    let z10 = Assignment::new(1, 0);
    let z01 = Assignment::new(0, 1);
    let z11 = Assignment::new(1, 1);
    let mut checks = vec![
        Check::equal(
            "takeup of A at (1,0) vs P(s∪d,·)",
            table.dbar_a(z10)?,
            t.p(&a_in(SELF_CROSS)),
            EQUALITY_TOL,
        ),
        Check::equal(
            "takeup of A at (1,1) vs P(c,·)",
            table.dbar_a(z11)?,
            t.p(&a_in(COMPLIER)),
            EQUALITY_TOL,
        ),
        Check::equal(
            "takeup of B at (0,1) vs P(·,s∪d)",
            table.dbar_b(z01)?,
            t.p(&b_in(SELF_CROSS)),
            EQUALITY_TOL,
        ),
        Check::equal(
            "takeup of B at (1,1) vs P(·,c)",
            table.dbar_b(z11)?,
            t.p(&b_in(COMPLIER)),
            EQUALITY_TOL,
        ),
    ];
    let cells = [
        (Takeup::new(1, 1), both(COMPLIER, COMPLIER), "P(c,c)"),
        (Takeup::new(1, 0), both(COMPLIER, NEVER_CROSS), "P(c,n∪d)"),
        (Takeup::new(0, 1), both(NEVER_CROSS, COMPLIER), "P(n∪d,c)"),
        (
            Takeup::new(0, 0),
            both(NEVER_CROSS, NEVER_CROSS),
            "P(n∪d,n∪d)",
        ),
    ];
    for (takeup, set, name) in cells {
        checks.push(Check::equal(
            format!("takeup {takeup} at (1,1) vs {name}"),
            table.prob(z11, takeup)?,
            t.p(&set),
            EQUALITY_TOL,
        ));
    }

    let shares = type_shares(table, &Restrictions::default())?;
    let p_j_a = t.p(&a_in(JOINT));
    let p_d_a = t.p(&a_in(CROSS));
    let p_j_b = t.p(&b_in(JOINT));
    let p_d_b = t.p(&b_in(CROSS));
    checks.push(Check::equal(
        "contrast of A vs P(j,·) − P(d,·)",
        shares.contrast_a,
        p_j_a - p_d_a,
        EQUALITY_TOL,
    ));
    checks.push(Check::equal(
        "contrast of B vs P(·,j) − P(·,d)",
        shares.contrast_b,
        p_j_b - p_d_b,
        EQUALITY_TOL,
    ));
    checks.push(Check::equal(
        "P(n∪j,·)",
        shares.p_nj_a,
        t.p(&a_in(NEVER_JOINT)),
        EQUALITY_TOL,
    ));
    checks.push(Check::equal(
        "P(·,n∪j)",
        shares.p_nj_b,
        t.p(&b_in(NEVER_JOINT)),
        EQUALITY_TOL,
    ));

    // Marginals resolved under each restriction that the population satisfies.
    let true_a = [SELF, JOINT, NEVER, CROSS].map(|l| t.p(&a_in(l)));
    let true_b = [SELF, JOINT, NEVER, CROSS].map(|l| t.p(&b_in(l)));
    let restrictions = Restrictions {
        no_cross_defiers_a: p_d_a == 0.0,
        no_joint_compliers_a: p_j_a == 0.0 && p_d_a > 0.0,
        no_cross_defiers_b: p_d_b == 0.0,
        no_joint_compliers_b: p_j_b == 0.0 && p_d_b > 0.0,
        ..Restrictions::default()
    };
    let resolved = type_shares(table, &restrictions)?;
    for (name, marginals, truth) in [
        ("A", resolved.marginals_a, true_a),
        ("B", resolved.marginals_b, true_b),
    ] {
        let Some(m) = marginals else { continue };
        for (label, value, expected) in [
            ("s", m.s, truth[0]),
            ("j", m.j, truth[1]),
            ("n", m.n, truth[2]),
            ("d", m.d, truth[3]),
        ] {
            checks.push(Check::equal(
                format!("resolved P({label}) of {name}"),
                value,
                expected,
                EQUALITY_TOL,
            ));
        }
    }
    Ok(checks)
}

fn verify_a1(t: &Truth) -> Result<Vec<Check>> {
    let partitions: [(&str, PairSet, PairSet, PairSet); 4] = [
        (
            "all = (c,·) + (n∪d,·)",
            PairSet::ALL,
            a_in(COMPLIER),
            PairSet::ALL.difference(&a_in(COMPLIER)),
        ),
        (
            "(c,·) = (s,·) + (j,·)",
            a_in(COMPLIER),
            a_in(SELF),
            a_in(JOINT),
        ),
        (
            "(c,·) = (c,c) + (c,not c)",
            a_in(COMPLIER),
            both(COMPLIER, COMPLIER),
            a_in(COMPLIER).difference(&b_in(COMPLIER)),
        ),
        (
            "all = (·,s∪d) + (·,rest)",
            PairSet::ALL,
            b_in(SELF_CROSS),
            PairSet::ALL.difference(&b_in(SELF_CROSS)),
        ),
    ];
    let weighted_ate = |set: &PairSet, kind| {
        let mass = t.p(set);
        if mass > 0.0 {
            t.ate(set, kind, "").map(|ate| ate * mass)
        } else {
            Ok(0.0)
        }
    };
    let mut checks = Vec::new();
    for (name, whole, first, second) in &partitions {
        for kind in EffectKind::ALL {
            checks.push(Check::equal(
                format!("{kind:?} over {name}"),
                weighted_ate(whole, kind)?,
                weighted_ate(first, kind)? + weighted_ate(second, kind)?,
                IDENTITY_TOL,
            ));
        }
    }
    Ok(checks)
}

/// Pair set and potential outcome that a point-identified moment describes.
pub fn moment_target(id: MomentId) -> (PairSet, PotentialOutcome) {
    use MomentId::*;
    use PotentialOutcome::*;
    match id {
        Y00All => (PairSet::ALL, Y00),
        Y00NjA => (a_in(NEVER_JOINT), Y00),
        Y00NjB => (b_in(NEVER_JOINT), Y00),
        Y00NdNd => (both(NEVER_CROSS, NEVER_CROSS), Y00),
        Y10SdA => (a_in(SELF_CROSS), Y10),
        Y01SdB => (b_in(SELF_CROSS), Y01),
        Y10CNd => (both(COMPLIER, NEVER_CROSS), Y10),
        Y01NdC => (both(NEVER_CROSS, COMPLIER), Y01),
        Y11Cc => (both(COMPLIER, COMPLIER), Y11),
        Y00SdA => (a_in(SELF_CROSS), Y00),
        Y00SdB => (b_in(SELF_CROSS), Y00),
    }
}

fn verify_a2(table: &CellTable, t: &Truth) -> Result<Vec<Check>> {
    let shares = type_shares(table, &Restrictions::default())?;
    let moments = identified_moments(table, &shares)?;
    let mut checks = Vec::new();
    for id in MomentId::ALL {
        let (set, which) = moment_target(id);
        match (moments.get(id), t.mean(&set, which)) {
            (Some(value), Some(truth)) => {
                checks.push(Check::equal(id.label(), value, truth, IDENTITY_TOL))
            }
            (None, None) => {}
            (Some(value), None) => checks.push(Check {
                label: format!("{} is reported on a zero-mass set", id.label()),
                lhs: value,
                rhs: f64::NAN,
                diff: f64::NAN,
                pass: false,
                bounds: None,
            }),
            (None, Some(truth)) => checks.push(Check {
                label: format!("{} is missing on a set with positive mass", id.label()),
                lhs: f64::NAN,
                rhs: truth,
                diff: f64::NAN,
                pass: false,
                bounds: None,
            }),
        }
    }
    Ok(checks)
}

/// Population-level facts that decide which bounds apply.
struct BoundContext {
    strengthened: Strengthenings,
    no_cross_defiers_a: bool,
    no_joint_compliers_b: bool,
}

fn bound_context(pop: &Population) -> Result<BoundContext> {
    require(
        pop.all_outcomes(|po| po.within(pop.k)),
        "needs potential outcomes in [0, K]",
    )?;
    require(
        pop.all_outcomes(|po| po.is_monotone()),
        "needs monotone response",
    )?;
    let live = pop.pairs.iter().filter(|p| p.weight > 0.0);
    let (mut cross_a, mut joint_b) = (false, false);
    for p in live {
        cross_a |= p.map_a == TypeLabel::CrossDefier.map();
        joint_b |= p.map_b == TypeLabel::JointComplier.map();
    }
    Ok(BoundContext {
        strengthened: Strengthenings {
            y11_ge_y00: pop.all_outcomes(|po| po.y11 >= po.y00),
            y11_ge_max: pop.all_outcomes(|po| po.y11 >= po.y10.max(po.y01)),
        },
        no_cross_defiers_a: !cross_a,
        no_joint_compliers_b: !joint_b,
    })
}

fn verify_bounds(table: &CellTable, t: &Truth) -> Result<Vec<Check>> {
    use PotentialOutcome::*;
    let ctx = bound_context(t.pop)?;
    let k = t.pop.k;
    let cc = both(COMPLIER, COMPLIER);
    require(t.p(&cc) > 0.0, "needs (c,c) pairs")?;
    let truth_mean = |set: &PairSet, which| t.mean(set, which).expect("set has mass");
    let laie_cc = t.ate(&cc, EffectKind::Laie, "(c,c)")?;
    let joint_cc = t.ate(&cc, EffectKind::Joint, "(c,c)")?;
    let reference = saturated_iv(table)
        .ok()
        .map(|iv| IvReference::from_beta(&iv.beta));

    let restrictions = Restrictions {
        no_cross_defiers_a: ctx.no_cross_defiers_a,
        no_joint_compliers_b: ctx.no_joint_compliers_b,
        ..Restrictions::default()
    };
    let shares = type_shares(table, &restrictions)?;
    let moments = identified_moments(table, &shares)?;

    let mut variants = vec![("", Strengthenings::default())];
    if ctx.strengthened.y11_ge_y00 || ctx.strengthened.y11_ge_max {
        variants.push((" (strengthened)", ctx.strengthened));
    }
    let mut checks = Vec::new();
    let mut record = |label: String, result: Result<Interval>, truth: f64| match result {
        Ok(bounds) => checks.push(Check::contains(label, bounds, truth)),
        Err(e) => checks.push(Check::failed(label, &e)),
    };

    for (suffix, strengthenings) in &variants {
        let inp = BoundInputs::new(&shares, &moments, k)?.with_strengthenings(*strengthenings);
        record(
            format!("E[Y(00)|(c,c)]{suffix}"),
            bound_y00_cc(&inp).map(|b| b.interval()),
            truth_mean(&cc, Y00),
        );
        record(
            format!("joint effect of (c,c){suffix}"),
            bound_joint_cc(&inp).map(|b| b.interval()),
            joint_cc,
        );

        if ctx.no_cross_defiers_a && ctx.no_joint_compliers_b {
            direct_checks(&inp, reference.as_ref(), t, &cc, suffix, &mut record);
        }
    }

    let inp = BoundInputs::new(&shares, &moments, k)?;
    if ctx.no_cross_defiers_a && ctx.no_joint_compliers_b {
        let joint_a = a_in(JOINT);
        if t.p(&joint_a) > FIRST_STAGE_TOL {
            match bound_aux_joint_complier_a(&inp) {
                Ok(b) => {
                    record(
                        "E[Y(00)|(j,·)]".into(),
                        Ok(b.y00.interval()),
                        truth_mean(&joint_a, Y00),
                    );
                    record(
                        "E[Y(10)|(j,·)]".into(),
                        Ok(b.y10.interval()),
                        truth_mean(&joint_a, Y10),
                    );
                    record(
                        "ATE_A|notB(j,·)".into(),
                        Ok(b.effect.interval()),
                        t.ate(&joint_a, EffectKind::AGivenNotB, "(j,·)")?,
                    );
                }
                Err(e) => record("joint-complier bounds of A".into(), Err(e), f64::NAN),
            }
        }
        let cross_b = b_in(CROSS);
        if t.p(&cross_b) > FIRST_STAGE_TOL {
            match bound_aux_cross_defier_b(&inp) {
                Ok(b) => {
                    record(
                        "E[Y(01)|(·,d)]".into(),
                        Ok(b.y01.interval()),
                        truth_mean(&cross_b, Y01),
                    );
                    record(
                        "E[Y(00)|(·,d)]".into(),
                        Ok(b.y00.interval()),
                        truth_mean(&cross_b, Y00),
                    );
                    record(
                        "ATE_B|notA(·,d)".into(),
                        Ok(b.effect.interval()),
                        t.ate(&cross_b, EffectKind::BGivenNotA, "(·,d)")?,
                    );
                }
                Err(e) => record("cross-defier bounds of B".into(), Err(e), f64::NAN),
            }
        }
    }

    let mut lambda_checks = Vec::new();
    if let (true, Some(reference)) = (ctx.no_cross_defiers_a, reference) {
        let p_j_b = t.p(&b_in(JOINT));
        let (min_share, max_share) = shares.joint_share_b_range();
        let fixed = bound_laie_indirect(&inp, &reference, ShareValue::Fixed(p_j_b))
            .map(|b| b.laie.interval())
            .map_err(|e| e.to_string());
        record(
            "indirect LAIE(c,c) at the true P(·,j)".into(),
            fixed.clone().map_err(Error::Identification),
            laie_cc,
        );
        let range = ShareValue::Range {
            lo: min_share.min(p_j_b),
            hi: max_share.max(p_j_b),
        };
        record(
            "indirect LAIE(c,c) over the admissible P(·,j) range".into(),
            bound_laie_indirect(&inp, &reference, range).map(|b| b.laie.interval()),
            laie_cc,
        );
        if ctx.no_joint_compliers_b {
            let meet = bound_laie_direct(&inp)
                .map(|b| b.laie.interval())
                .and_then(|direct| {
                    let indirect = fixed.map_err(Error::Identification)?;
                    meet_within_slack(&direct, &indirect).ok_or_else(|| {
                        Error::EmptyIdentifiedSet(format!(
                            "direct {direct} and indirect {indirect} are disjoint"
                        ))
                    })
                });
            record("direct ∩ indirect LAIE(c,c)".into(), meet, laie_cc);
        }
        lambda_checks = indirect_lambda_checks(&shares, &reference, t, p_j_b, laie_cc)?;
    }
    checks.extend(lambda_checks);
    Ok(checks)
}

/// Intersection that treats intervals separated by rounding noise as touching.
fn meet_within_slack(first: &Interval, second: &Interval) -> Option<Interval> {
    let lo = first.lo.max(second.lo);
    let hi = first.hi.min(second.hi);
    if lo <= hi {
        Some(Interval::new(lo, hi))
    } else if lo - hi <= CONTAINMENT_SLACK * lo.abs().max(1.0) {
        Some(Interval::new(hi, lo))
    } else {
        None
    }
}

fn direct_checks(
    inp: &BoundInputs,
    reference: Option<&IvReference>,
    t: &Truth,
    cc: &PairSet,
    suffix: &str,
    record: &mut impl FnMut(String, Result<Interval>, f64),
) {
    use PotentialOutcome::*;
    let truth = |which| t.mean(cc, which).expect("(c,c) has mass");
    let laie_cc = t.em(cc, EffectKind::Laie) / t.p(cc);
    match bound_laie_direct(inp) {
        Ok(b) => {
            record(
                format!("E[Y(10)|(c,c)]{suffix}"),
                Ok(b.y10.interval()),
                truth(Y10),
            );
            record(
                format!("E[Y(01)|(c,c)]{suffix}"),
                Ok(b.y01.interval()),
                truth(Y01),
            );
            record(
                format!("clipped E[Y(00)|(c,c)]{suffix}"),
                Ok(b.y00.interval()),
                truth(Y00),
            );
            record(
                format!("direct LAIE(c,c){suffix}"),
                Ok(b.laie.interval()),
                laie_cc,
            );
        }
        Err(e) => record(format!("direct LAIE(c,c){suffix}"), Err(e), laie_cc),
    }
    let (Ok(joint), Some(iv)) = (bound_joint_cc(inp), reference) else {
        return;
    };
    if iv.beta_a.abs() <= FIRST_STAGE_TOL || iv.beta_b.abs() <= FIRST_STAGE_TOL {
        return;
    }
    let lambda_a = t.em(cc, EffectKind::AGivenNotB) / t.p(cc) / iv.beta_a;
    let lambda_b = t.em(cc, EffectKind::BGivenNotA) / t.p(cc) / iv.beta_b;
    let (lower, upper) = direct_lambda_model(iv, &joint);
    let range = lower.value(&[lambda_a, lambda_b]).and_then(|lo| {
        upper
            .value(&[lambda_a, lambda_b])
            .and_then(|hi| Interval::try_new(lo, hi))
    });
    record(
        format!("direct λ model at the true multipliers{suffix}"),
        range,
        laie_cc,
    );
}

fn indirect_lambda_checks(
    shares: &TypeShares,
    iv: &IvReference,
    t: &Truth,
    p_j_b: f64,
    laie_cc: f64,
) -> Result<Vec<Check>> {
    let multiplier = |set: PairSet, kind: EffectKind, beta: f64| -> Option<f64> {
        let mass = t.p(&set);
        if mass == 0.0 {
            Some(0.0)
        } else if beta.abs() > FIRST_STAGE_TOL {
            Some(t.em(&set, kind) / mass / beta)
        } else {
            None
        }
    };
    let lambdas = [
        multiplier(a_in(JOINT), EffectKind::AGivenNotB, iv.beta_a),
        multiplier(b_in(CROSS), EffectKind::BGivenNotA, iv.beta_b),
        multiplier(b_in(JOINT), EffectKind::BGivenNotA, iv.beta_b),
    ];
    let Some(lambdas) = lambdas.into_iter().collect::<Option<Vec<f64>>>() else {
        return Ok(Vec::new());
    };
    let model = indirect_lambda_model(shares, iv, Some(p_j_b))?;
    Ok(vec![Check::equal(
        "indirect λ model at the true multipliers vs LAIE(c,c)",
        model.value(&lambdas)?,
        laie_cc,
        EQUALITY_TOL,
    )])
}

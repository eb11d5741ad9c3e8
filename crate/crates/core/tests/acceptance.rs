//! One line per acceptance criterion, evaluated at the stated tolerances.

use std::path::PathBuf;

use factorial_iv::bounds::{
    bound_aux_joint_complier_a, bound_joint_cc, bound_laie_direct, bound_laie_indirect,
    bound_y00_cc, BoundInputs, IvReference, ShareValue, Strengthenings,
};
use factorial_iv::data::{build_cell_table, ingest_path, CellTable, IngestOptions, MomentsInput};
use factorial_iv::estimands::{robust_se, saturated_iv, wald, HcVariant, Side};
use factorial_iv::identification::{identified_moments, type_shares, Restrictions, TypeShares};
use factorial_iv::interval::Interval;
use factorial_iv::oracle::{
    make_population, random_spec, true_effect, verify, AssignmentProbs, EffectKind, Mode,
    OutcomeModel, PairSet, PopulationSpec, ProfileShare, RandomOptions, Theorem, TypeLabel,
    Y11Order,
};
use factorial_iv::sensitivity::{bound_over_box_affine, indirect_lambda_model, DEFAULT_LAMBDA_BOX};
use factorial_iv::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PUBLISHED_BETA: [f64; 4] = [62.83, 2.58, 3.15, 0.69];
const PUBLISHED_SE: [f64; 4] = [0.55, 4.35, 1.24, 5.31];

fn moments() -> MomentsInput {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/application_moments.json");
    MomentsInput::from_path(path).expect("application moments load")
}

fn table() -> CellTable {
    moments()
        .to_cell_table()
        .expect("application moments form a cell table")
}

fn shares(no_joint_compliers_b: bool) -> TypeShares {
    let restrictions = Restrictions {
        no_cross_defiers_a: true,
        no_joint_compliers_b,
        ..Restrictions::default()
    };
    type_shares(&table(), &restrictions).expect("shares")
}

/// Collects comparisons for one criterion.
#[derive(Default)]
struct Tally {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Tally {
    fn near(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        if (got - want).abs() > tol {
            self.failures
                .push(format!("{what}: got {got:.4}, want {want} ± {tol}"));
        }
    }

    fn interval(&mut self, what: &str, got: Interval, lo: f64, hi: f64, tol: f64) {
        self.near(&format!("{what} lower"), got.lo, lo, tol);
        self.near(&format!("{what} upper"), got.hi, hi, tol);
    }

    fn ok(&mut self, what: &str, cond: bool) {
        if !cond {
            self.failures.push(what.to_owned());
        }
    }

    fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }
}

fn run(number: u32, title: &str, body: impl FnOnce(&mut Tally) -> Result<()>) -> bool {
    let mut tally = Tally::default();
    if let Err(e) = body(&mut tally) {
        tally.failures.push(format!("error: {e}"));
    }
    let pass = tally.failures.is_empty();
    let mut line = format!(
        "{} criterion {number}: {title}",
        if pass { "PASS" } else { "FAIL" }
    );
    if !tally.notes.is_empty() {
        line.push_str(&format!(" ({})", tally.notes.join("; ")));
    }
    if !pass {
        line.push_str(&format!(" -- {}", tally.failures.join("; ")));
    }
    println!("{line}");
    pass
}

fn criterion_1(t: &mut Tally) -> Result<()> {
    let s = shares(false);
    let a = s.marginals_a.expect("A resolved");
    t.near("P(s,·)", a.s, 0.28, 0.005);
    t.near("P(j,·)", a.j, 0.21, 0.005);
    t.near("P(n,·)", a.n, 0.51, 0.005);
    t.near("P(·,s∪d)", s.p_sd_b, 0.93, 0.005);
    t.near("P(·,j) − P(·,d)", s.contrast_b, -0.12, 0.005);
    t.near("P(c,c)", s.p_cc, 0.49, 0.005);
    t.near("P(n∪d,c)", s.p_nd_c, 0.31, 0.005);
    t.near("P(n∪d,n∪d)", s.p_nd_nd, 0.19, 0.005);
    Ok(())
}

fn criterion_2(t: &mut Tally) -> Result<()> {
    let table = table();
    let s = type_shares(&table, &Restrictions::default())?;
    let m = identified_moments(&table, &s)?;
    let inp = BoundInputs::new(&s, &m, 100.0)?;
    let y00 = bound_y00_cc(&inp)?;
    t.near("U00", y00.hi, 100.87, 0.02);
    t.near("L00", y00.lo, 59.85, 0.02);
    t.interval(
        "joint effect",
        bound_joint_cc(&inp)?.interval(),
        -33.93,
        7.09,
        0.02,
    );
    let strong = inp.with_strengthenings(Strengthenings {
        y11_ge_y00: true,
        y11_ge_max: false,
    });
    t.interval(
        "joint effect with Y(11) >= Y(00)",
        bound_joint_cc(&strong)?.interval(),
        0.0,
        7.09,
        0.02,
    );
    Ok(())
}

fn criterion_3(t: &mut Tally) -> Result<()> {
    let table = table();
    let s = shares(true);
    let m = identified_moments(&table, &s)?;
    let inp = BoundInputs::new(&s, &m, 100.0)?;
    let y00_tight = inp.with_strengthenings(Strengthenings {
        y11_ge_y00: true,
        y11_ge_max: false,
    });
    let direct = bound_laie_direct(&y00_tight)?;
    t.interval("E[Y(10)|(c,c)]", direct.y10.interval(), 37.28, 80.14, 0.02);
    t.interval("E[Y(01)|(c,c)]", direct.y01.interval(), 59.38, 83.87, 0.02);
    t.interval("direct LAIE", direct.laie.interval(), -37.22, 37.22, 0.02);
    let max = inp.with_strengthenings(Strengthenings {
        y11_ge_y00: true,
        y11_ge_max: true,
    });
    t.interval(
        "direct LAIE with Y(11) >= max",
        bound_laie_direct(&max)?.laie.interval(),
        -7.09,
        37.22,
        0.02,
    );
    Ok(())
}

fn criterion_4(t: &mut Tally) -> Result<()> {
    let iv = IvReference::from_beta(&PUBLISHED_BETA);
    let free = shares(false);
    let model = indirect_lambda_model(&free, &iv, None)?;
    t.near("identified part", model.intercept.constant, 1.02, 0.02);
    let l1 = model.slope("lambda_1")?;
    let l2 = model.slope("lambda_2")?;
    let l3 = model.slope("lambda_3")?;
    t.near("λ1 slope", l1.constant, -1.11, 0.02);
    t.ok("λ1 slope does not depend on P(·,j)", l1.per_share == 0.0);
    t.near("λ2 slope at P(·,j)=0", l2.constant, 6.43 * 0.12, 0.02);
    t.near("λ2 slope per unit P(·,j)", l2.per_share, 6.43, 0.02);
    t.near("λ3 slope at P(·,j)=0", l3.constant, 0.0, 0.02);
    t.near("λ3 slope per unit P(·,j)", l3.per_share, -6.43, 0.02);

    let (lo_share, hi_share) = free.joint_share_b_range();
    let boxed = bound_over_box_affine(
        &model.with_box(DEFAULT_LAMBDA_BOX)?,
        Interval::new(lo_share, hi_share),
    )?;
    t.near("box lower at P(·,j)=0", boxed.lower.constant, -2.30, 0.02);
    t.near(
        "box lower per unit P(·,j)",
        boxed.lower.per_share,
        -19.29,
        0.02,
    );
    t.near("box upper at P(·,j)=0", boxed.upper.constant, 3.34, 0.02);
    t.near(
        "box upper per unit P(·,j)",
        boxed.upper.per_share,
        19.29,
        0.02,
    );

    let table = table();
    let restricted = shares(true);
    let m = identified_moments(&table, &restricted)?;
    let inp = BoundInputs::new(&restricted, &m, 100.0)?;
    let joint_a = bound_aux_joint_complier_a(&inp)?;
    t.interval(
        "ATE_A|notB(j,·)",
        joint_a.effect.interval(),
        0.0,
        43.88,
        0.05,
    );
    let indirect = bound_laie_indirect(&inp, &iv, ShareValue::Fixed(0.0))?;
    t.near(
        "indirect identified part",
        indirect.identified_part,
        1.02,
        0.02,
    );
    t.near("indirect LAIE upper", indirect.laie.hi, 25.51, 0.02);
    t.near("indirect LAIE lower", indirect.laie.lo, -17.85, 0.1);
    t.note(format!(
        "indirect LAIE [{:.2}, {:.2}] from rounded inputs",
        indirect.laie.lo, indirect.laie.hi
    ));
    Ok(())
}

#[allow(clippy::approx_constant)]
fn criterion_5(t: &mut Tally) -> Result<()> {
    let iv = saturated_iv(&table())?;
    for (i, want) in [62.83, 2.64, 3.14, 0.64].into_iter().enumerate() {
        t.near(&format!("β[{i}] closed form"), iv.beta[i], want, 0.01);
        t.near(
            &format!("β[{i}] vs published fit"),
            iv.beta[i],
            PUBLISHED_BETA[i],
            0.08,
        );
    }
    match std::env::var_os("FACTORIAL_IV_RAW_DATA") {
        None => t.note("raw-data comparison skipped, FACTORIAL_IV_RAW_DATA not set"),
        Some(path) => {
            let dataset = ingest_path(&path, &IngestOptions::default())?;
            let raw = saturated_iv(&build_cell_table(&dataset)?)?;
            let se = robust_se(&dataset, &raw.beta, HcVariant::Hc1)?;
            for i in 0..4 {
                t.near(
                    &format!("raw β[{i}]"),
                    raw.beta[i],
                    PUBLISHED_BETA[i],
                    0.005,
                );
                t.near(
                    &format!("raw SE[{i}]"),
                    se.se[i],
                    PUBLISHED_SE[i],
                    0.1 * PUBLISHED_SE[i],
                );
            }
            t.note(format!("raw data: {} rows", dataset.len()));
        }
    }
    Ok(())
}

fn suite(
    t: &mut Tally,
    seed: u64,
    mode: Mode,
    options: &RandomOptions,
    theorems: &[Theorem],
    cases: usize,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let spec = random_spec(&mut rng, mode, options);
        let pop = match make_population(&spec, 120) {
            Ok(p) => p,
            Err(e) => return t.ok(&format!("case {case}: {e}"), false),
        };
        for &theorem in theorems {
            match verify(&pop, &spec.assignment, theorem) {
                Ok(r) if r.pass && !r.checks.is_empty() => {}
                Ok(r) => t.ok(
                    &format!(
                        "{theorem} case {case}: {:?} spec {}",
                        r.failures().next(),
                        spec.to_json()
                    ),
                    false,
                ),
                Err(e) => t.ok(
                    &format!("{theorem} case {case}: {e} spec {}", spec.to_json()),
                    false,
                ),
            }
        }
    }
    t.note(format!("{mode:?}: {cases} populations"));
}

fn criterion_6(t: &mut Tally) -> Result<()> {
    let options = RandomOptions::default();
    suite(
        t,
        601,
        Mode::OneSided,
        &options,
        &[
            Theorem::T1,
            Theorem::T2Eq5,
            Theorem::T2Eq6,
            Theorem::T3,
            Theorem::L1,
            Theorem::A1,
            Theorem::A2,
        ],
        100,
    );
    let cross = [TypeLabel::CrossDefier];
    let cor2 = RandomOptions {
        exclude: PairSet::a_in(&cross)
            .union(&PairSet::b_in(&cross))
            .union(&PairSet::both(
                &[TypeLabel::NeverTaker],
                &[TypeLabel::JointComplier],
            ))
            .union(&PairSet::both(
                &[TypeLabel::JointComplier],
                &[TypeLabel::NeverTaker],
            )),
        ..RandomOptions::default()
    };
    suite(t, 602, Mode::OneSided, &cor2, &[Theorem::Cor2], 100);
    suite(
        t,
        603,
        Mode::MonotoneAOneSidedB,
        &options,
        &[Theorem::B2],
        100,
    );
    suite(
        t,
        604,
        Mode::OneSidedAMonotoneB,
        &options,
        &[Theorem::B3],
        100,
    );
    let unrestricted = RandomOptions {
        inclusion: 0.05,
        monotone_response: false,
        ..RandomOptions::default()
    };
    suite(
        t,
        605,
        Mode::Unrestricted,
        &unrestricted,
        &[Theorem::B1],
        100,
    );
    Ok(())
}

fn criterion_7(t: &mut Tally) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(701);
    let (mut direct, mut indirect, mut aux) = (0, 0, 0);
    let populations = 2000;
    for case in 0..populations {
        let mut exclude = PairSet::EMPTY;
        if rng.random::<f64>() < 0.8 {
            exclude = exclude.union(&PairSet::a_in(&[TypeLabel::CrossDefier]));
        }
        if rng.random::<f64>() < 0.7 {
            exclude = exclude.union(&PairSet::b_in(&[TypeLabel::JointComplier]));
        }
        let y11 = [Y11Order::Free, Y11Order::GeY00, Y11Order::GeMax][rng.random_range(0..3)];
        let spec = random_spec(
            &mut rng,
            Mode::OneSided,
            &RandomOptions {
                exclude,
                y11,
                ..RandomOptions::default()
            },
        );
        let pop = make_population(&spec, 50)?;
        let report = verify(&pop, &spec.assignment, Theorem::BoundsContain)?;
        for check in report.failures() {
            t.ok(
                &format!(
                    "case {case} {}: truth {} outside {:?}",
                    check.label, check.lhs, check.bounds
                ),
                false,
            );
        }
        let has = |prefix: &str| report.checks.iter().any(|c| c.label.starts_with(prefix));
        direct += has("direct LAIE") as usize;
        indirect += has("indirect LAIE") as usize;
        aux += (has("ATE_A|notB(j,·)") || has("ATE_B|notA(·,d)")) as usize;
    }
    t.ok(
        &format!("direct bound ran on {direct} populations"),
        direct >= 1000,
    );
    t.ok(
        &format!("indirect bound ran on {indirect} populations"),
        indirect >= 1000,
    );
    t.ok(
        &format!("auxiliary bounds ran on {aux} populations"),
        aux >= 1000,
    );
    t.note(format!(
        "{populations} populations: {direct} direct, {indirect} indirect, {aux} auxiliary"
    ));
    Ok(())
}

fn criterion_8(t: &mut Tally) -> Result<()> {
    let basic = [TypeLabel::SelfComplier, TypeLabel::NeverTaker];
    let interactive = PairSet::ALL.difference(&PairSet::both(&basic, &basic));
    let mut rng = ChaCha8Rng::seed_from_u64(801);
    let cc = PairSet::both(
        &[TypeLabel::SelfComplier, TypeLabel::JointComplier],
        &[TypeLabel::SelfComplier, TypeLabel::JointComplier],
    );
    for case in 0..100 {
        let options = RandomOptions {
            exclude: interactive,
            ..RandomOptions::default()
        };
        let spec = random_spec(&mut rng, Mode::OneSided, &options);
        let pop = make_population(&spec, 100)?;
        let table = pop.exact_cell_table(&spec.assignment)?;
        let beta_ab = saturated_iv(&table)?.beta[3];
        let laie = true_effect(&pop, &cc, EffectKind::Laie)?;
        t.ok(
            &format!("case {case}: β_AB {beta_ab} vs LAIE(c,c) {laie}"),
            (beta_ab - laie).abs() <= 1e-9 * laie.abs().max(1.0),
        );
    }

    for case in 0..100u64 {
        let self_share_b: f64 = rng.random_range(0.05..0.9);
        let profiles = homogeneous_profiles(&mut rng, self_share_b);
        let spec = PopulationSpec {
            mode: Mode::OneSided,
            profiles,
            outcomes: OutcomeModel::Homogeneous {
                base_lo: 10.0,
                base_hi: 60.0,
                tau_a: rng.random_range(0.0..15.0),
                tau_b: rng.random_range(0.0..15.0),
                tau_ab: 0.0,
            },
            k: 100.0,
            assignment: AssignmentProbs::default(),
            seed: case,
        };
        let pop = make_population(&spec, 80)?;
        let table = pop.exact_cell_table(&spec.assignment)?;
        let (d0, d1) = (wald(&table, Side::A, 0)?, wald(&table, Side::A, 1)?);
        t.ok(
            &format!("case {case}: δ_A0 {d0} vs δ_A1 {d1}"),
            (d0 - d1).abs() <= 1e-9 * d0.abs().max(1.0),
        );
    }
    t.note("100 populations without interactive types, 100 with homogeneous effects");
    Ok(())
}

/// Profiles with every A type and B restricted to self-compliers and never-takers.
fn homogeneous_profiles(rng: &mut ChaCha8Rng, self_share_b: f64) -> Vec<ProfileShare> {
    let a_types = TypeLabel::BASIC;
    let raw: Vec<f64> = a_types.iter().map(|_| 0.1 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut profiles = Vec::new();
    for (label, w) in a_types.iter().zip(&raw) {
        let p = w / total;
        profiles.push(ProfileShare {
            a: label.map(),
            b: TypeLabel::SelfComplier.map(),
            prob: p * self_share_b,
        });
        profiles.push(ProfileShare {
            a: label.map(),
            b: TypeLabel::NeverTaker.map(),
            prob: p * (1.0 - self_share_b),
        });
    }
    profiles
}

#[test]
fn acceptance() {
    println!();
    let results = [
        run(1, "type shares from published takeup moments", criterion_1),
        run(
            2,
            "joint-effect bounds without type restrictions",
            criterion_2,
        ),
        run(3, "direct LAIE bounds and their components", criterion_3),
        run(4, "indirect LAIE pipeline and λ slopes", criterion_4),
        run(5, "saturated IV from rounded cell means", criterion_5),
        run(6, "oracle theorem suite", criterion_6),
        run(7, "bound containment over random populations", criterion_7),
        run(8, "degenerate populations", criterion_8),
    ];
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, p)| !**p)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

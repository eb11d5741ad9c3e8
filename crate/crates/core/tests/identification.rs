use factorial_iv::data::MomentsInput;
use factorial_iv::identification::{
    compliance_diagnostics, identified_moments, type_shares, MomentId, Restrictions,
};
use factorial_iv::oracle::{
    make_population, moment_target, random_spec, share, true_mean, Mode, PairSet, RandomOptions,
    TypeLabel,
};
use factorial_iv::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn application() -> factorial_iv::data::CellTable {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/application_moments.json");
    MomentsInput::from_path(path)
        .unwrap()
        .to_cell_table()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pair_shares_in_the_joint_cell_sum_to_one(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_spec(&mut rng, Mode::OneSided, &RandomOptions::default());
        let table = make_population(&spec, 50).unwrap().exact_cell_table(&spec.assignment).unwrap();
        let s = type_shares(&table, &Restrictions::default()).unwrap();
        prop_assert!((s.p_cc + s.p_c_nd + s.p_nd_c + s.p_nd_nd - 1.0).abs() < 1e-12);
        prop_assert!((s.p_c_a + s.p_nd_a - 1.0).abs() < 1e-12);
        prop_assert!((s.p_c_b + s.p_nd_b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn restricted_populations_recover_their_type_frequencies(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let exclude = PairSet::a_in(&[TypeLabel::CrossDefier]).union(&PairSet::b_in(&[TypeLabel::JointComplier]));
        let spec = random_spec(&mut rng, Mode::OneSided, &RandomOptions { exclude, ..RandomOptions::default() });
        let pop = make_population(&spec, 50).unwrap();
        let table = pop.exact_cell_table(&spec.assignment).unwrap();
        let restrictions = Restrictions { no_cross_defiers_a: true, no_joint_compliers_b: true, ..Restrictions::default() };
        let s = type_shares(&table, &restrictions).unwrap();
        let a = s.marginals_a.unwrap();
        let b = s.marginals_b.unwrap();
        let truth = |set: PairSet| share(&pop, &set);
        for (label, got) in [(TypeLabel::SelfComplier, a.s), (TypeLabel::JointComplier, a.j), (TypeLabel::NeverTaker, a.n), (TypeLabel::CrossDefier, a.d)] {
            prop_assert!((got - truth(PairSet::a_in(&[label]))).abs() < 1e-12);
        }
        for (label, got) in [(TypeLabel::SelfComplier, b.s), (TypeLabel::JointComplier, b.j), (TypeLabel::NeverTaker, b.n), (TypeLabel::CrossDefier, b.d)] {
            prop_assert!((got - truth(PairSet::b_in(&[label]))).abs() < 1e-12);
        }
        prop_assert!((a.total() - 1.0).abs() < 1e-12 && (b.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identified_moments_match_brute_force_means(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_spec(&mut rng, Mode::OneSided, &RandomOptions::default());
        let pop = make_population(&spec, 50).unwrap();
        let table = pop.exact_cell_table(&spec.assignment).unwrap();
        let s = type_shares(&table, &Restrictions::default()).unwrap();
        let m = identified_moments(&table, &s).unwrap();
        for id in MomentId::ALL {
            let (set, which) = moment_target(id);
            match (m.get(id), true_mean(&pop, &set, which)) {
                (Some(v), Ok(t)) => prop_assert!((v - t).abs() <= 1e-12 * t.abs().max(1.0), "{id}: {v} vs {t}"),
                (None, Err(_)) => {}
                (got, want) => prop_assert!(false, "{id}: {got:?} vs {want:?}"),
            }
        }
    }
}

#[test]
fn application_shares() {
    let table = application();
    let s = type_shares(
        &table,
        &Restrictions {
            no_cross_defiers_a: true,
            ..Restrictions::default()
        },
    )
    .unwrap();
    let a = s.marginals_a.unwrap();
    assert!((a.s - 0.28).abs() < 1e-12 && (a.j - 0.21).abs() < 1e-12 && (a.n - 0.51).abs() < 1e-12);
    assert!((s.contrast_b + 0.12).abs() < 1e-12);
    assert!((s.p_nj_b - 0.07).abs() < 1e-12);
    assert!(s.marginals_b.is_none());
    let (lo, hi) = s.joint_share_b_range();
    assert_eq!(lo, 0.0);
    assert!((hi - 0.07).abs() < 1e-12);
    let b = s.marginals_b_given_joint(0.05).unwrap();
    assert!((b.d - 0.17).abs() < 1e-12 && (b.s - 0.76).abs() < 1e-12 && (b.n - 0.02).abs() < 1e-12);
    assert!(s.marginals_b_given_joint(0.2).is_err());
}

#[test]
fn application_diagnostics_point_to_joint_compliers_of_a_and_cross_defiers_of_b() {
    let d = compliance_diagnostics(&application()).unwrap();
    let text = format!("{d:?}");
    assert!(text.contains("Joint") || text.contains("joint"), "{text}");
    assert!(text.contains("Cross") || text.contains("cross"), "{text}");
}

#[test]
fn application_moment_on_an_empty_cell_is_undefined() {
    let table = application();
    let s = type_shares(&table, &Restrictions::default()).unwrap();
    let m = identified_moments(&table, &s).unwrap();
    assert_eq!(m.get(MomentId::Y10CNd), None);
    assert!(matches!(
        m.require(MomentId::Y10CNd),
        Err(Error::UndefinedMoment(_))
    ));
    assert_eq!(m.get(MomentId::Y11Cc), Some(66.94));
}

#[test]
fn no_joint_compliers_for_b_is_refuted_when_takeup_rises() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let exclude = PairSet::b_in(&[TypeLabel::CrossDefier, TypeLabel::NeverTaker]);
    let mut spec = random_spec(
        &mut rng,
        Mode::OneSided,
        &RandomOptions {
            exclude,
            ..RandomOptions::default()
        },
    );
    if !spec
        .profiles
        .iter()
        .any(|p| p.b == TypeLabel::JointComplier.map())
    {
        spec.profiles[0].b = TypeLabel::JointComplier.map();
        spec.profiles.dedup_by(|x, y| x.a == y.a && x.b == y.b);
        let total: f64 = spec.profiles.iter().map(|p| p.prob).sum();
        spec.profiles.iter_mut().for_each(|p| p.prob /= total);
    }
    let table = make_population(&spec, 30)
        .unwrap()
        .exact_cell_table(&spec.assignment)
        .unwrap();
    let err = type_shares(
        &table,
        &Restrictions {
            no_joint_compliers_b: true,
            ..Restrictions::default()
        },
    )
    .unwrap_err();
    assert!(matches!(err, Error::Inconsistent { .. }), "{err}");
}

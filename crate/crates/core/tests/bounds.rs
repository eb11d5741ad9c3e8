use factorial_iv::bounds::{
    bound_joint_cc, bound_laie_direct, bound_laie_indirect, bound_y00_cc, BoundInputs, IvReference,
    ShareValue, Strengthenings,
};
use factorial_iv::estimands::saturated_iv;
use factorial_iv::identification::{identified_moments, type_shares, Restrictions};
use factorial_iv::interval::Interval;
use factorial_iv::oracle::{
    make_population, random_spec, true_mean, AssignmentProbs, Mode, OutcomeModel, PairSet,
    PopulationSpec, PotentialOutcome, ProfileShare, RandomOptions, TypeLabel, Y11Order,
};
use factorial_iv::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn inside(inner: Interval, outer: Interval) -> bool {
    let slack = 1e-9 * outer.lo.abs().max(outer.hi.abs()).max(1.0);
    inner.lo >= outer.lo - slack && inner.hi <= outer.hi + slack
}

fn cc() -> PairSet {
    let c = [TypeLabel::SelfComplier, TypeLabel::JointComplier];
    PairSet::both(&c, &c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strengthened_bounds_lie_inside_plain_bounds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let options = RandomOptions { y11: Y11Order::GeMax, ..RandomOptions::default() };
        let spec = random_spec(&mut rng, Mode::OneSided, &options);
        let table = make_population(&spec, 60).unwrap().exact_cell_table(&spec.assignment).unwrap();
        let s = type_shares(&table, &Restrictions::default()).unwrap();
        let m = identified_moments(&table, &s).unwrap();
        let plain = BoundInputs::new(&s, &m, 100.0).unwrap();
        let plain_y00 = bound_y00_cc(&plain).unwrap().interval();
        let plain_joint = bound_joint_cc(&plain).unwrap().interval();
        let mut previous = (plain_y00, plain_joint);
        for st in [
            Strengthenings { y11_ge_y00: true, y11_ge_max: false },
            Strengthenings { y11_ge_y00: true, y11_ge_max: true },
        ] {
            let inp = plain.with_strengthenings(st);
            let y00 = bound_y00_cc(&inp).unwrap().interval();
            let joint = bound_joint_cc(&inp).unwrap().interval();
            prop_assert!(inside(y00, previous.0), "{y00} vs {}", previous.0);
            prop_assert!(inside(joint, previous.1), "{joint} vs {}", previous.1);
            previous = (y00, joint);
        }
    }

    #[test]
    fn clipping_components_only_tightens(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let exclude = PairSet::a_in(&[TypeLabel::CrossDefier]).union(&PairSet::b_in(&[TypeLabel::JointComplier]));
        let spec = random_spec(&mut rng, Mode::OneSided, &RandomOptions { exclude, ..RandomOptions::default() });
        let table = make_population(&spec, 60).unwrap().exact_cell_table(&spec.assignment).unwrap();
        let restrictions = Restrictions { no_cross_defiers_a: true, no_joint_compliers_b: true, ..Restrictions::default() };
        let s = type_shares(&table, &restrictions).unwrap();
        let m = identified_moments(&table, &s).unwrap();
        let clipped = BoundInputs::new(&s, &m, 100.0).unwrap();
        let raw = clipped.with_clipping(false);
        let a = bound_laie_direct(&clipped).unwrap();
        let b = bound_laie_direct(&raw).unwrap();
        prop_assert!(inside(a.laie.interval(), b.laie.interval()));
        prop_assert!(inside(a.y10.interval(), b.y10.interval()));
        prop_assert!(a.laie.clipped && !b.laie.clipped);
    }
}

#[test]
fn a_population_of_complier_pairs_pins_down_y00() {
    for seed in 0..20 {
        let spec = PopulationSpec {
            mode: Mode::OneSided,
            profiles: vec![ProfileShare {
                a: TypeLabel::SelfComplier.map(),
                b: TypeLabel::SelfComplier.map(),
                prob: 1.0,
            }],
            outcomes: OutcomeModel::Uniform {
                monotone_response: true,
                y11: Y11Order::Free,
            },
            k: 100.0,
            assignment: AssignmentProbs::default(),
            seed,
        };
        let pop = make_population(&spec, 40).unwrap();
        let table = pop.exact_cell_table(&spec.assignment).unwrap();
        let s = type_shares(&table, &Restrictions::default()).unwrap();
        assert!((s.p_cc - 1.0).abs() < 1e-12);
        let m = identified_moments(&table, &s).unwrap();
        let y00 = bound_y00_cc(&BoundInputs::new(&s, &m, 100.0).unwrap()).unwrap();
        let truth = true_mean(&pop, &cc(), PotentialOutcome::Y00).unwrap();
        assert!(
            (y00.lo - truth).abs() < 1e-9 && (y00.hi - truth).abs() < 1e-9,
            "{} vs {truth}",
            y00.interval()
        );
    }
}

#[test]
fn homogeneous_additive_effects_give_an_indirect_range_around_zero() {
    // Only self-compliers and never-takers, constant effects, no interaction:
    // the saturated interaction coefficient is zero and the bound must cover it.
    for seed in 0..20u64 {
        let profiles = [TypeLabel::SelfComplier, TypeLabel::NeverTaker]
            .iter()
            .flat_map(|a| {
                [TypeLabel::SelfComplier, TypeLabel::NeverTaker]
                    .iter()
                    .map(move |b| ProfileShare {
                        a: a.map(),
                        b: b.map(),
                        prob: 0.25,
                    })
            })
            .collect();
        let spec = PopulationSpec {
            mode: Mode::OneSided,
            profiles,
            outcomes: OutcomeModel::Homogeneous {
                base_lo: 10.0,
                base_hi: 50.0,
                tau_a: 5.0,
                tau_b: 8.0,
                tau_ab: 0.0,
            },
            k: 100.0,
            assignment: AssignmentProbs::default(),
            seed,
        };
        let table = make_population(&spec, 80)
            .unwrap()
            .exact_cell_table(&spec.assignment)
            .unwrap();
        let iv = saturated_iv(&table).unwrap();
        assert!(iv.beta[3].abs() < 1e-9, "β_AB = {}", iv.beta[3]);
        let restrictions = Restrictions {
            no_cross_defiers_a: true,
            no_joint_compliers_b: true,
            ..Restrictions::default()
        };
        let s = type_shares(&table, &restrictions).unwrap();
        let m = identified_moments(&table, &s).unwrap();
        let inp = BoundInputs::new(&s, &m, 100.0).unwrap();
        let ind = bound_laie_indirect(
            &inp,
            &IvReference::from_beta(&iv.beta),
            ShareValue::Fixed(0.0),
        )
        .unwrap();
        assert!(ind.identified_part.abs() < 1e-9);
        assert!(
            ind.laie.interval().contains_within(0.0, 1e-9),
            "{}",
            ind.laie.interval()
        );
    }
}

#[test]
fn moments_outside_the_outcome_range_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec = random_spec(&mut rng, Mode::OneSided, &RandomOptions::default());
    let table = make_population(&spec, 40)
        .unwrap()
        .exact_cell_table(&spec.assignment)
        .unwrap();
    let s = type_shares(&table, &Restrictions::default()).unwrap();
    let m = identified_moments(&table, &s).unwrap();
    assert!(matches!(
        BoundInputs::new(&s, &m, 0.0),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        BoundInputs::new(&s, &m, 1.0),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn direct_bounds_need_both_restrictions() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let spec = random_spec(&mut rng, Mode::OneSided, &RandomOptions::default());
    let table = make_population(&spec, 40)
        .unwrap()
        .exact_cell_table(&spec.assignment)
        .unwrap();
    let s = type_shares(&table, &Restrictions::default()).unwrap();
    let m = identified_moments(&table, &s).unwrap();
    let err = bound_laie_direct(&BoundInputs::new(&s, &m, 100.0).unwrap()).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)), "{err}");
}

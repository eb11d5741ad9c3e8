use factorial_iv::data::{build_cell_table, Assignment, Dataset, MomentsInput};
use factorial_iv::estimands::{
    first_stage, reduced_form, robust_se, saturated_iv, wald, HcVariant, Side,
};
use factorial_iv::oracle::{
    effect_mass, make_population, random_spec, share, EffectKind, Mode, PairSet, RandomOptions,
    TypeLabel,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

const SELF_CROSS: [TypeLabel; 2] = [TypeLabel::SelfComplier, TypeLabel::CrossDefier];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn first_stage_is_the_table_contrasts(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_spec(&mut rng, Mode::OneSided, &RandomOptions::default());
        let table = make_population(&spec, 60).unwrap().exact_cell_table(&spec.assignment).unwrap();
        let fs = first_stage(&table).unwrap();
        let z = |a, b| Assignment::new(a, b);
        let da = |a, b| table.dbar_a(z(a, b)).unwrap();
        let dab = |a, b| table.dbar_ab(z(a, b)).unwrap();
        prop_assert!(close(fs.gamma[0][0], da(1, 0) - da(0, 0), 1e-12));
        prop_assert!(close(fs.gamma[0][1], da(0, 1) - da(0, 0), 1e-12));
        prop_assert!(close(fs.gamma[0][2], da(1, 1) - da(1, 0) - da(0, 1) + da(0, 0), 1e-12));
        prop_assert!(close(fs.gamma[2][2], dab(1, 1) - dab(1, 0) - dab(0, 1) + dab(0, 0), 1e-12));
    }

    #[test]
    fn reduced_form_slope_of_a_is_the_complier_effect_mass(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_spec(&mut rng, Mode::OneSided, &RandomOptions::default());
        let pop = make_population(&spec, 60).unwrap();
        let rf = reduced_form(&pop.exact_cell_table(&spec.assignment).unwrap()).unwrap();
        let sd = PairSet::a_in(&SELF_CROSS);
        prop_assert!(close(rf.pi[0], effect_mass(&pop, &sd, EffectKind::AGivenNotB), 1e-9));
    }

    #[test]
    fn coefficients_solve_the_just_identified_system(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_spec(&mut rng, Mode::OneSided, &RandomOptions::default());
        let table = make_population(&spec, 60).unwrap().exact_cell_table(&spec.assignment).unwrap();
        let iv = saturated_iv(&table).unwrap();
        for k in 0..3 {
            let implied: f64 = (0..3).map(|r| iv.beta[r + 1] * iv.first_stage.gamma[r][k]).sum();
            prop_assert!(close(implied, iv.reduced_form.pi[k], 1e-9));
        }
        // With one-sided takeup the coefficient on D_A is the partner-off Wald ratio.
        prop_assert!(close(iv.beta[1], wald(&table, Side::A, 0).unwrap(), 1e-9));
        prop_assert!(close(iv.beta[2], wald(&table, Side::B, 0).unwrap(), 1e-9));
    }

    #[test]
    fn coefficients_ignore_a_common_weight_scale(seed in any::<u64>(), scale in 0.01..50.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_spec(&mut rng, Mode::OneSided, &RandomOptions::default());
        let data = make_population(&spec, 40).unwrap().sample_dataset(2000, seed, &spec.assignment).unwrap();
        let scaled = Dataset::new(data.observations.iter().map(|o| o.with_weight(o.weight * scale)).collect());
        let (Ok(a), Ok(b)) = (saturated_iv(&build_cell_table(&data).unwrap()), saturated_iv(&build_cell_table(&scaled).unwrap())) else {
            return Ok(());
        };
        for i in 0..4 {
            prop_assert!(close(a.beta[i], b.beta[i], 1e-9));
        }
    }
}

#[test]
fn rounded_application_moments_give_the_closed_form_coefficients() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/application_moments.json");
    let table = MomentsInput::from_path(path)
        .unwrap()
        .to_cell_table()
        .unwrap();
    let iv = saturated_iv(&table).unwrap();
    // (ȳ10 − ȳ00)/0.28, (ȳ01 − ȳ00)/0.93, and the interaction from the (1,1) cell.
    let beta_a = (63.57 - 62.83) / 0.28;
    let beta_b = (65.75 - 62.83) / 0.93;
    let beta_ab = ((66.98 - 62.83) - 0.49 * beta_a - 0.81 * beta_b) / 0.49;
    for (got, want) in iv.beta.iter().zip([62.83, beta_a, beta_b, beta_ab]) {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn all_zero_outcomes_give_zero_effects() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let spec = random_spec(&mut rng, Mode::OneSided, &RandomOptions::default());
    let data = make_population(&spec, 30)
        .unwrap()
        .sample_dataset(400, 1, &spec.assignment)
        .unwrap();
    let zeroed = Dataset::new(
        data.observations
            .iter()
            .map(|o| {
                let mut o = *o;
                o.y = 0.0;
                o
            })
            .collect(),
    );
    let iv = saturated_iv(&build_cell_table(&zeroed).unwrap()).unwrap();
    assert!(iv.beta.iter().all(|b| b.abs() < 1e-12));
}

#[test]
fn large_sample_coefficients_are_near_the_exact_ones() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let spec = random_spec(&mut rng, Mode::OneSided, &RandomOptions::default());
    let pop = make_population(&spec, 80).unwrap();
    let exact = saturated_iv(&pop.exact_cell_table(&spec.assignment).unwrap()).unwrap();
    let data = pop.sample_dataset(100_000, 8, &spec.assignment).unwrap();
    let est = saturated_iv(&build_cell_table(&data).unwrap()).unwrap();
    let se = robust_se(&data, &est.beta, HcVariant::Hc1).unwrap();
    for i in 0..4 {
        assert!(
            (est.beta[i] - exact.beta[i]).abs() <= 3.0 * se.se[i],
            "β[{i}] {} vs exact {} (se {})",
            est.beta[i],
            exact.beta[i],
            se.se[i]
        );
    }
}

/// Sandwich SEs track the spread of estimates across replications.
#[test]
fn robust_se_matches_monte_carlo_spread() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let spec = random_spec(&mut rng, Mode::OneSided, &RandomOptions::default());
    let pop = make_population(&spec, 80).unwrap();
    let n = 5000;
    let reps = 200;
    let mut estimates = Vec::with_capacity(reps);
    let mut ses = Vec::with_capacity(reps);
    for r in 0..reps {
        let data = pop
            .sample_dataset(n, 10_000 + r as u64, &spec.assignment)
            .unwrap();
        let iv = saturated_iv(&build_cell_table(&data).unwrap()).unwrap();
        ses.push(robust_se(&data, &iv.beta, HcVariant::Hc1).unwrap().se[1]);
        estimates.push(iv.beta[1]);
    }
    let mean = estimates.iter().sum::<f64>() / reps as f64;
    let sd = (estimates.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    let avg_se = ses.iter().sum::<f64>() / reps as f64;
    assert!(
        (avg_se - sd).abs() <= 0.15 * sd,
        "average SE {avg_se} vs replication SD {sd}"
    );
}

#[test]
fn weak_first_stage_names_the_contrast() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut spec = random_spec(
        &mut rng,
        Mode::OneSided,
        &RandomOptions {
            anchor: false,
            ..RandomOptions::default()
        },
    );
    spec.profiles = vec![factorial_iv::oracle::ProfileShare {
        a: TypeLabel::NeverTaker.map(),
        b: TypeLabel::SelfComplier.map(),
        prob: 1.0,
    }];
    let pop = make_population(&spec, 10).unwrap();
    let table = pop.exact_cell_table(&spec.assignment).unwrap();
    let err = wald(&table, Side::A, 0).unwrap_err();
    assert!(err.to_string().contains("A"), "{err}");
    assert!(saturated_iv(&table).is_err());
    assert!(share(&pop, &PairSet::ALL) > 0.999);
}

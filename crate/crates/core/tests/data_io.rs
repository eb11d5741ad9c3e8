use std::fs;

use factorial_iv::data::{
    build_cell_table, check_one_sided, ingest_path, Assignment, ColumnMap, IngestOptions,
    MomentsInput, Takeup,
};
use factorial_iv::oracle::{make_population, random_spec, Mode, RandomOptions};
use factorial_iv::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture() -> MomentsInput {
    MomentsInput::from_path(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/application_moments.json"
    ))
    .unwrap()
}

#[test]
fn application_fixture_reproduces_the_published_cell_means() {
    let table = fixture().to_cell_table().unwrap();
    let near = |a: f64, b: f64| (a - b).abs() < 1e-9;
    assert!(near(table.dbar_a(Assignment::new(1, 0)).unwrap(), 0.28));
    assert!(near(table.dbar_b(Assignment::new(0, 1)).unwrap(), 0.93));
    assert!(near(table.ybar(Assignment::new(0, 0)).unwrap(), 62.83));
    assert!(check_one_sided(&table).pass);
    let z11 = Assignment::new(1, 1);
    assert_eq!(table.mean(z11, Takeup::new(1, 0)), None);
    assert!(fixture().published_iv.is_some());
}

#[test]
fn moments_round_trip_through_json() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let spec = random_spec(&mut rng, Mode::OneSided, &RandomOptions::default());
    let table = make_population(&spec, 50)
        .unwrap()
        .exact_cell_table(&spec.assignment)
        .unwrap();
    let json = serde_json::to_string(&MomentsInput::from_cell_table(&table)).unwrap();
    let back = MomentsInput::from_json_str(&json)
        .unwrap()
        .to_cell_table()
        .unwrap();
    for z in Assignment::ALL {
        assert!((back.ybar(z).unwrap() - table.ybar(z).unwrap()).abs() < 1e-12);
        for d in Takeup::ALL {
            assert!((back.prob(z, d).unwrap() - table.prob(z, d).unwrap()).abs() < 1e-12);
        }
    }
}

#[test]
fn malformed_moments_are_rejected() {
    let broken = r#"{"schema_version": 1, "cells": [{"z_a": 0, "z_b": 0, "takeup": [{"d_a": 0, "d_b": 0, "prob": 1.4, "mean_y": 3}]}]}"#;
    let err = MomentsInput::from_json_str(broken)
        .and_then(|m| m.to_cell_table())
        .unwrap_err();
    assert!(err.is_validation(), "{err}");
    assert!(MomentsInput::from_json_str("{").is_err());
}

#[test]
fn csv_file_with_remapped_columns_and_missing_outcomes() {
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let path = dir.join("data_io_remapped.csv");
    let mut text = String::from("outcome,take_a,take_b,offer_a,offer_b,w\n");
    for (za, zb) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        text.push_str(&format!("{},{za},{zb},{za},{zb},2\n", 10 + za * 3 + zb));
        text.push_str(&format!("NA,{za},{zb},{za},{zb},1\n"));
    }
    fs::write(&path, text).unwrap();
    let options = IngestOptions {
        columns: ColumnMap {
            y: "outcome".into(),
            d_a: "take_a".into(),
            d_b: "take_b".into(),
            z_a: "offer_a".into(),
            z_b: "offer_b".into(),
            weight: "w".into(),
            require_weight: true,
        },
        lenient_binary: false,
    };
    let ds = ingest_path(&path, &options).unwrap();
    assert_eq!(ds.len(), 4);
    assert_eq!(ds.total_weight(), 8.0);
    assert_eq!(ds.dropped_missing_outcome, 4);
    let table = build_cell_table(&ds).unwrap();
    assert_eq!(table.ybar(Assignment::new(1, 1)).unwrap(), 14.0);

    let missing = ingest_path(dir.join("does_not_exist.csv"), &options).unwrap_err();
    assert!(matches!(missing, Error::Io(_)), "{missing}");
}

use std::path::{Path, PathBuf};

use proptest::prelude::*;
use treerules::config::RunConfig;
use treerules::crossval::run_crossval;
use treerules::interchange::{from_json, load_ensemble, save_ensemble, to_json};
use treerules::io::{load_dataset, read_table, write_dataset, write_table};
use treerules::report::{mean, mean_present, CrossvalReport};
use treerules::train::{train_model, ModelConfig, ModelKind};
use treerules_core::dataset::RawTable;
use treerules_core::ensemble::{train_gbdt, train_random_forest, ForestParams, GbdtParams};
use treerules_core::{Dataset, FeatureKind};

fn breast_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/breast.csv")
}

fn breast() -> Dataset {
    load_dataset(&breast_path(), "class", None).unwrap()
}

#[test]
fn bundled_breast_shape() {
    let d = breast();
    assert_eq!(d.n(), 699);
    assert_eq!(d.m(), 9);
    assert_eq!(d.schema().classes, ["benign", "malignant"]);
    assert_eq!(d.class_counts(), [458, 241]);
    assert!(d.schema().features.iter().all(|f| f.kind == FeatureKind::Continuous));
    assert!(d.rows().flatten().all(|&v| (1.0..=10.0).contains(&v)));
}

#[test]
fn dataset_csv_round_trip() {
    let d = breast();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("copy.csv");
    write_dataset(&p, &d).unwrap();
    let back = load_dataset(&p, "class", Some(d.schema())).unwrap();
    assert_eq!(back, d);
    assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(breast_path()).unwrap());
}

fn cell() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z]{1,6}",
        "[a-z ,\"]{1,6}",
        (-1000i32..1000).prop_map(|i| i.to_string()),
        (-100.0f64..100.0).prop_map(|f| f.to_string()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn raw_table_round_trip(cols in 1usize..5, rows in proptest::collection::vec(proptest::collection::vec(cell(), 5), 0..10)) {
        let table = RawTable {
            header: (0..cols).map(|c| format!("col{c}")).collect(),
            rows: rows.into_iter().map(|r| r.into_iter().take(cols).collect()).collect(),
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_table(&p, &table).unwrap();
        prop_assert_eq!(read_table(&p).unwrap(), table);
    }
}

#[test]
fn trained_models_round_trip_byte_for_byte() {
    let d = breast();
    let forest = train_random_forest(&d, &ForestParams { n_trees: 10, max_depth: 4, ..ForestParams::default() }).unwrap();
    let boosted = train_gbdt(&d, &GbdtParams { n_rounds: 10, ..GbdtParams::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (name, ens) in [("forest", forest), ("gbdt", boosted)] {
        let text = to_json(&ens);
        let parsed = from_json(&text).unwrap();
        assert_eq!(to_json(&parsed), text, "{name}");
        let p = dir.path().join(format!("{name}.json"));
        save_ensemble(&p, &ens).unwrap();
        let loaded = load_ensemble(&p).unwrap();
        assert_eq!(to_json(&loaded), text, "{name}");
        assert_eq!(loaded.predict_dataset(&d).unwrap(), ens.predict_dataset(&d).unwrap(), "{name}");
    }
}

#[test]
fn parallel_forest_training_ignores_thread_count() {
    let d = breast();
    let cfg = ModelConfig { kind: ModelKind::Forest, n_trees: 12, max_depth: 3, ..ModelConfig::default() };
    let serial = train_random_forest(&d, &cfg.forest_params(9)).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let parallel = pool.install(|| train_model(&d, &cfg, 9)).unwrap();
    assert_eq!(serial, parallel);
}

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.model.n_trees = 15;
    cfg.model.max_depth = 3;
    cfg.run.folds = 3;
    cfg.run.seed = 4;
    cfg
}

fn without_times(mut r: CrossvalReport) -> CrossvalReport {
    for f in &mut r.folds {
        f.eval.extraction_ms = None;
        f.eval.solve_ms = None;
    }
    r.mean.extraction_ms = None;
    r.mean.solve_ms = None;
    r
}

#[test]
fn crossval_is_deterministic_and_mean_is_fieldwise() {
    let d = breast();
    let cfg = small_config();
    let a = run_crossval(&d, &cfg).unwrap();
    let b = run_crossval(&d, &cfg).unwrap();
    assert_eq!(without_times(a.clone()), without_times(b));

    assert_eq!(a.k, 3);
    assert_eq!(a.folds.iter().map(|f| f.n_test).sum::<usize>(), 699);
    for f in &a.folds {
        assert_eq!(f.n_train + f.n_test, 699);
        assert!(f.eval.n_rules >= 1 && f.eval.n_rules <= 6);
    }
    let n = a.folds.len() as f64;
    let avg = |g: &dyn Fn(&treerules::report::FoldReport) -> f64| a.folds.iter().map(g).sum::<f64>() / n;
    assert!((a.mean.n_rules - avg(&|f| f.eval.n_rules as f64)).abs() < 1e-12);
    assert!((a.mean.fidelity.accuracy - avg(&|f| f.eval.fidelity.accuracy)).abs() < 1e-12);
    assert!((a.mean.ruleset.f1 - avg(&|f| f.eval.ruleset.f1)).abs() < 1e-12);
    assert!(a.mean.extraction_ms.is_some());
}

#[test]
fn means_skip_missing_values() {
    assert_eq!(mean_present([Some(1.0), None, Some(3.0)]), Some(2.0));
    assert_eq!(mean_present([None, None]), None);
    assert_eq!(mean([]), 0.0);
    assert_eq!(mean([2.0, 4.0]), 3.0);
}

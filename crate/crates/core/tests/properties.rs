use std::collections::BTreeSet;

use proptest::prelude::*;
use treerules_core::dataset::{infer_schema, stratified_kfold};
use treerules_core::ensemble::{
    logistic, train_decision_tree, train_gbdt, train_random_forest, ForestParams, GbdtParams, TreeParams,
};
use treerules_core::evaluate::{fidelity, local_coverage, local_precision, performance};
use treerules_core::explain::{explain_global, explain_local, local_candidates, ExplainConfig, ExplainedRule};
use treerules_core::rules::{extract_rules, ExtractionMode};
use treerules_core::selection::ValidityConfig;
use treerules_core::{BinaryMetrics, Dataset, Feature, NodeKind, RuleBasedClassifier, Schema, SplitCondition};

/// Rows over two continuous columns on a coarse grid plus one categorical
/// column with four codes.
fn arb_dataset(max_n: usize) -> impl Strategy<Value = Dataset> {
    proptest::collection::vec((0u8..8, 0u8..8, 0u8..4, 0usize..2), 6..max_n).prop_map(|rows| {
        let schema = Schema {
            features: vec![
                Feature::continuous("x"),
                Feature::continuous("y"),
                Feature::categorical("c", ["p", "q", "r", "s"]),
            ],
            label: "label".into(),
            classes: vec!["neg".into(), "pos".into()],
        };
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (i, (x, y, c, noise)) in rows.iter().enumerate() {
            values.extend([*x as f64 * 0.5, *y as f64, *c as f64]);
            // mostly learnable, with some noise; both classes present
            let signal = usize::from(*x as usize + *c as usize > 5);
            labels.push(if i == 0 { 0 } else if i == 1 { 1 } else { signal ^ (noise & usize::from(i % 5 == 0)) });
        }
        Dataset::new(schema, values, labels).unwrap()
    })
}

fn all_leaf_rules(ens: &treerules_core::Ensemble, data: &Dataset) -> Vec<ExplainedRule> {
    let crs = extract_rules(ens, data, ExtractionMode::LeafOnly).unwrap();
    crs.rules.iter().map(|r| ExplainedRule::from_candidates(&crs, r.id)).collect()
}

fn oracle_metrics(truth: &[usize], pred: &[usize]) -> BinaryMetrics {
    let count = |f: &dyn Fn(usize, usize) -> bool| truth.iter().zip(pred).filter(|(&t, &p)| f(t, p)).count() as f64;
    let tp = count(&|t, p| t == 1 && p == 1);
    let fp = count(&|t, p| t == 0 && p == 1);
    let fneg = count(&|t, p| t == 1 && p == 0);
    let correct = count(&|t, p| t == p);
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    BinaryMetrics {
        accuracy: div(correct, truth.len() as f64),
        precision: div(tp, tp + fp),
        recall: div(tp, tp + fneg),
        f1: div(2.0 * tp, 2.0 * tp + fp + fneg),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn table_round_trip_is_identity(data in arb_dataset(40)) {
        let table = data.to_table();
        let back = Dataset::from_table(&table, data.schema()).unwrap();
        prop_assert_eq!(&back, &data);
        // inference on written data yields the same kinds and classes
        let inferred = infer_schema(&table, "label").unwrap();
        prop_assert_eq!(&inferred.classes, &data.schema().classes);
        prop_assert_eq!(inferred.features.len(), 3);
        prop_assert!(!inferred.features[0].is_categorical());
        prop_assert!(inferred.features[2].is_categorical());
    }

    #[test]
    fn folds_partition_and_stratify(data in arb_dataset(60), k in 2usize..4, seed in 0u64..1000) {
        let counts = data.class_counts();
        prop_assume!(counts.iter().all(|&c| c >= k));
        let plan = stratified_kfold(&data, k, seed).unwrap();
        let mut seen = BTreeSet::new();
        for f in 0..k {
            let test = plan.test_indices(f);
            for &i in &test {
                prop_assert!(seen.insert(i), "row {} in two folds", i);
            }
            for (c, &total) in counts.iter().enumerate() {
                let in_fold = test.iter().filter(|&&i| data.label(i) == c).count() as f64;
                prop_assert!((in_fold - total as f64 / k as f64).abs() <= 1.0);
            }
            let train: BTreeSet<usize> = plan.train_indices(f).into_iter().collect();
            prop_assert!(test.iter().all(|i| !train.contains(i)));
            prop_assert_eq!(train.len() + test.len(), data.n());
        }
        prop_assert_eq!(seen.len(), data.n());
        prop_assert_eq!(stratified_kfold(&data, k, seed).unwrap(), plan);
    }

    #[test]
    fn negation_is_involutive(f in 0usize..5, t in -10.0f64..10.0, codes in proptest::collection::btree_set(0u32..9, 1..4)) {
        for c in [SplitCondition::le(f, t), SplitCondition::gt(f, t), SplitCondition::is_in(f, codes.clone()), SplitCondition::not_in(f, codes.clone())] {
            prop_assert_eq!(c.negate().negate(), c.clone());
            let mut row = vec![0.0; 5];
            for x in [t - 1.0, t, t + 1.0, 0.0, 1.0, 2.0] {
                row[f] = x;
                prop_assert_ne!(c.eval(&row), c.negate().eval(&row));
            }
        }
    }

    #[test]
    fn one_active_leaf_per_tree_and_depth_bound(data in arb_dataset(50), depth in 1usize..5, seed in 0u64..50) {
        let p = ForestParams { n_trees: 4, max_depth: depth, seed, ..ForestParams::default() };
        let ens = train_random_forest(&data, &p).unwrap();
        for t in ens.trees() {
            prop_assert!(t.depth() <= depth);
            t.for_each_path(|_, path| assert!(path.len() <= depth));
        }
        for row in data.rows() {
            let leaves = ens.active_leaves(row).unwrap();
            prop_assert_eq!(leaves.len(), 4);
            for &(k, pos) in &leaves {
                prop_assert!(ens.trees()[k].node(pos).is_leaf());
                prop_assert_eq!(pos, ens.trees()[k].leaf_for(row));
            }
            prop_assert_eq!(ens.predict(row).unwrap(), ens.predict_from_leaves(&leaves));
        }
    }

    #[test]
    fn single_tree_predicts_argmax_of_active_leaf(data in arb_dataset(50), depth in 1usize..5) {
        let ens = train_decision_tree(&data, &TreeParams { max_depth: depth, min_leaf: 1, seed: 0 }).unwrap();
        let tree = &ens.trees()[0];
        for row in data.rows() {
            let NodeKind::Leaf { class_counts, .. } = &tree.node(tree.leaf_for(row)).kind else { unreachable!() };
            let expected = usize::from(class_counts[1] > class_counts[0]);
            prop_assert_eq!(ens.predict(row).unwrap(), expected);
        }
    }

    #[test]
    fn single_tree_leaf_rules_partition_and_reproduce(data in arb_dataset(50), depth in 1usize..5) {
        let ens = train_decision_tree(&data, &TreeParams { max_depth: depth, min_leaf: 1, seed: 3 }).unwrap();
        prop_assume!(!ens.is_stump_only());
        let rules = all_leaf_rules(&ens, &data);
        prop_assert_eq!(rules.len(), ens.trees()[0].leaf_count());
        // exhaustive check over the whole small domain
        for x in 0..8 {
            for y in 0..8 {
                for c in 0..4 {
                    let row = [x as f64 * 0.5, y as f64, c as f64];
                    prop_assert_eq!(rules.iter().filter(|r| r.covers(&row)).count(), 1);
                }
            }
        }
        let mut reversed = rules.clone();
        reversed.reverse();
        for order in [rules, reversed] {
            let clf = RuleBasedClassifier::new(order.iter().map(|r| (r.conditions.clone(), r.rule.predicted_class)).collect(), 0);
            let fid = fidelity(&clf, &ens, &data).unwrap();
            prop_assert_eq!(fid.accuracy, 1.0);
        }
    }

    #[test]
    fn candidate_metrics_match_recount(data in arb_dataset(50), mode in prop::sample::select(vec![ExtractionMode::LeafOnly, ExtractionMode::AllNodes])) {
        let p = ForestParams { n_trees: 3, max_depth: 3, ..ForestParams::default() };
        let ens = train_random_forest(&data, &p).unwrap();
        let crs = extract_rules(&ens, &data, mode).unwrap();
        let round = |num: usize, den: usize| if den == 0 { 0 } else { ((200 * num + den) / (2 * den)) as u32 };
        let mut bodies = BTreeSet::new();
        for (r, m) in crs.iter() {
            prop_assert!(bodies.insert(r.sorted_body()), "duplicate body");
            let covered: Vec<usize> = (0..data.n()).filter(|&i| crs.covers(r.id, data.row(i))).collect();
            let hit = covered.iter().filter(|&&i| data.label(i) == r.predicted_class).count();
            let class_total = data.labels().iter().filter(|&&l| l == r.predicted_class).count();
            let uncovered_neg = (0..data.n()).filter(|&i| !crs.covers(r.id, data.row(i)) && data.label(i) != r.predicted_class).count();
            prop_assert_eq!(m.size as usize, r.body.len());
            prop_assert_eq!(m.support, round(covered.len(), data.n()));
            prop_assert_eq!(m.precision, round(hit, covered.len()));
            prop_assert_eq!(m.recall, round(hit, class_total));
            prop_assert_eq!(m.accuracy, round(hit + uncovered_neg, data.n()));
            prop_assert_eq!(m.error_rate, 100 - m.accuracy);
            // class is the covered majority, ties to the lower index
            let ones = covered.iter().filter(|&&i| data.label(i) == 1).count();
            prop_assert_eq!(r.predicted_class, usize::from(2 * ones > covered.len()));
        }
    }

    #[test]
    fn performance_matches_recount(truth in proptest::collection::vec(0usize..2, 1..40), seed in any::<u64>()) {
        let pred: Vec<usize> = truth.iter().enumerate().map(|(i, &t)| if (seed >> (i % 64)) & 1 == 1 { 1 - t } else { t }).collect();
        prop_assert_eq!(BinaryMetrics::from_predictions(&truth, &pred), oracle_metrics(&truth, &pred));
    }

    #[test]
    fn empty_classifier_fidelity_is_default_rate(data in arb_dataset(40), default in 0usize..2) {
        let ens = train_decision_tree(&data, &TreeParams { max_depth: 2, min_leaf: 1, seed: 0 }).unwrap();
        let clf = RuleBasedClassifier::new(Vec::new(), default);
        let preds = ens.predict_dataset(&data).unwrap();
        let rate = preds.iter().filter(|&&p| p == default).count() as f64 / data.n() as f64;
        prop_assert_eq!(fidelity(&clf, &ens, &data).unwrap().accuracy, rate);
        let perf = performance(&clf, &data);
        prop_assert_eq!(perf, oracle_metrics(data.labels(), &vec![default; data.n()]));
    }

    #[test]
    fn local_explanations_are_faithful(data in arb_dataset(50), seed in 0u64..20, row in 0usize..6) {
        let p = ForestParams { n_trees: 7, max_depth: 3, seed, ..ForestParams::default() };
        let ens = train_random_forest(&data, &p).unwrap();
        let x = data.row(row % data.n()).to_vec();
        let (pred, crs) = local_candidates(&ens, &data, &x).unwrap();
        let distinct: BTreeSet<Vec<String>> = ens
            .trees()
            .iter()
            .filter(|t| !t.is_stump())
            .map(|t| {
                let mut v: Vec<String> = t.decision_path(&x).1.iter().map(|c| format!("{c:?}")).collect();
                v.sort();
                v
            })
            .collect();
        prop_assert!(crs.len() <= 7);
        prop_assert_eq!(crs.len(), distinct.len());
        let e = explain_local(&ens, &data, &x, &ExplainConfig::local()).unwrap();
        prop_assert_eq!(e.model_prediction, pred);
        for r in &e.rules {
            prop_assert!(r.covers(&x));
            prop_assert_eq!(r.rule.predicted_class, pred);
        }
        let lp = local_precision(&e, &ens, &data).unwrap();
        prop_assert!(lp.is_none_or(|v| (0.0..=1.0).contains(&v)));
        let cov = local_coverage(&e, &data);
        let scan = data.rows().filter(|r| e.rules.iter().any(|rule| rule.conditions.iter().all(|c| c.eval(r)))).count();
        prop_assert_eq!(cov, scan as f64 / data.n() as f64);
        if !e.rules.is_empty() {
            prop_assert!(cov > 0.0);
        }
    }

    #[test]
    fn global_rules_are_tree_paths(data in arb_dataset(50), seed in 0u64..20) {
        let p = ForestParams { n_trees: 5, max_depth: 3, seed, ..ForestParams::default() };
        let ens = train_random_forest(&data, &p).unwrap();
        let mut cfg = ExplainConfig::global();
        cfg.selection.validity = ValidityConfig::none();
        let g = explain_global(&ens, &data, &cfg).unwrap();
        let mut paths: Vec<Vec<SplitCondition>> = Vec::new();
        for t in ens.trees() {
            t.for_each_path(|_, path| paths.push(path.to_vec()));
        }
        for r in &g.rules {
            prop_assert!(paths.contains(&r.conditions), "rule {} is not a path", r.rule.id);
        }
    }
}

fn separable() -> Dataset {
    let schema = Schema {
        features: vec![Feature::continuous("a"), Feature::continuous("b")],
        label: "y".into(),
        classes: vec!["0".into(), "1".into()],
    };
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for i in 0..60 {
        let a = (i % 12) as f64;
        let b = (i / 12) as f64;
        values.extend([a, b]);
        labels.push(usize::from(a > 5.0));
    }
    Dataset::new(schema, values, labels).unwrap()
}

#[test]
fn forest_of_one_full_tree_equals_decision_tree() {
    let data = separable();
    for seed in 0..5 {
        for depth in 1..5 {
            let dt = train_decision_tree(&data, &TreeParams { max_depth: depth, min_leaf: 2, seed }).unwrap();
            let rf = train_random_forest(
                &data,
                &ForestParams {
                    n_trees: 1,
                    max_depth: depth,
                    min_leaf: 2,
                    feature_fraction: 1.0,
                    bootstrap: false,
                    seed,
                },
            )
            .unwrap();
            assert_eq!(dt, rf);
        }
    }
}

fn log_loss(ens: &treerules_core::Ensemble, data: &Dataset) -> f64 {
    data.rows()
        .zip(data.labels())
        .map(|(r, &y)| {
            let p = logistic(ens.margin(r).unwrap()).clamp(1e-15, 1.0 - 1e-15);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / data.n() as f64
}

#[test]
fn boosting_loss_never_increases() {
    let data = separable();
    let mut last = f64::INFINITY;
    for rounds in 1..=12 {
        let p = GbdtParams { n_rounds: rounds, max_depth: 2, min_leaf: 2, ..GbdtParams::default() };
        let ens = train_gbdt(&data, &p).unwrap();
        let loss = log_loss(&ens, &data);
        assert!(loss <= last + 1e-12, "round {rounds}: {loss} > {last}");
        last = loss;
    }
    assert!(last < 0.5);
}

#[test]
fn zero_scores_give_probability_one_half() {
    assert_eq!(logistic(0.0), 0.5);
}

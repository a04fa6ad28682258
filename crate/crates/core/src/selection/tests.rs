use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use num_rational::Ratio;
use proptest::prelude::*;

use super::*;
use crate::rules::{CandidateRuleSet, Confusion, ConditionTable, Rule, RuleMetrics};

#[derive(Debug, Clone)]
struct Spec {
    class: usize,
    body: Vec<u32>,
    acc: u32,
    sup: u32,
    prec: u32,
    rec: u32,
}

fn candidates(n_classes: usize, rules: &[Spec]) -> CandidateRuleSet {
    let mut conditions = ConditionTable::new();
    for i in 0..8 {
        conditions.intern(&crate::ensemble::SplitCondition::le(0, i as f64));
    }
    CandidateRuleSet {
        rules: rules
            .iter()
            .enumerate()
            .map(|(i, s)| Rule { id: i as u32 + 1, body: s.body.clone(), predicted_class: s.class, origin: (0, 0) })
            .collect(),
        metrics: rules
            .iter()
            .map(|s| RuleMetrics {
                size: s.body.len() as u32,
                support: s.sup,
                accuracy: s.acc,
                error_rate: 100 - s.acc,
                precision: s.prec,
                recall: s.rec,
                f1: 0,
                confusion: Confusion::default(),
            })
            .collect(),
        conditions,
        classes: (0..n_classes).map(|c| alloc::format!("c{c}")).collect(),
        features: Vec::new(),
        source: 0,
        warnings: Vec::new(),
    }
}

fn spec(class: usize, body: &[u32], acc: u32, sup: u32) -> Spec {
    Spec { class, body: body.to_vec(), acc, sup, prec: acc, rec: sup }
}

fn open_cfg() -> SelectionConfig {
    SelectionConfig {
        validity: ValidityConfig::none(),
        dominance: DominanceMode::Off,
        ..SelectionConfig::default()
    }
}

// Oracle: enumerate every subset, score it by collecting weak-constraint
// tuples (cost, priority, rule) into a set, as an answer-set solver does,
// or by plain rational sums in exact mode.
fn oracle_value(crs: &CandidateRuleSet, cfg: &SelectionConfig, sel: &[u32]) -> Vec<Ratio<i128>> {
    let spec = cfg.effective_objective();
    let sr = sel.len() as i128;
    let mut tuples: BTreeSet<(i32, i128, u32, u32, u32)> = BTreeSet::new();
    let mut exact: Vec<(i32, Ratio<i128>)> = Vec::new();
    let parity = cfg.arithmetic == Arithmetic::AspParity;
    for &x in sel {
        let m = crs.metrics_of(x);
        let l = m.size as i128;
        for t in &spec.terms {
            let sign = if t.direction == Direction::Max { 1 } else { -1 };
            let frac = |num: u32, den: i128| -> Ratio<i128> {
                if parity {
                    Ratio::from_integer(num as i128 / den)
                } else {
                    Ratio::new(num as i128, den)
                }
            };
            let mut values: Vec<(Ratio<i128>, u32)> = Vec::new();
            match t.metric {
                Metric::Accuracy => values.push((Ratio::from(m.accuracy as i128), 0)),
                Metric::Support => values.push((Ratio::from(m.support as i128), 0)),
                Metric::Size => values.push((Ratio::from(l), 0)),
                Metric::Precision => values.push((Ratio::from(m.precision as i128), 0)),
                Metric::Recall => values.push((Ratio::from(m.recall as i128), 0)),
                Metric::AvgAccPerSize => values.push((frac(m.accuracy, l * sr), 0)),
                Metric::AvgPrecPerSize => values.push((frac(m.precision, l * sr), 0)),
                Metric::SupportPerSize => values.push((frac(m.support, l), 0)),
                Metric::RecallPerSize => values.push((frac(m.recall, l), 0)),
                Metric::Overlap => {
                    for &y in sel.iter().filter(|&&y| y != x) {
                        let bx: BTreeSet<u32> = crs.rule(x).body.iter().copied().collect();
                        let shared = crs.rule(y).body.iter().filter(|c| bx.contains(c)).count();
                        values.push((Ratio::from(shared as i128), y));
                    }
                }
            }
            for (v, y) in values {
                let cost = -v * sign;
                if parity {
                    // the tuple is (weight, X); the Y tag is dropped
                    let _ = y;
                    tuples.insert((t.priority, cost.to_integer(), x, 0, 0));
                } else {
                    exact.push((t.priority, -cost));
                }
            }
        }
    }
    spec.levels()
        .iter()
        .map(|&p| {
            if parity {
                Ratio::from(-tuples.iter().filter(|t| t.0 == p).map(|t| t.1).sum::<i128>())
            } else {
                exact.iter().filter(|e| e.0 == p).map(|e| e.1).sum()
            }
        })
        .collect()
}

fn oracle_feasible(crs: &CandidateRuleSet, cfg: &SelectionConfig, sel: &[u32]) -> bool {
    let valid: Vec<u32> = crs.iter().filter(|(_, m)| cfg.validity.is_valid(m)).map(|(r, _)| r.id).collect();
    let active = |c: usize| cfg.classes.as_ref().is_none_or(|cs| cs.contains(&c));
    for c in 0..crs.n_classes() {
        let k = sel.iter().filter(|&&x| crs.rule(x).predicted_class == c).count();
        if active(c) && (k < cfg.min_rules_per_class || k > cfg.max_rules_per_class) {
            return false;
        }
        if !active(c) && k > 0 {
            return false;
        }
    }
    if sel.iter().any(|x| !valid.contains(x)) {
        return false;
    }
    if let Some(t) = cfg.max_total_conditions {
        if sel.iter().map(|&x| crs.metrics_of(x).size).sum::<u32>() > t {
            return false;
        }
    }
    if cfg.dominance == DominanceMode::AccSupport {
        for &x in sel {
            let (mx, cx) = (crs.metrics_of(x), crs.rule(x).predicted_class);
            for &y in &valid {
                if cfg.dominance_scope == DominanceScope::SameClass && crs.rule(y).predicted_class != cx {
                    continue;
                }
                let my = crs.metrics_of(y);
                let gt_geq = mx.accuracy < my.accuracy && mx.support <= my.support;
                let geq_gt = mx.accuracy <= my.accuracy && mx.support < my.support;
                if gt_geq || geq_gt {
                    return false;
                }
            }
        }
    }
    true
}

fn brute_force(crs: &CandidateRuleSet, cfg: &SelectionConfig) -> Option<(Vec<Ratio<i128>>, Vec<u32>)> {
    let n = crs.len();
    let mut best: Option<(Vec<Ratio<i128>>, Vec<u32>)> = None;
    for mask in 1u32..(1 << n) {
        let sel: Vec<u32> = (0..n as u32).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
        if !oracle_feasible(crs, cfg, &sel) {
            continue;
        }
        let v = oracle_value(crs, cfg, &sel);
        let better = match &best {
            None => true,
            Some((bv, bs)) => v > *bv || (v == *bv && sel < *bs),
        };
        if better {
            best = Some((v, sel));
        }
    }
    best
}

fn check_against_oracle(crs: &CandidateRuleSet, cfg: &SelectionConfig) {
    let sol = solve(crs, cfg).unwrap();
    match brute_force(crs, cfg) {
        None => assert_eq!(sol.status, SolveStatus::Infeasible),
        Some((v, sel)) => {
            assert_eq!(sol.status, SolveStatus::Optimal);
            let got: Vec<Ratio<i128>> = sol.objective_vector.iter().map(|o| o.value).collect();
            assert_eq!(got, v, "objective vector");
            assert_eq!(sol.selected, sel, "selection");
        }
    }
}

#[test]
fn single_valid_rule_per_class() {
    let crs = candidates(2, &[spec(0, &[1], 50, 10), spec(1, &[2], 70, 20)]);
    let sol = solve(&crs, &open_cfg()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert_eq!(sol.selected, vec![1, 2]);
}

#[test]
fn collective_limit_below_every_rule_is_infeasible() {
    let crs = candidates(1, &[spec(0, &[1, 2], 50, 10), spec(0, &[3, 4, 5], 70, 20)]);
    let cfg = SelectionConfig { max_total_conditions: Some(1), ..open_cfg() };
    assert_eq!(solve(&crs, &cfg).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn class_without_valid_rule_is_infeasible() {
    let crs = candidates(2, &[spec(0, &[1], 50, 10), spec(1, &[2], 70, 1)]);
    let cfg = SelectionConfig { validity: ValidityConfig { min_support: Some(5), ..ValidityConfig::none() }, ..open_cfg() };
    assert_eq!(solve(&crs, &cfg).unwrap().status, SolveStatus::Infeasible);
    // restricting to class 0 makes it feasible
    let cfg = SelectionConfig { classes: Some(vec![0]), ..cfg };
    assert_eq!(solve(&crs, &cfg).unwrap().selected, vec![1]);
}

#[test]
fn dominance_examples() {
    let m = |a, s| RuleMetrics { accuracy: a, support: s, ..Default::default() };
    assert!(dominates(&m(60, 10), &m(50, 10)));
    assert!(!dominates(&m(50, 10), &m(50, 10)));
    assert!(!dominates(&m(60, 10), &m(50, 20)));
    assert!(dominates(&m(50, 11), &m(50, 10)));
}

#[test]
fn dominated_rule_is_never_selected() {
    // rule 2 is more accurate and covers as much as rule 1
    let crs = candidates(1, &[spec(0, &[1], 50, 10), spec(0, &[2, 3, 4], 60, 10)]);
    let cfg = SelectionConfig { dominance: DominanceMode::AccSupport, ..open_cfg() };
    assert_eq!(selectable_rules(&crs, &cfg).unwrap(), vec![2]);
    let sol = solve(&crs, &cfg).unwrap();
    assert_eq!(sol.selected, vec![2]);
    let sol = solve(&crs, &open_cfg()).unwrap();
    assert_eq!(sol.selected, vec![1]);
}

#[test]
fn cross_class_dominance_only_in_all_valid_scope() {
    let crs = candidates(2, &[spec(0, &[1], 50, 10), spec(1, &[2], 60, 20)]);
    let same = SelectionConfig { dominance: DominanceMode::AccSupport, ..open_cfg() };
    assert_eq!(solve(&crs, &same).unwrap().selected, vec![1, 2]);
    let all = SelectionConfig { dominance_scope: DominanceScope::AllValid, ..same };
    assert_eq!(solve(&crs, &all).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn node_budget_reports_timeout() {
    let rules: Vec<Spec> = (0..10).map(|i| spec(0, &[i % 8 + 1], 40 + i, 10 + i)).collect();
    let crs = candidates(1, &rules);
    let sol = solve_with_budget(&crs, &open_cfg(), &mut NodeLimit(3)).unwrap();
    assert_eq!(sol.status, SolveStatus::TimeoutBestKnown);
}

#[test]
fn fixed_cases_match_oracle() {
    let crs = candidates(
        2,
        &[
            spec(0, &[1, 2], 80, 30),
            spec(0, &[1], 60, 50),
            spec(0, &[3, 4, 5], 90, 10),
            spec(1, &[2, 6], 70, 40),
            spec(1, &[6], 70, 40),
            spec(1, &[7, 8, 1], 95, 5),
        ],
    );
    for objective in ["accuracy-coverage", "precision-coverage", "precision-recall", "sums"] {
        for arithmetic in [Arithmetic::AspParity, Arithmetic::ExactRational] {
            for overlap in [false, true] {
                let cfg = SelectionConfig {
                    objective: ObjectiveSpec::preset(objective).unwrap(),
                    arithmetic,
                    minimize_overlap: overlap,
                    ..open_cfg()
                };
                check_against_oracle(&crs, &cfg);
            }
        }
    }
}

fn arb_rule(n_classes: usize) -> impl Strategy<Value = Spec> {
    (
        0..n_classes,
        proptest::collection::btree_set(1u32..=8, 1..=4),
        prop::sample::select(vec![30u32, 50, 60, 70, 80, 95]),
        0u32..=30,
        0u32..=100,
        0u32..=100,
    )
        .prop_map(|(class, body, acc, sup, prec, rec)| Spec {
            class,
            body: body.into_iter().collect(),
            acc,
            sup,
            prec,
            rec,
        })
}

fn arb_cfg() -> impl Strategy<Value = SelectionConfig> {
    (
        1usize..=3,
        prop::sample::select(ObjectiveSpec::PRESETS.to_vec()),
        any::<bool>(),
        any::<bool>(),
        prop::option::of(0u32..4),
        any::<bool>(),
        prop::option::of(3u32..=10),
        any::<bool>(),
    )
        .prop_map(|(b, preset, dom, all_valid, min_sup, overlap, limit, exact)| SelectionConfig {
            validity: ValidityConfig { min_support: min_sup, ..ValidityConfig::none() },
            max_rules_per_class: b,
            min_rules_per_class: 1,
            dominance: if dom { DominanceMode::AccSupport } else { DominanceMode::Off },
            dominance_scope: if all_valid { DominanceScope::AllValid } else { DominanceScope::SameClass },
            max_total_conditions: limit,
            objective: ObjectiveSpec::preset(preset).unwrap(),
            arithmetic: if exact { Arithmetic::ExactRational } else { Arithmetic::AspParity },
            minimize_overlap: overlap,
            classes: None,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solver_matches_brute_force(
        rules in (1usize..=3).prop_flat_map(|k| proptest::collection::vec(arb_rule(k), 1..=10).prop_map(move |r| (k, r))),
        cfg in arb_cfg(),
    ) {
        let (k, rules) = rules;
        check_against_oracle(&candidates(k, &rules), &cfg);
    }

    #[test]
    fn larger_bound_never_worse(
        rules in proptest::collection::vec(arb_rule(2), 2..=9),
        cfg in arb_cfg(),
    ) {
        let crs = candidates(2, &rules);
        let small = solve(&crs, &SelectionConfig { max_rules_per_class: 1, ..cfg.clone() }).unwrap();
        let large = solve(&crs, &SelectionConfig { max_rules_per_class: 3, ..cfg }).unwrap();
        if small.status == SolveStatus::Optimal {
            prop_assert_eq!(large.status, SolveStatus::Optimal);
            let a: Vec<_> = small.objective_vector.iter().map(|o| o.value).collect();
            let b: Vec<_> = large.objective_vector.iter().map(|o| o.value).collect();
            prop_assert!(b >= a);
        }
    }
}

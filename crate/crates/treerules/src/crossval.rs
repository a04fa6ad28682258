//! k-fold harness: train, extract, solve and evaluate per fold, folds in
//! parallel.

use std::time::Instant;

use rayon::prelude::*;
use treerules_core::dataset::stratified_kfold;
use treerules_core::explain::global_from_candidates;
use treerules_core::rules::extract_rules;
use treerules_core::selection::{Budget, Unlimited};
use treerules_core::Dataset;

use crate::budget::Deadline;
use crate::config::RunConfig;
use crate::error::Result;
use crate::report::{build_classifier, CrossvalReport, EvalReport, FoldReport, MeanReport};
use crate::train::train_model;

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1000.0
}

pub fn run_fold(data: &Dataset, train_idx: &[usize], test_idx: &[usize], fold: usize, cfg: &RunConfig) -> Result<FoldReport> {
    let train = data.subset(train_idx);
    let test = data.subset(test_idx);
    let ens = train_model(&train, &cfg.model, cfg.run.seed)?;
    let explain = cfg.global_explain_config();

    let t = Instant::now();
    let crs = extract_rules(&ens, &train, explain.mode)?;
    let extraction_ms = ms(t);

    let t = Instant::now();
    let mut deadline = cfg.time_limit().map(Deadline::after);
    let budget: &mut dyn Budget = match deadline.as_mut() {
        Some(d) => d,
        None => &mut Unlimited,
    };
    let expl = global_from_candidates(&crs, &explain, budget)?;
    let solve_ms = ms(t);

    let clf = build_classifier(&expl.rules, train.majority_class(), cfg.evaluate.rule_order);
    let mut eval = EvalReport::compute(&expl.rules, &clf, &ens, &test)?;
    eval.extraction_ms = Some(extraction_ms);
    eval.solve_ms = Some(solve_ms);
    Ok(FoldReport { fold, n_train: train.n(), n_test: test.n(), candidates: crs.len(), eval })
}

/// Per-fold reports and their mean. Everything except timings is a pure
/// function of `data` and `cfg`.
pub fn run_crossval(data: &Dataset, cfg: &RunConfig) -> Result<CrossvalReport> {
    let plan = stratified_kfold(data, cfg.run.folds, cfg.run.seed)?;
    let folds = (0..plan.k)
        .into_par_iter()
        .map(|f| run_fold(data, &plan.train_indices(f), &plan.test_indices(f), f, cfg))
        .collect::<Result<Vec<_>>>()?;
    let evals: Vec<EvalReport> = folds.iter().map(|f| f.eval.clone()).collect();
    Ok(CrossvalReport { k: plan.k, seed: cfg.run.seed, mean: MeanReport::of(&evals), folds })
}

//! Scoring explanations: the naive rule-based classifier, performance
//! ratios, fidelity, local precision and coverage.

use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::ensemble::{Ensemble, SplitCondition};
use crate::error::Result;
use crate::explain::{ExplainedRule, LocalExplanation};

/// Applies its rules in order; the first whose body covers an instance
/// decides, otherwise `default_label`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RuleBasedClassifier {
    pub rules: Vec<(Vec<SplitCondition>, usize)>,
    pub default_label: usize,
}

impl RuleBasedClassifier {
    pub fn new(rules: Vec<(Vec<SplitCondition>, usize)>, default_label: usize) -> Self {
        RuleBasedClassifier { rules, default_label }
    }

    /// Orders rules by descending precision, then ascending rule id.
    pub fn from_rules(rules: &[ExplainedRule], default_label: usize) -> Self {
        let mut sorted: Vec<&ExplainedRule> = rules.iter().collect();
        sorted.sort_by(|a, b| b.metrics.precision.cmp(&a.metrics.precision).then(a.rule.id.cmp(&b.rule.id)));
        RuleBasedClassifier {
            rules: sorted.into_iter().map(|r| (r.conditions.clone(), r.rule.predicted_class)).collect(),
            default_label,
        }
    }

    pub fn classify(&self, row: &[f64]) -> usize {
        self.rules
            .iter()
            .find(|(body, _)| body.iter().all(|c| c.eval(row)))
            .map_or(self.default_label, |(_, class)| *class)
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Vec<usize> {
        data.rows().map(|r| self.classify(r)).collect()
    }
}

/// Raw (unscaled) confusion-matrix metrics with class 1 as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinaryMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-metric quotients; `None` where the reference metric is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricRatios {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

pub const POSITIVE_CLASS: usize = 1;

fn frac(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl BinaryMetrics {
    /// Metrics of `predicted` against `truth`; empty input gives zeros.
    pub fn from_predictions(truth: &[usize], predicted: &[usize]) -> Self {
        let (mut tp, mut fp, mut fneg, mut correct) = (0, 0, 0, 0);
        for (&t, &p) in truth.iter().zip(predicted) {
            correct += usize::from(t == p);
            match (t == POSITIVE_CLASS, p == POSITIVE_CLASS) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fneg += 1,
                (false, false) => {}
            }
        }
        BinaryMetrics {
            accuracy: frac(correct, truth.len()),
            precision: frac(tp, tp + fp),
            recall: frac(tp, tp + fneg),
            f1: frac(2 * tp, 2 * tp + fp + fneg),
        }
    }

    pub fn ratio_to(&self, reference: &BinaryMetrics) -> MetricRatios {
        let q = |a: f64, b: f64| if b == 0.0 { None } else { Some(a / b) };
        MetricRatios {
            accuracy: q(self.accuracy, reference.accuracy),
            precision: q(self.precision, reference.precision),
            recall: q(self.recall, reference.recall),
            f1: q(self.f1, reference.f1),
        }
    }
}

pub fn performance(clf: &RuleBasedClassifier, data: &Dataset) -> BinaryMetrics {
    BinaryMetrics::from_predictions(data.labels(), &clf.predict_dataset(data))
}

/// Rule set metrics divided by the model's, both against the labels.
pub fn performance_ratio(clf: &RuleBasedClassifier, ens: &Ensemble, data: &Dataset) -> Result<MetricRatios> {
    let model = BinaryMetrics::from_predictions(data.labels(), &ens.predict_dataset(data)?);
    Ok(performance(clf, data).ratio_to(&model))
}

/// Rule set metrics with the model's predictions taken as ground truth.
pub fn fidelity(clf: &RuleBasedClassifier, ens: &Ensemble, data: &Dataset) -> Result<BinaryMetrics> {
    Ok(BinaryMetrics::from_predictions(&ens.predict_dataset(data)?, &clf.predict_dataset(data)))
}

fn covered(expl: &LocalExplanation, row: &[f64]) -> bool {
    expl.rules.iter().any(|r| r.covers(row))
}

/// Among `validation` rows covered by any rule of `expl`, the fraction the
/// model assigns the explained prediction; `None` if nothing is covered.
pub fn local_precision(expl: &LocalExplanation, ens: &Ensemble, validation: &Dataset) -> Result<Option<f64>> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for row in validation.rows().filter(|r| covered(expl, r)) {
        total += 1;
        hits += usize::from(ens.predict(row)? == expl.model_prediction);
    }
    Ok((total > 0).then(|| hits as f64 / total as f64))
}

/// Fraction of `validation` rows covered by any rule of `expl`.
pub fn local_coverage(expl: &LocalExplanation, validation: &Dataset) -> f64 {
    frac(validation.rows().filter(|r| covered(expl, r)).count(), validation.n())
}

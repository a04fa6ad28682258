//! Explanation and evaluation reports: aligned text plus JSON twins.

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use treerules_core::evaluate::{fidelity, local_coverage, local_precision, performance, MetricRatios};
use treerules_core::explain::ExplainedRule;
use treerules_core::{
    BinaryMetrics, Dataset, Ensemble, Feature, GlobalExplanation, LocalExplanation, RuleBasedClassifier,
};

use crate::config::RuleOrder;

/// What `explain-global` and `explain-local` write as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExplanationDoc {
    Global {
        explanation: GlobalExplanation,
        /// Training-split majority class, the classifier's fallback.
        default_label: usize,
        features: Vec<Feature>,
        classes: Vec<String>,
        rendered: Vec<String>,
    },
    Local {
        explanation: LocalExplanation,
        features: Vec<Feature>,
        classes: Vec<String>,
        rendered: Vec<String>,
    },
}

impl ExplanationDoc {
    pub fn global(explanation: GlobalExplanation, default_label: usize, ens: &Ensemble) -> Self {
        let rendered = render_all(&explanation.rules, ens.features(), ens.classes());
        ExplanationDoc::Global {
            explanation,
            default_label,
            features: ens.features().to_vec(),
            classes: ens.classes().to_vec(),
            rendered,
        }
    }

    pub fn local(explanation: LocalExplanation, ens: &Ensemble) -> Self {
        let rendered = render_all(&explanation.rules, ens.features(), ens.classes());
        ExplanationDoc::Local { explanation, features: ens.features().to_vec(), classes: ens.classes().to_vec(), rendered }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("explanation serializes") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match self {
            ExplanationDoc::Global { explanation: e, default_label, classes, rendered, .. } => {
                let _ = writeln!(s, "global explanation");
                let _ = writeln!(s, "candidates  {}", e.candidate_count);
                let _ = writeln!(s, "valid       {}", e.validity.valid.len());
                let _ = writeln!(s, "selectable  {}", e.solution.stats.selectable);
                let _ = writeln!(s, "status      {:?}", e.solution.status);
                let _ = writeln!(s, "objective   {}", objective_line(&e.solution));
                let _ = writeln!(s, "default     {}", class_name(classes, *default_label));
                if let Some(r) = &e.reason {
                    let _ = writeln!(s, "empty       {r}");
                }
                rules_block(&mut s, &e.rules, rendered);
            }
            ExplanationDoc::Local { explanation: e, classes, rendered, .. } => {
                let _ = writeln!(s, "local explanation");
                let _ = writeln!(s, "instance    {:?}", e.instance);
                let _ = writeln!(s, "prediction  {}", class_name(classes, e.model_prediction));
                let _ = writeln!(s, "candidates  {}", e.candidate_count);
                let _ = writeln!(s, "status      {:?}", e.solution.status);
                let _ = writeln!(s, "objective   {}", objective_line(&e.solution));
                if let Some(r) = &e.reason {
                    let _ = writeln!(s, "empty       {r}");
                }
                rules_block(&mut s, &e.rules, rendered);
            }
        }
        s
    }
}

fn class_name(classes: &[String], c: usize) -> &str {
    classes.get(c).map_or("?", String::as_str)
}

fn objective_line(sol: &treerules_core::RuleSetSolution) -> String {
    let parts: Vec<String> = sol.objective_vector.iter().map(|o| format!("{}@{}", o.value, o.priority)).collect();
    if parts.is_empty() {
        "-".into()
    } else {
        parts.join(" ")
    }
}

fn render_all(rules: &[ExplainedRule], features: &[Feature], classes: &[String]) -> Vec<String> {
    rules.iter().map(|r| r.render(features, classes)).collect()
}

fn rules_block(s: &mut String, rules: &[ExplainedRule], rendered: &[String]) {
    for (r, text) in rules.iter().zip(rendered) {
        let m = &r.metrics;
        let _ = writeln!(s, "\nrule {}: {text}", r.rule.id);
        let _ = writeln!(
            s,
            "  size {}  support {}  accuracy {}  precision {}  recall {}  f1 {}",
            m.size, m.support, m.accuracy, m.precision, m.recall, m.f1
        );
    }
}

/// Builds the naive classifier in the configured order.
pub fn build_classifier(rules: &[ExplainedRule], default_label: usize, order: RuleOrder) -> RuleBasedClassifier {
    match order {
        RuleOrder::Precision => RuleBasedClassifier::from_rules(rules, default_label),
        RuleOrder::RuleId => {
            let mut sorted: Vec<&ExplainedRule> = rules.iter().collect();
            sorted.sort_by_key(|r| r.rule.id);
            RuleBasedClassifier::new(
                sorted.into_iter().map(|r| (r.conditions.clone(), r.rule.predicted_class)).collect(),
                default_label,
            )
        }
    }
}

/// Global rule set against the model on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_rules: usize,
    pub n_conditions: usize,
    pub ruleset: BinaryMetrics,
    pub model: BinaryMetrics,
    /// Rule set over model; null where the model's metric is zero.
    pub ratio: MetricRatios,
    pub fidelity: BinaryMetrics,
    /// Wall times, when the report comes from a run that measured them.
    pub extraction_ms: Option<f64>,
    pub solve_ms: Option<f64>,
}

impl EvalReport {
    pub fn compute(
        rules: &[ExplainedRule],
        clf: &RuleBasedClassifier,
        ens: &Ensemble,
        data: &Dataset,
    ) -> treerules_core::Result<Self> {
        let model = BinaryMetrics::from_predictions(data.labels(), &ens.predict_dataset(data)?);
        let ruleset = performance(clf, data);
        Ok(EvalReport {
            n_rules: rules.len(),
            n_conditions: rules.iter().map(|r| r.conditions.len()).sum(),
            ratio: ruleset.ratio_to(&model),
            ruleset,
            model,
            fidelity: fidelity(clf, ens, data)?,
            extraction_ms: None,
            solve_ms: None,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "rules       {}", self.n_rules);
        let _ = writeln!(s, "conditions  {}", self.n_conditions);
        metric_table(&mut s, &self.ruleset, &self.model, &self.ratio, &self.fidelity);
        if let (Some(e), Some(t)) = (self.extraction_ms, self.solve_ms) {
            let _ = writeln!(s, "extraction  {e:.1} ms");
            let _ = writeln!(s, "solve       {t:.1} ms");
        }
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "null".into(), |x| format!("{x:.4}"))
}

fn millis(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.1}"))
}

fn metric_table(s: &mut String, rs: &BinaryMetrics, model: &BinaryMetrics, ratio: &MetricRatios, fid: &BinaryMetrics) {
    let _ = writeln!(s, "{:<10} {:>9} {:>9} {:>9} {:>9}", "metric", "rule set", "model", "ratio", "fidelity");
    let rows = [
        ("accuracy", rs.accuracy, model.accuracy, ratio.accuracy, fid.accuracy),
        ("precision", rs.precision, model.precision, ratio.precision, fid.precision),
        ("recall", rs.recall, model.recall, ratio.recall, fid.recall),
        ("f1", rs.f1, model.f1, ratio.f1, fid.f1),
    ];
    for (name, a, b, r, f) in rows {
        let _ = writeln!(s, "{name:<10} {a:>9.4} {b:>9.4} {:>9} {f:>9.4}", opt(r));
    }
}

/// Local explanation quality on a validation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalEvalReport {
    pub n_rules: usize,
    pub n_conditions: usize,
    /// Null when no validation row is covered.
    pub local_precision: Option<f64>,
    pub local_coverage: f64,
}

impl LocalEvalReport {
    pub fn compute(expl: &LocalExplanation, ens: &Ensemble, validation: &Dataset) -> treerules_core::Result<Self> {
        Ok(LocalEvalReport {
            n_rules: expl.rules.len(),
            n_conditions: expl.rules.iter().map(|r| r.conditions.len()).sum(),
            local_precision: local_precision(expl, ens, validation)?,
            local_coverage: local_coverage(expl, validation),
        })
    }

    pub fn to_text(&self) -> String {
        format!(
            "rules            {}\nconditions       {}\nlocal precision  {}\nlocal coverage   {:.4}\n",
            self.n_rules,
            self.n_conditions,
            opt(self.local_precision),
            self.local_coverage
        )
    }
}

/// Mean of the present values; `None` if there are none.
pub fn mean_present(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.into_iter().flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    mean_present(values.into_iter().map(Some)).unwrap_or(0.0)
}

/// Field-wise mean over folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanReport {
    pub n_rules: f64,
    pub n_conditions: f64,
    pub ruleset: BinaryMetrics,
    pub model: BinaryMetrics,
    pub ratio: MetricRatios,
    pub fidelity: BinaryMetrics,
    pub extraction_ms: Option<f64>,
    pub solve_ms: Option<f64>,
}

fn mean_metrics<'a>(ms: impl Iterator<Item = &'a BinaryMetrics> + Clone) -> BinaryMetrics {
    BinaryMetrics {
        accuracy: mean(ms.clone().map(|m| m.accuracy)),
        precision: mean(ms.clone().map(|m| m.precision)),
        recall: mean(ms.clone().map(|m| m.recall)),
        f1: mean(ms.map(|m| m.f1)),
    }
}

impl MeanReport {
    pub fn of(reports: &[EvalReport]) -> Self {
        let r = reports.iter();
        MeanReport {
            n_rules: mean(r.clone().map(|e| e.n_rules as f64)),
            n_conditions: mean(r.clone().map(|e| e.n_conditions as f64)),
            ruleset: mean_metrics(r.clone().map(|e| &e.ruleset)),
            model: mean_metrics(r.clone().map(|e| &e.model)),
            ratio: MetricRatios {
                accuracy: mean_present(r.clone().map(|e| e.ratio.accuracy)),
                precision: mean_present(r.clone().map(|e| e.ratio.precision)),
                recall: mean_present(r.clone().map(|e| e.ratio.recall)),
                f1: mean_present(r.clone().map(|e| e.ratio.f1)),
            },
            fidelity: mean_metrics(r.clone().map(|e| &e.fidelity)),
            extraction_ms: mean_present(r.clone().map(|e| e.extraction_ms)),
            solve_ms: mean_present(r.map(|e| e.solve_ms)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub candidates: usize,
    pub eval: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossvalReport {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldReport>,
    pub mean: MeanReport,
}

impl CrossvalReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}-fold cross-validation, seed {}", self.k, self.seed);
        let _ = writeln!(
            s,
            "{:<6} {:>6} {:>6} {:>9} {:>9} {:>9} {:>9} {:>11} {:>9}",
            "fold", "cands", "rules", "conds", "acc.ratio", "f1.ratio", "fid.acc", "extract ms", "solve ms"
        );
        for f in &self.folds {
            let e = &f.eval;
            let _ = writeln!(
                s,
                "{:<6} {:>6} {:>6} {:>9} {:>9} {:>9} {:>9.4} {:>11} {:>9}",
                f.fold,
                f.candidates,
                e.n_rules,
                e.n_conditions,
                opt(e.ratio.accuracy),
                opt(e.ratio.f1),
                e.fidelity.accuracy,
                millis(e.extraction_ms),
                millis(e.solve_ms)
            );
        }
        let m = &self.mean;
        let _ = writeln!(
            s,
            "{:<6} {:>6} {:>6.1} {:>9.1} {:>9} {:>9} {:>9.4} {:>11} {:>9}",
            "mean",
            "",
            m.n_rules,
            m.n_conditions,
            opt(m.ratio.accuracy),
            opt(m.ratio.f1),
            m.fidelity.accuracy,
            millis(m.extraction_ms),
            millis(m.solve_ms)
        );
        let _ = writeln!(s);
        metric_table(&mut s, &m.ruleset, &m.model, &m.ratio, &m.fidelity);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn means_skip_missing_values() {
        assert_eq!(mean_present([Some(1.0), None, Some(0.5)]), Some(0.75));
        assert_eq!(mean_present([None, None]), None);
        assert_eq!(mean([]), 0.0);
    }
}

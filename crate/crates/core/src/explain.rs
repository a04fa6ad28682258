//! Global and local explanations: extraction, filtering and solving
//! composed into one call.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::dataset::{Dataset, Feature};
use crate::ensemble::{Ensemble, SplitCondition};
use crate::error::Result;
use crate::rules::{assemble, extract_rules, CandidateRuleSet, ExtractionMode, Rule, RuleMetrics, STUMP_WARNING};
use crate::selection::{
    filter_valid, solve_with_budget, Budget, DominanceMode, ObjectiveSpec, RuleSetSolution, SelectionConfig,
    SolveStatus, Unlimited, ValidityConfig, ValidityReport,
};

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExplainConfig {
    pub mode: ExtractionMode,
    pub selection: SelectionConfig,
}

impl ExplainConfig {
    /// Leaf rules, standard validity bounds, accuracy-coverage objective.
    pub fn global() -> Self {
        ExplainConfig { mode: ExtractionMode::LeafOnly, selection: SelectionConfig::default() }
    }

    /// No validity bounds or dominance, precision-coverage objective.
    pub fn local() -> Self {
        ExplainConfig {
            mode: ExtractionMode::LeafOnly,
            selection: SelectionConfig {
                validity: ValidityConfig::none(),
                dominance: DominanceMode::Off,
                objective: ObjectiveSpec::precision_coverage(),
                ..SelectionConfig::default()
            },
        }
    }
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self::global()
    }
}

/// A selected rule with its conditions resolved.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExplainedRule {
    pub rule: Rule,
    pub metrics: RuleMetrics,
    pub conditions: Vec<SplitCondition>,
}

impl ExplainedRule {
    pub fn from_candidates(crs: &CandidateRuleSet, id: u32) -> Self {
        ExplainedRule { rule: crs.rule(id).clone(), metrics: *crs.metrics_of(id), conditions: crs.body_conditions(id) }
    }

    pub fn covers(&self, row: &[f64]) -> bool {
        self.conditions.iter().all(|c| c.eval(row))
    }

    /// `class <name> ⇐ cond ∧ cond ...`
    pub fn render(&self, features: &[Feature], classes: &[String]) -> String {
        let mut s = String::new();
        let class = classes.get(self.rule.predicted_class).map(String::as_str).unwrap_or("?");
        let _ = write!(s, "class {class} ⇐ ");
        for (i, c) in self.conditions.iter().enumerate() {
            if i > 0 {
                s.push_str(" ∧ ");
            }
            let _ = write!(s, "{}", c.display_with(features));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GlobalExplanation {
    pub rules: Vec<ExplainedRule>,
    pub solution: RuleSetSolution,
    pub validity: ValidityReport,
    pub config: ExplainConfig,
    pub model_fingerprint: u64,
    pub candidate_count: usize,
    /// Why the rule set is empty, when it is.
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalExplanation {
    pub instance: Vec<f64>,
    pub model_prediction: usize,
    pub rules: Vec<ExplainedRule>,
    pub solution: RuleSetSolution,
    pub candidate_count: usize,
    pub reason: Option<String>,
}

fn empty_reason(crs: &CandidateRuleSet, sol: &RuleSetSolution) -> Option<String> {
    if crs.warnings.iter().any(|w| w == STUMP_WARNING) || crs.is_empty() {
        return Some(STUMP_WARNING.into());
    }
    match sol.status {
        SolveStatus::Infeasible => Some("infeasible".into()),
        SolveStatus::TimeoutBestKnown if sol.selected.is_empty() => Some("timeout".into()),
        _ => None,
    }
}

/// Select a rule set from precomputed candidates.
pub fn select_from_candidates(
    crs: &CandidateRuleSet,
    cfg: &SelectionConfig,
    budget: &mut dyn Budget,
) -> Result<(Vec<ExplainedRule>, RuleSetSolution, ValidityReport)> {
    let validity = filter_valid(crs, &cfg.validity);
    let sol = solve_with_budget(crs, cfg, budget)?;
    let rules = sol.selected.iter().map(|&id| ExplainedRule::from_candidates(crs, id)).collect();
    Ok((rules, sol, validity))
}

/// Rule set approximating the whole model. `data` is the training split.
pub fn explain_global(ens: &Ensemble, data: &Dataset, cfg: &ExplainConfig) -> Result<GlobalExplanation> {
    explain_global_with_budget(ens, data, cfg, &mut Unlimited)
}

pub fn explain_global_with_budget(
    ens: &Ensemble,
    data: &Dataset,
    cfg: &ExplainConfig,
    budget: &mut dyn Budget,
) -> Result<GlobalExplanation> {
    let crs = extract_rules(ens, data, cfg.mode)?;
    global_from_candidates(&crs, cfg, budget)
}

pub fn global_from_candidates(
    crs: &CandidateRuleSet,
    cfg: &ExplainConfig,
    budget: &mut dyn Budget,
) -> Result<GlobalExplanation> {
    let (rules, solution, validity) = select_from_candidates(crs, &cfg.selection, budget)?;
    Ok(GlobalExplanation {
        reason: empty_reason(crs, &solution),
        rules,
        solution,
        validity,
        config: cfg.clone(),
        model_fingerprint: crs.source,
        candidate_count: crs.len(),
    })
}

/// Candidates for explaining `instance`: the path rule of each active
/// leaf, all predicting the model's class, merged by body and scored on
/// `data`.
pub fn local_candidates(ens: &Ensemble, data: &Dataset, instance: &[f64]) -> Result<(usize, CandidateRuleSet)> {
    let prediction = ens.predict(instance)?;
    ens.check_dataset(data)?;
    let paths = ens
        .trees()
        .iter()
        .enumerate()
        .filter_map(|(k, t)| {
            let (leaf, path) = t.decision_path(instance);
            (!path.is_empty()).then(|| (path, (k, t.node(leaf).id)))
        })
        .collect();
    let mut crs = assemble(paths, Some(prediction), ens, data);
    if ens.is_stump_only() {
        crs.warnings.push(STUMP_WARNING.into());
    }
    Ok((prediction, crs))
}

/// Rule set explaining the model's prediction for `instance`.
pub fn explain_local(ens: &Ensemble, data: &Dataset, instance: &[f64], cfg: &ExplainConfig) -> Result<LocalExplanation> {
    explain_local_with_budget(ens, data, instance, cfg, &mut Unlimited)
}

pub fn explain_local_with_budget(
    ens: &Ensemble,
    data: &Dataset,
    instance: &[f64],
    cfg: &ExplainConfig,
    budget: &mut dyn Budget,
) -> Result<LocalExplanation> {
    let (prediction, crs) = local_candidates(ens, data, instance)?;
    let selection = SelectionConfig { classes: Some(alloc::vec![prediction]), ..cfg.selection.clone() };
    let (rules, solution, _) = select_from_candidates(&crs, &selection, budget)?;
    Ok(LocalExplanation {
        instance: instance.to_vec(),
        model_prediction: prediction,
        reason: empty_reason(&crs, &solution),
        rules,
        solution,
        candidate_count: crs.len(),
    })
}

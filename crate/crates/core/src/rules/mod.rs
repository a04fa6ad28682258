//! Candidate rules decomposed from tree paths, their metrics, and the
//! answer-set fact rendering.

mod extract;
mod facts;
mod metrics;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

pub(crate) use extract::assemble;
pub use extract::{assign_class, extract_rules, ExtractionMode, STUMP_WARNING};
pub use facts::{emit_facts, emit_facts_for};
pub use metrics::{compute_metrics, scale, Confusion, RuleMetrics};

use crate::dataset::Feature;
use crate::ensemble::SplitCondition;

/// Deduplicated split conditions with dense ids starting at 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(from = "Vec<SplitCondition>", into = "Vec<SplitCondition>"))]
pub struct ConditionTable {
    conditions: Vec<SplitCondition>,
    index: BTreeMap<SplitCondition, u32>,
}

impl ConditionTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Id of `cond`, allocating the next one if it is new.
    pub fn intern(&mut self, cond: &SplitCondition) -> u32 {
        if let Some(&id) = self.index.get(cond) {
            return id;
        }
        self.conditions.push(cond.clone());
        let id = self.conditions.len() as u32;
        self.index.insert(cond.clone(), id);
        id
    }

    pub fn id_of(&self, cond: &SplitCondition) -> Option<u32> {
        self.index.get(cond).copied()
    }

    /// Panics if `id` was not issued by this table.
    pub fn get(&self, id: u32) -> &SplitCondition {
        &self.conditions[id as usize - 1]
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    /// `(id, condition)` pairs in id order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &SplitCondition)> {
        self.conditions.iter().enumerate().map(|(i, c)| (i as u32 + 1, c))
    }
}

impl From<Vec<SplitCondition>> for ConditionTable {
    fn from(conds: Vec<SplitCondition>) -> Self {
        let mut t = ConditionTable::new();
        for c in &conds {
            t.intern(c);
        }
        t
    }
}

impl From<ConditionTable> for Vec<SplitCondition> {
    fn from(t: ConditionTable) -> Self {
        t.conditions
    }
}

/// `predicted_class <= body[0] ∧ body[1] ∧ ...`
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rule {
    pub id: u32,
    /// Condition ids in path order, without repeats.
    pub body: Vec<u32>,
    pub predicted_class: usize,
    /// Tree index and node id the rule was read from.
    pub origin: (usize, u32),
}

impl Rule {
    pub fn size(&self) -> usize {
        self.body.len()
    }

    /// Body ids in ascending order, the identity used for deduplication.
    pub fn sorted_body(&self) -> Vec<u32> {
        let mut b = self.body.clone();
        b.sort_unstable();
        b
    }
}

/// The candidate set `R` with its metric block `M`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CandidateRuleSet {
    /// Rule `i + 1` lives at position `i`.
    pub rules: Vec<Rule>,
    pub metrics: Vec<RuleMetrics>,
    pub conditions: ConditionTable,
    pub classes: Vec<String>,
    pub features: Vec<Feature>,
    /// Fingerprint of the ensemble schema the rules came from.
    pub source: u64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub warnings: Vec<String>,
}

impl CandidateRuleSet {
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn rule(&self, id: u32) -> &Rule {
        &self.rules[id as usize - 1]
    }

    pub fn metrics_of(&self, id: u32) -> &RuleMetrics {
        &self.metrics[id as usize - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Rule, &RuleMetrics)> {
        self.rules.iter().zip(&self.metrics)
    }

    /// Resolved conditions of rule `id`, in body order.
    pub fn body_conditions(&self, id: u32) -> Vec<SplitCondition> {
        self.rule(id).body.iter().map(|&c| self.conditions.get(c).clone()).collect()
    }

    /// Whether rule `id` covers `row`.
    pub fn covers(&self, id: u32, row: &[f64]) -> bool {
        self.rule(id).body.iter().all(|&c| self.conditions.get(c).eval(row))
    }

    /// Checks the structural invariants: dense ids, nonempty bodies with
    /// known conditions, one metrics block per rule, no duplicate bodies.
    pub fn check(&self) -> crate::Result<()> {
        use crate::Error;
        if self.metrics.len() != self.rules.len() {
            return Err(Error::MalformedModel("metrics and rules differ in length".into()));
        }
        let mut seen = BTreeMap::new();
        for (i, r) in self.rules.iter().enumerate() {
            if r.id as usize != i + 1 {
                return Err(Error::MalformedModel(alloc::format!("rule at position {i} has id {}", r.id)));
            }
            if r.body.is_empty() || r.body.iter().any(|&c| c == 0 || c as usize > self.conditions.len()) {
                return Err(Error::MalformedModel(alloc::format!("rule {} has an invalid body", r.id)));
            }
            if r.predicted_class >= self.classes.len() {
                return Err(Error::MalformedModel(alloc::format!("rule {} predicts unknown class", r.id)));
            }
            let key = r.sorted_body();
            if key.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::MalformedModel(alloc::format!("rule {} repeats a condition", r.id)));
            }
            if let Some(prev) = seen.insert(key, r.id) {
                return Err(Error::MalformedModel(alloc::format!("rules {prev} and {} share a body", r.id)));
            }
        }
        Ok(())
    }
}

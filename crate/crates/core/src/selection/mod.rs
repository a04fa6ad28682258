//! Rule-set selection: validity filtering, dominance, collective limits
//! and prioritized objectives, solved natively or exported as an
//! answer-set program.

mod asp;
mod objective;
mod solver;
mod validity;

use alloc::vec::Vec;

use num_rational::Ratio;

pub use asp::emit_asp_program;
pub use objective::{overlap, Arithmetic, Direction, Metric, ObjectiveSpec, ObjectiveTerm};
pub use solver::{selectable_rules, solve, solve_with_budget, Budget, NodeLimit, Unlimited};
pub use validity::{filter_valid, BoundKind, BoundReport, ValidityConfig, ValidityReport};

use crate::error::{Error, Result};
use crate::rules::RuleMetrics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DominanceMode {
    Off,
    /// Reject selections containing a rule beaten on accuracy and support.
    #[default]
    AccSupport,
}

/// Which valid rules may dominate a selected one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DominanceScope {
    /// Only rules predicting the same class.
    #[default]
    SameClass,
    /// Any valid rule, as the unrestricted encoding reads.
    AllValid,
}

/// Everything `solve` needs besides the candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SelectionConfig {
    pub validity: ValidityConfig,
    /// Upper bound `B` of the generator, per class.
    pub max_rules_per_class: usize,
    pub min_rules_per_class: usize,
    pub dominance: DominanceMode,
    pub dominance_scope: DominanceScope,
    /// Limit on the summed size of the selected rules.
    pub max_total_conditions: Option<u32>,
    pub objective: ObjectiveSpec,
    pub arithmetic: Arithmetic,
    pub minimize_overlap: bool,
    /// Classes that must receive rules; `None` means all of them. Rules of
    /// other classes are never selected.
    pub classes: Option<Vec<usize>>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            validity: ValidityConfig::standard(),
            max_rules_per_class: 3,
            min_rules_per_class: 1,
            dominance: DominanceMode::AccSupport,
            dominance_scope: DominanceScope::SameClass,
            max_total_conditions: None,
            objective: ObjectiveSpec::accuracy_coverage(),
            arithmetic: Arithmetic::AspParity,
            minimize_overlap: false,
            classes: None,
        }
    }
}

impl SelectionConfig {
    pub fn check(&self) -> Result<()> {
        if self.min_rules_per_class < 1 || self.min_rules_per_class > self.max_rules_per_class {
            return Err(Error::InvalidParameter(alloc::format!(
                "need 1 <= min_rules_per_class ({}) <= max_rules_per_class ({})",
                self.min_rules_per_class,
                self.max_rules_per_class
            )));
        }
        Ok(())
    }

    /// The objective with the overlap term added when requested.
    pub fn effective_objective(&self) -> ObjectiveSpec {
        if self.minimize_overlap {
            self.objective.with_overlap()
        } else {
            self.objective.clone()
        }
    }
}

/// `y` dominates `x`: strictly better on accuracy or support and no worse
/// on the other.
pub fn dominates(y: &RuleMetrics, x: &RuleMetrics) -> bool {
    (y.accuracy > x.accuracy && y.support >= x.support) || (y.accuracy >= x.accuracy && y.support > x.support)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// The budget ran out; the selection is the best found so far, if any.
    TimeoutBestKnown,
}

/// Score of one priority level. Larger is better; an answer-set solver
/// reports the negation as the level's cost.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObjectiveValue {
    pub priority: i32,
    /// Serialized as a string, `"7"` or `"-7/3"`.
    #[cfg_attr(feature = "serde", serde(with = "ratio_text"))]
    pub value: Ratio<i128>,
}

#[cfg(feature = "serde")]
mod ratio_text {
    use alloc::string::{String, ToString};
    use num_rational::Ratio;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Ratio<i128>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<i128>, D::Error> {
        let text = String::deserialize(d)?;
        let parse = |t: &str| t.trim().parse::<i128>().map_err(D::Error::custom);
        match text.split_once('/') {
            Some((n, m)) => {
                let den = parse(m)?;
                if den == 0 {
                    return Err(D::Error::custom("zero denominator"));
                }
                Ok(Ratio::new(parse(n)?, den))
            }
            None => Ok(Ratio::from_integer(parse(&text)?)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveStats {
    pub nodes: u64,
    pub passes: usize,
    /// Rules left after validity, class and dominance filtering.
    pub selectable: usize,
    /// Filled in by callers that have a clock.
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RuleSetSolution {
    /// Selected rule ids, ascending.
    pub selected: Vec<u32>,
    /// One entry per priority, highest first.
    pub objective_vector: Vec<ObjectiveValue>,
    pub status: SolveStatus,
    pub stats: SolveStats,
}

#[cfg(test)]
mod tests;

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::rules::{CandidateRuleSet, Rule, RuleMetrics};

/// Quantity an objective term sums over the selected rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Metric {
    Accuracy,
    Support,
    Size,
    Precision,
    Recall,
    /// `accuracy / (size * SR)` where `SR` is the number of selected rules.
    AvgAccPerSize,
    /// `precision / (size * SR)`.
    AvgPrecPerSize,
    /// `support / size`.
    SupportPerSize,
    /// `recall / size`.
    RecallPerSize,
    /// Shared condition count, summed over ordered pairs of selected rules.
    Overlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Direction {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObjectiveTerm {
    pub metric: Metric,
    pub direction: Direction,
    #[cfg_attr(feature = "serde", serde(default))]
    pub priority: i32,
}

/// Prioritized objective terms. Terms sharing a priority form one sum;
/// higher priorities dominate lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObjectiveSpec {
    pub terms: Vec<ObjectiveTerm>,
}

/// How ratio terms and repeated weights are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Arithmetic {
    /// Answer-set semantics: truncating integer division, and within one
    /// priority level identical `(weight, rule)` tuples count once.
    #[default]
    AspParity,
    /// Exact fractions and plain sums.
    ExactRational,
}

fn term(metric: Metric, direction: Direction, priority: i32) -> ObjectiveTerm {
    ObjectiveTerm { metric, direction, priority }
}

impl ObjectiveSpec {
    pub const PRESETS: [&'static str; 4] = ["accuracy-coverage", "precision-coverage", "precision-recall", "sums"];

    /// Average accuracy per condition, then support per condition.
    pub fn accuracy_coverage() -> Self {
        ObjectiveSpec {
            terms: alloc::vec![
                term(Metric::AvgAccPerSize, Direction::Max, 3),
                term(Metric::SupportPerSize, Direction::Max, 2),
            ],
        }
    }

    pub fn precision_coverage() -> Self {
        ObjectiveSpec {
            terms: alloc::vec![
                term(Metric::AvgPrecPerSize, Direction::Max, 3),
                term(Metric::SupportPerSize, Direction::Max, 2),
            ],
        }
    }

    pub fn precision_recall() -> Self {
        ObjectiveSpec {
            terms: alloc::vec![
                term(Metric::AvgPrecPerSize, Direction::Max, 3),
                term(Metric::RecallPerSize, Direction::Max, 2),
            ],
        }
    }

    /// Maximize total accuracy and support, minimize total size, all in
    /// one unprioritized sum.
    pub fn sums() -> Self {
        ObjectiveSpec {
            terms: alloc::vec![
                term(Metric::Accuracy, Direction::Max, 0),
                term(Metric::Support, Direction::Max, 0),
                term(Metric::Size, Direction::Min, 0),
            ],
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "accuracy-coverage" => Some(Self::accuracy_coverage()),
            "precision-coverage" => Some(Self::precision_coverage()),
            "precision-recall" => Some(Self::precision_recall()),
            "sums" => Some(Self::sums()),
            _ => None,
        }
    }

    /// Distinct priorities, highest first.
    pub fn levels(&self) -> Vec<i32> {
        let set: BTreeSet<i32> = self.terms.iter().map(|t| t.priority).collect();
        set.into_iter().rev().collect()
    }

    pub fn has_overlap(&self) -> bool {
        self.terms.iter().any(|t| t.metric == Metric::Overlap)
    }

    pub fn uses_rule_count(&self) -> bool {
        self.terms.iter().any(|t| matches!(t.metric, Metric::AvgAccPerSize | Metric::AvgPrecPerSize))
    }

    /// Copy with an overlap-minimizing term at priority 0 appended, unless
    /// an overlap term is already present.
    pub fn with_overlap(&self) -> Self {
        let mut s = self.clone();
        if !s.has_overlap() {
            s.terms.push(term(Metric::Overlap, Direction::Min, 0));
        }
        s
    }
}

/// Number of condition ids two rules share.
pub fn overlap(x: &Rule, y: &Rule) -> usize {
    x.body.iter().filter(|c| y.body.contains(c)).count()
}

/// `num / den` scaled by `scale`, either truncated or exact. With exact
/// arithmetic `scale` must be a multiple of `den`.
fn ratio(num: i128, den: i128, scale: i128, arith: Arithmetic) -> i128 {
    match arith {
        Arithmetic::AspParity => num / den * scale,
        Arithmetic::ExactRational => num * (scale / den),
    }
}

/// Unsigned per-rule weight of a non-overlap term, multiplied by `scale`.
pub(crate) fn term_weight(metric: Metric, m: &RuleMetrics, sr: i128, scale: i128, arith: Arithmetic) -> i128 {
    let size = m.size as i128;
    match metric {
        Metric::Accuracy => m.accuracy as i128 * scale,
        Metric::Support => m.support as i128 * scale,
        Metric::Size => size * scale,
        Metric::Precision => m.precision as i128 * scale,
        Metric::Recall => m.recall as i128 * scale,
        Metric::AvgAccPerSize => ratio(m.accuracy as i128, size * sr, scale, arith),
        Metric::AvgPrecPerSize => ratio(m.precision as i128, size * sr, scale, arith),
        Metric::SupportPerSize => ratio(m.support as i128, size, scale, arith),
        Metric::RecallPerSize => ratio(m.recall as i128, size, scale, arith),
        Metric::Overlap => 0,
    }
}

fn signed(direction: Direction, w: i128) -> i128 {
    match direction {
        Direction::Max => w,
        Direction::Min => -w,
    }
}

/// Per-level signed score of one rule from its non-overlap terms.
pub(crate) fn rule_level_weights(
    spec: &ObjectiveSpec,
    levels: &[i32],
    m: &RuleMetrics,
    sr: i128,
    scale: i128,
    arith: Arithmetic,
) -> Vec<i128> {
    levels
        .iter()
        .map(|&p| {
            let values = spec
                .terms
                .iter()
                .filter(|t| t.priority == p && t.metric != Metric::Overlap)
                .map(|t| signed(t.direction, term_weight(t.metric, m, sr, scale, arith)));
            match arith {
                Arithmetic::ExactRational => values.sum(),
                Arithmetic::AspParity => values.collect::<BTreeSet<i128>>().into_iter().sum(),
            }
        })
        .collect()
}

/// Score vector (highest priority first, larger is better) of `selected`,
/// multiplied by `scale`. `sr` is the selected-rule count used by the
/// per-rule averages.
pub(crate) fn evaluate_scaled(
    crs: &CandidateRuleSet,
    spec: &ObjectiveSpec,
    levels: &[i32],
    selected: &[u32],
    sr: i128,
    scale: i128,
    arith: Arithmetic,
) -> Vec<i128> {
    let mut out = alloc::vec![0i128; levels.len()];
    for (li, &p) in levels.iter().enumerate() {
        let overlap_dirs: Vec<Direction> =
            spec.terms.iter().filter(|t| t.priority == p && t.metric == Metric::Overlap).map(|t| t.direction).collect();
        for &x in selected {
            let m = crs.metrics_of(x);
            let mut values: Vec<i128> = spec
                .terms
                .iter()
                .filter(|t| t.priority == p && t.metric != Metric::Overlap)
                .map(|t| signed(t.direction, term_weight(t.metric, m, sr, scale, arith)))
                .collect();
            for &d in &overlap_dirs {
                for &y in selected.iter().filter(|&&y| y != x) {
                    values.push(signed(d, overlap(crs.rule(x), crs.rule(y)) as i128 * scale));
                }
            }
            out[li] += match arith {
                Arithmetic::ExactRational => values.iter().sum::<i128>(),
                Arithmetic::AspParity => values.into_iter().collect::<BTreeSet<i128>>().into_iter().sum(),
            };
        }
    }
    out
}

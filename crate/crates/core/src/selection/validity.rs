use alloc::vec::Vec;

use crate::rules::{CandidateRuleSet, RuleMetrics};

/// Per-rule bounds; a rule violating any active bound is invalid.
/// All values are on the 0..=100 metric scale except `max_size`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ValidityConfig {
    pub max_size: Option<u32>,
    pub max_error_rate: Option<u32>,
    pub min_precision: Option<u32>,
    pub min_recall: Option<u32>,
    pub min_support: Option<u32>,
    pub min_accuracy: Option<u32>,
    pub min_f1: Option<u32>,
}

/// One kind of per-rule bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BoundKind {
    MaxSize,
    MaxErrorRate,
    MinPrecision,
    MinRecall,
    MinSupport,
    MinAccuracy,
    MinF1,
}

impl BoundKind {
    pub const ALL: [BoundKind; 7] = [
        BoundKind::MaxSize,
        BoundKind::MaxErrorRate,
        BoundKind::MinPrecision,
        BoundKind::MinRecall,
        BoundKind::MinSupport,
        BoundKind::MinAccuracy,
        BoundKind::MinF1,
    ];

    pub fn metric(self, m: &RuleMetrics) -> u32 {
        match self {
            BoundKind::MaxSize => m.size,
            BoundKind::MaxErrorRate => m.error_rate,
            BoundKind::MinPrecision => m.precision,
            BoundKind::MinRecall => m.recall,
            BoundKind::MinSupport => m.support,
            BoundKind::MinAccuracy => m.accuracy,
            BoundKind::MinF1 => m.f1,
        }
    }

    /// Upper bounds invalidate values above them, lower bounds values below.
    pub fn is_upper(self) -> bool {
        matches!(self, BoundKind::MaxSize | BoundKind::MaxErrorRate)
    }

    pub fn violated(self, bound: u32, value: u32) -> bool {
        if self.is_upper() {
            value > bound
        } else {
            value < bound
        }
    }

    /// Fact predicate and variable name used in the answer-set encoding.
    pub fn predicate(self) -> (&'static str, &'static str) {
        match self {
            BoundKind::MaxSize => ("size", "S"),
            BoundKind::MaxErrorRate => ("error_rate", "E"),
            BoundKind::MinPrecision => ("precision", "P"),
            BoundKind::MinRecall => ("recall", "R"),
            BoundKind::MinSupport => ("support", "Sp"),
            BoundKind::MinAccuracy => ("accuracy", "A"),
            BoundKind::MinF1 => ("f1_score", "F"),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::MaxSize => "max_size",
            BoundKind::MaxErrorRate => "max_error_rate",
            BoundKind::MinPrecision => "min_precision",
            BoundKind::MinRecall => "min_recall",
            BoundKind::MinSupport => "min_support",
            BoundKind::MinAccuracy => "min_accuracy",
            BoundKind::MinF1 => "min_f1",
        }
    }
}

impl ValidityConfig {
    /// No bound active: every rule is valid.
    pub fn none() -> Self {
        Self::default()
    }

    /// The bounds used for the published global experiments.
    pub fn standard() -> Self {
        ValidityConfig {
            max_size: Some(10),
            max_error_rate: Some(70),
            min_precision: Some(2),
            min_recall: Some(2),
            min_support: Some(2),
            min_accuracy: None,
            min_f1: None,
        }
    }

    pub fn get(&self, kind: BoundKind) -> Option<u32> {
        match kind {
            BoundKind::MaxSize => self.max_size,
            BoundKind::MaxErrorRate => self.max_error_rate,
            BoundKind::MinPrecision => self.min_precision,
            BoundKind::MinRecall => self.min_recall,
            BoundKind::MinSupport => self.min_support,
            BoundKind::MinAccuracy => self.min_accuracy,
            BoundKind::MinF1 => self.min_f1,
        }
    }

    /// Active bounds in a fixed order.
    pub fn active(&self) -> impl Iterator<Item = (BoundKind, u32)> + '_ {
        BoundKind::ALL.into_iter().filter_map(|k| self.get(k).map(|b| (k, b)))
    }

    pub fn is_valid(&self, m: &RuleMetrics) -> bool {
        self.active().all(|(k, b)| !k.violated(b, k.metric(m)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundReport {
    pub kind: BoundKind,
    pub bound: u32,
    /// Rules this bound alone rules out.
    pub eliminated: usize,
    /// Largest (lower bounds) or smallest (upper bounds) value among the
    /// candidates; `None` for an empty candidate set.
    pub limit: Option<u32>,
    /// Whether the bound leaves at least one rule standing on its own.
    pub safe: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidityReport {
    /// Valid rule ids, ascending.
    pub valid: Vec<u32>,
    pub bounds: Vec<BoundReport>,
}

impl ValidityReport {
    pub fn unsafe_bounds(&self) -> impl Iterator<Item = &BoundReport> {
        self.bounds.iter().filter(|b| !b.safe)
    }
}

/// Apply `cfg` to every candidate and check each bound against the limits
/// that keep at least one rule valid.
pub fn filter_valid(crs: &CandidateRuleSet, cfg: &ValidityConfig) -> ValidityReport {
    let valid = crs.iter().filter(|(_, m)| cfg.is_valid(m)).map(|(r, _)| r.id).collect();
    let bounds = cfg
        .active()
        .map(|(kind, bound)| {
            let values = crs.metrics.iter().map(|m| kind.metric(m));
            let limit = if kind.is_upper() { values.min() } else { values.max() };
            let eliminated = crs.metrics.iter().filter(|m| kind.violated(bound, kind.metric(m))).count();
            let safe = limit.is_some_and(|l| if kind.is_upper() { bound >= l } else { bound <= l });
            BoundReport { kind, bound, eliminated, limit, safe }
        })
        .collect();
    ValidityReport { valid, bounds }
}

//! Decompose binary-split tree ensembles into candidate rules, select small
//! rule sets under validity, dominance and collective constraints with
//! prioritized objectives, and score the resulting global and local
//! explanations.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! wall-clock budgets live in the `treerules` companion crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod bitset;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod evaluate;
pub mod explain;
pub mod rules;
pub mod selection;

pub use dataset::{Dataset, Feature, FeatureKind, FoldPlan, RawTable, Schema};
pub use ensemble::{Aggregation, Ensemble, Node, NodeKind, SplitCondition, SplitOp, Tree};
pub use error::{Error, Result};
pub use evaluate::{BinaryMetrics, RuleBasedClassifier};
pub use explain::{ExplainConfig, GlobalExplanation, LocalExplanation};
pub use rules::{CandidateRuleSet, ConditionTable, ExtractionMode, Rule, RuleMetrics};
pub use selection::{
    ObjectiveSpec, RuleSetSolution, SelectionConfig, SolveStatus, ValidityConfig,
};

//! Binary-split decision-tree ensembles: representation, prediction,
//! active-leaf tracing and desk-scale trainers.

mod condition;
pub mod train;
mod tree;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use condition::{SplitCondition, SplitOp};
pub use train::{train_decision_tree, train_gbdt, train_random_forest, ForestParams, GbdtParams, TreeParams};
pub use tree::{Node, NodeKind, Tree};

use crate::dataset::{argmax_lowest, fingerprint_of, Dataset, Feature, FeatureKind};
use crate::error::{Error, Result};

/// How per-tree outputs combine into a prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aggregation {
    /// Each tree votes for the argmax of its leaf's class counts.
    MajorityVote,
    /// Binary only: class 1 iff `logistic(base_score + Σ leaf values) ≥ 0.5`.
    ScoreSum { base_score: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    trees: Vec<Tree>,
    aggregation: Aggregation,
    features: Vec<Feature>,
    classes: Vec<String>,
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

fn argmax_f64(counts: &[f64]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

impl Ensemble {
    pub fn new(
        trees: Vec<Tree>,
        aggregation: Aggregation,
        features: Vec<Feature>,
        classes: Vec<String>,
    ) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::MalformedModel("ensemble has no trees".into()));
        }
        if classes.is_empty() {
            return Err(Error::MalformedModel("ensemble has no classes".into()));
        }
        if matches!(aggregation, Aggregation::ScoreSum { .. }) && classes.len() != 2 {
            return Err(Error::Unsupported("score_sum aggregation is binary only".into()));
        }
        for (k, tree) in trees.iter().enumerate() {
            for node in tree.nodes() {
                match &node.kind {
                    NodeKind::Leaf { class_counts, .. } => {
                        if class_counts.len() != classes.len() {
                            return Err(Error::MalformedModel(alloc::format!(
                                "tree {k}, node {}: {} class counts for {} classes",
                                node.id,
                                class_counts.len(),
                                classes.len()
                            )));
                        }
                    }
                    NodeKind::Internal { condition, .. } => {
                        check_condition(condition, &features).map_err(|msg| {
                            Error::MalformedModel(alloc::format!("tree {k}, node {}: {msg}", node.id))
                        })?;
                    }
                }
            }
        }
        Ok(Ensemble { trees, aggregation, features, classes })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn aggregation(&self) -> Aggregation {
        self.aggregation
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn fingerprint(&self) -> u64 {
        fingerprint_of(&self.features, &self.classes)
    }

    pub fn is_stump_only(&self) -> bool {
        self.trees.iter().all(Tree::is_stump)
    }

    /// Error unless `data` was built for the same features and classes.
    pub fn check_dataset(&self, data: &Dataset) -> Result<()> {
        if data.schema().fingerprint() != self.fingerprint() {
            return Err(Error::SchemaMismatch("dataset schema differs from the model's".into()));
        }
        Ok(())
    }

    fn check_instance(&self, instance: &[f64]) -> Result<()> {
        if instance.len() != self.features.len() {
            return Err(Error::SchemaMismatch(alloc::format!(
                "instance has {} values, model expects {}",
                instance.len(),
                self.features.len()
            )));
        }
        Ok(())
    }

    /// One `(tree index, leaf position)` per tree, in tree order.
    pub fn active_leaves(&self, instance: &[f64]) -> Result<Vec<(usize, usize)>> {
        self.check_instance(instance)?;
        Ok(self.trees.iter().enumerate().map(|(k, t)| (k, t.leaf_for(instance))).collect())
    }

    /// Additive score before the link function (`ScoreSum` only).
    pub fn margin(&self, instance: &[f64]) -> Result<f64> {
        self.check_instance(instance)?;
        let base = match self.aggregation {
            Aggregation::ScoreSum { base_score } => base_score,
            Aggregation::MajorityVote => {
                return Err(Error::Unsupported("margin is defined for score_sum ensembles".into()))
            }
        };
        Ok(self.trees.iter().fold(base, |acc, t| acc + leaf_value(t, t.leaf_for(instance))))
    }

    /// Predicted class index.
    pub fn predict(&self, instance: &[f64]) -> Result<usize> {
        let leaves = self.active_leaves(instance)?;
        Ok(self.predict_from_leaves(&leaves))
    }

    /// Aggregate a precomputed set of active leaves.
    pub fn predict_from_leaves(&self, leaves: &[(usize, usize)]) -> usize {
        match self.aggregation {
            Aggregation::MajorityVote => {
                let mut votes = vec![0usize; self.classes.len()];
                for &(k, pos) in leaves {
                    if let NodeKind::Leaf { class_counts, .. } = &self.trees[k].node(pos).kind {
                        votes[argmax_f64(class_counts)] += 1;
                    }
                }
                argmax_lowest(&votes)
            }
            Aggregation::ScoreSum { base_score } => {
                let margin = leaves
                    .iter()
                    .fold(base_score, |acc, &(k, pos)| acc + leaf_value(&self.trees[k], pos));
                usize::from(logistic(margin) >= 0.5)
            }
        }
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<usize>> {
        self.check_dataset(data)?;
        data.rows().map(|r| self.predict(r)).collect()
    }
}

fn leaf_value(tree: &Tree, pos: usize) -> f64 {
    match &tree.node(pos).kind {
        NodeKind::Leaf { value, .. } => *value,
        NodeKind::Internal { .. } => 0.0,
    }
}

fn check_condition(cond: &SplitCondition, features: &[Feature]) -> core::result::Result<(), String> {
    let Some(f) = features.get(cond.feature) else {
        return Err(alloc::format!("feature {} out of range", cond.feature));
    };
    match (&cond.op, f.kind) {
        (SplitOp::Le { threshold } | SplitOp::Gt { threshold }, FeatureKind::Continuous) => {
            if threshold.is_nan() {
                return Err("NaN threshold".into());
            }
            Ok(())
        }
        (SplitOp::In { values } | SplitOp::NotIn { values }, FeatureKind::Categorical) => {
            if values.is_empty() {
                return Err("empty category set".into());
            }
            if !f.categories.is_empty() && values.iter().any(|&v| v as usize >= f.categories.len()) {
                return Err(alloc::format!("category code outside vocabulary of `{}`", f.name));
            }
            Ok(())
        }
        _ => Err(alloc::format!("operator does not match kind of feature `{}`", f.name)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features() -> Vec<Feature> {
        vec![Feature::continuous("x")]
    }

    fn classes() -> Vec<String> {
        vec!["neg".into(), "pos".into()]
    }

    fn one_split(counts_left: [f64; 2], counts_right: [f64; 2], values: (f64, f64)) -> Tree {
        Tree::new(
            vec![
                Node { id: 0, kind: NodeKind::Internal { condition: SplitCondition::le(0, 0.5), left: 1, right: 2 } },
                Node { id: 1, kind: NodeKind::Leaf { class_counts: counts_left.to_vec(), value: values.0 } },
                Node { id: 2, kind: NodeKind::Leaf { class_counts: counts_right.to_vec(), value: values.1 } },
            ],
            0,
        )
        .unwrap()
    }

    #[test]
    fn single_tree_predicts_leaf_argmax() {
        let t = one_split([3.0, 7.0], [9.0, 1.0], (0.0, 0.0));
        let e = Ensemble::new(vec![t], Aggregation::MajorityVote, features(), classes()).unwrap();
        assert_eq!(e.predict(&[0.0]).unwrap(), 1);
        assert_eq!(e.predict(&[1.0]).unwrap(), 0);
        // threshold value itself goes left
        assert_eq!(e.active_leaves(&[0.5]).unwrap(), vec![(0, 1)]);
    }

    #[test]
    fn vote_tie_goes_to_lowest_class() {
        let a = Tree::stump(vec![1.0, 0.0], 0.0);
        let b = Tree::stump(vec![0.0, 1.0], 0.0);
        let e = Ensemble::new(vec![a, b], Aggregation::MajorityVote, features(), classes()).unwrap();
        assert_eq!(e.predict(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn three_trees_vote() {
        let trees = vec![
            Tree::stump(vec![1.0, 0.0], 0.0),
            Tree::stump(vec![0.0, 1.0], 0.0),
            Tree::stump(vec![0.0, 1.0], 0.0),
        ];
        let e = Ensemble::new(trees, Aggregation::MajorityVote, features(), classes()).unwrap();
        assert_eq!(e.predict(&[0.0]).unwrap(), 1);
    }

    #[test]
    fn score_sum_zero_margin_is_positive() {
        let e = Ensemble::new(
            vec![Tree::stump(vec![1.0, 1.0], 0.0)],
            Aggregation::ScoreSum { base_score: 0.0 },
            features(),
            classes(),
        )
        .unwrap();
        assert_eq!(logistic(e.margin(&[3.0]).unwrap()), 0.5);
        assert_eq!(e.predict(&[3.0]).unwrap(), 1);
        let t = one_split([1.0, 0.0], [0.0, 1.0], (-0.7, 0.4));
        let e = Ensemble::new(vec![t], Aggregation::ScoreSum { base_score: 0.1 }, features(), classes()).unwrap();
        assert_eq!(e.predict(&[0.0]).unwrap(), 0);
        assert_eq!(e.predict(&[1.0]).unwrap(), 1);
    }

    #[test]
    fn rejects_schema_mismatch_and_bad_conditions() {
        let e = Ensemble::new(vec![Tree::stump(vec![1.0, 0.0], 0.0)], Aggregation::MajorityVote, features(), classes())
            .unwrap();
        assert!(matches!(e.predict(&[1.0, 2.0]), Err(Error::SchemaMismatch(_))));
        let bad = Tree::new(
            vec![
                Node { id: 0, kind: NodeKind::Internal { condition: SplitCondition::is_in(0, [1]), left: 1, right: 2 } },
                Node { id: 1, kind: NodeKind::Leaf { class_counts: vec![1.0, 0.0], value: 0.0 } },
                Node { id: 2, kind: NodeKind::Leaf { class_counts: vec![1.0, 0.0], value: 0.0 } },
            ],
            0,
        )
        .unwrap();
        assert!(Ensemble::new(vec![bad], Aggregation::MajorityVote, features(), classes()).is_err());
        assert!(Ensemble::new(vec![], Aggregation::MajorityVote, features(), classes()).is_err());
    }
}

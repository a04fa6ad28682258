use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::metrics::compute_metrics;
use super::{CandidateRuleSet, ConditionTable, Rule};
use crate::bitset::BitSet;
use crate::dataset::{argmax_lowest, Dataset};
use crate::ensemble::{Ensemble, SplitCondition};
use crate::error::{Error, Result};

/// Warning attached to candidate sets drawn from split-free ensembles.
pub const STUMP_WARNING: &str = "stump";

/// Which tree nodes become rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ExtractionMode {
    /// One rule per leaf.
    #[default]
    LeafOnly,
    /// One rule per non-root node, leaves included.
    AllNodes,
}

/// Decompose every tree into path rules and compute their metrics on
/// `data`, which should be the training split.
///
/// A left child inherits its parent's condition, a right child the
/// negation. Rules whose bodies coincide as condition sets are merged,
/// keeping the earliest tree. Ensembles without any split give an empty
/// set carrying [`STUMP_WARNING`].
pub fn extract_rules(ens: &Ensemble, data: &Dataset, mode: ExtractionMode) -> Result<CandidateRuleSet> {
    if data.is_empty() {
        return Err(Error::InvalidParameter("cannot extract rules against an empty dataset".into()));
    }
    ens.check_dataset(data)?;
    let mut paths = Vec::new();
    for (k, tree) in ens.trees().iter().enumerate() {
        tree.for_each_path(|pos, path| {
            let node = tree.node(pos);
            if path.is_empty() || (mode == ExtractionMode::LeafOnly && !node.is_leaf()) {
                return;
            }
            paths.push((path.to_vec(), (k, node.id)));
        });
    }
    let mut set = assemble(paths, None, ens, data);
    if ens.is_stump_only() {
        set.warnings.push(STUMP_WARNING.into());
    }
    Ok(set)
}

/// Class with the most covered rows of `data`, lowest index on ties, or
/// the dataset majority when nothing is covered.
pub fn assign_class(body: &[SplitCondition], data: &Dataset) -> usize {
    let mut counts = vec![0usize; data.n_classes()];
    for (i, row) in data.rows().enumerate() {
        if body.iter().all(|c| c.eval(row)) {
            counts[data.label(i)] += 1;
        }
    }
    class_from_counts(&counts, data)
}

fn class_from_counts(counts: &[usize], data: &Dataset) -> usize {
    if counts.iter().all(|&c| c == 0) {
        data.majority_class()
    } else {
        argmax_lowest(counts)
    }
}

/// Build a candidate set from raw paths, in the given order. With
/// `class_override` every rule predicts that class instead of its covered
/// majority.
pub(crate) fn assemble(
    paths: Vec<(Vec<SplitCondition>, (usize, u32))>,
    class_override: Option<usize>,
    ens: &Ensemble,
    data: &Dataset,
) -> CandidateRuleSet {
    let mut conditions = ConditionTable::new();
    let mut seen = BTreeSet::new();
    let mut bodies: Vec<(Vec<u32>, (usize, u32))> = Vec::new();
    for (path, origin) in paths {
        let mut body: Vec<u32> = Vec::with_capacity(path.len());
        for c in &path {
            let id = conditions.intern(c);
            if !body.contains(&id) {
                body.push(id);
            }
        }
        let mut key = body.clone();
        key.sort_unstable();
        if seen.insert(key) {
            bodies.push((body, origin));
        }
    }

    let masks: Vec<BitSet> = conditions
        .iter()
        .map(|(_, c)| {
            let mut m = BitSet::new(data.n());
            for (i, row) in data.rows().enumerate() {
                if c.eval(row) {
                    m.insert(i);
                }
            }
            m
        })
        .collect();

    let mut rules = Vec::with_capacity(bodies.len());
    let mut metrics = Vec::with_capacity(bodies.len());
    for (i, (body, origin)) in bodies.into_iter().enumerate() {
        let mut covered = BitSet::full(data.n());
        for &c in &body {
            covered.intersect_with(&masks[c as usize - 1]);
        }
        let class = match class_override {
            Some(c) => c,
            None => {
                let mut counts = vec![0usize; data.n_classes()];
                for r in covered.iter() {
                    counts[data.label(r)] += 1;
                }
                class_from_counts(&counts, data)
            }
        };
        metrics.push(compute_metrics(body.len(), class, &covered, data.labels()));
        rules.push(Rule { id: i as u32 + 1, body, predicted_class: class, origin });
    }
    CandidateRuleSet {
        rules,
        metrics,
        conditions,
        classes: ens.classes().to_vec(),
        features: ens.features().to_vec(),
        source: ens.fingerprint(),
        warnings: Vec::<String>::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Feature, Schema};
    use crate::ensemble::{Aggregation, Node, NodeKind, Tree};
    use alloc::string::ToString;

    fn leaf(id: u32, counts: [f64; 2]) -> Node {
        Node { id, kind: NodeKind::Leaf { class_counts: counts.to_vec(), value: 0.0 } }
    }

    fn split(id: u32, f: usize, t: f64, left: usize, right: usize) -> Node {
        Node { id, kind: NodeKind::Internal { condition: SplitCondition::le(f, t), left, right } }
    }

    fn features() -> Vec<Feature> {
        (1..=4).map(|i| Feature::continuous(alloc::format!("x{i}"))).collect()
    }

    // Left tree of the two-tree illustration: x1 <= 0.2, then x2 <= 4.5,
    // then x4 <= 2 with leaves 1 and 2 under it.
    fn left_tree() -> Tree {
        Tree::new(
            vec![
                split(100, 0, 0.2, 1, 6),
                split(101, 1, 4.5, 2, 5),
                split(102, 3, 2.0, 3, 4),
                leaf(1, [0.0, 5.0]),
                leaf(2, [4.0, 0.0]),
                leaf(3, [1.0, 1.0]),
                split(103, 2, 1.0, 7, 8),
                leaf(4, [3.0, 0.0]),
                leaf(5, [0.0, 3.0]),
            ],
            0,
        )
        .unwrap()
    }

    fn right_tree() -> Tree {
        Tree::new(
            vec![
                split(200, 2, 3.0, 1, 2),
                split(201, 0, 0.5, 3, 4),
                split(202, 3, 1.0, 5, 6),
                leaf(6, [0.0, 2.0]),
                leaf(7, [2.0, 0.0]),
                leaf(8, [1.0, 0.0]),
                leaf(9, [0.0, 1.0]),
            ],
            0,
        )
        .unwrap()
    }

    fn data() -> Dataset {
        let schema = Schema { features: features(), label: "y".into(), classes: vec!["0".to_string(), "1".to_string()] };
        // rows routed to left-tree leaf 1 are class 1, to leaf 2 class 0
        let rows: [([f64; 4], usize); 6] = [
            ([0.1, 4.0, 0.0, 1.0], 1),
            ([0.0, 1.0, 5.0, 2.0], 1),
            ([0.2, 3.0, 0.0, 3.0], 0),
            ([0.9, 9.0, 0.5, 5.0], 0),
            ([0.9, 9.0, 2.5, 0.0], 1),
            ([0.1, 9.0, 9.0, 0.0], 0),
        ];
        Dataset::new(schema, rows.iter().flat_map(|r| r.0).collect(), rows.iter().map(|r| r.1).collect()).unwrap()
    }

    fn ensemble() -> Ensemble {
        Ensemble::new(
            vec![left_tree(), right_tree()],
            Aggregation::MajorityVote,
            features(),
            vec!["0".into(), "1".into()],
        )
        .unwrap()
    }

    #[test]
    fn path_rules_follow_branch_sides() {
        let crs = extract_rules(&ensemble(), &data(), ExtractionMode::LeafOnly).unwrap();
        assert_eq!(
            crs.body_conditions(1),
            vec![SplitCondition::le(0, 0.2), SplitCondition::le(1, 4.5), SplitCondition::le(3, 2.0)]
        );
        assert_eq!(crs.rule(1).predicted_class, 1);
        assert_eq!(crs.rule(1).body, vec![1, 2, 3]);
        assert_eq!(
            crs.body_conditions(2),
            vec![SplitCondition::le(0, 0.2), SplitCondition::le(1, 4.5), SplitCondition::gt(3, 2.0)]
        );
        assert_eq!(crs.rule(2).predicted_class, 0);
        assert_eq!(crs.rule(2).origin, (0, 2));
    }

    #[test]
    fn one_rule_per_leaf() {
        let crs = extract_rules(&ensemble(), &data(), ExtractionMode::LeafOnly).unwrap();
        assert_eq!(crs.len(), 9);
        let origins: Vec<u32> = crs.rules.iter().map(|r| r.origin.1).collect();
        assert_eq!(origins, (1..=9).collect::<Vec<_>>());
        crs.check().unwrap();
    }

    #[test]
    fn all_nodes_adds_internal_prefixes() {
        let crs = extract_rules(&ensemble(), &data(), ExtractionMode::AllNodes).unwrap();
        // 8 non-root nodes in the left tree, 6 in the right
        assert_eq!(crs.len(), 14);
    }

    #[test]
    fn duplicate_trees_merge_to_earliest() {
        let e = Ensemble::new(
            vec![left_tree(), left_tree()],
            Aggregation::MajorityVote,
            features(),
            vec!["0".into(), "1".into()],
        )
        .unwrap();
        let crs = extract_rules(&e, &data(), ExtractionMode::LeafOnly).unwrap();
        assert_eq!(crs.len(), 5);
        assert!(crs.rules.iter().all(|r| r.origin.0 == 0));
    }

    #[test]
    fn stumps_give_empty_set_with_warning() {
        let e = Ensemble::new(
            vec![Tree::stump(vec![1.0, 2.0], 0.0)],
            Aggregation::MajorityVote,
            features(),
            vec!["0".into(), "1".into()],
        )
        .unwrap();
        let crs = extract_rules(&e, &data(), ExtractionMode::LeafOnly).unwrap();
        assert!(crs.is_empty());
        assert_eq!(crs.warnings, vec![STUMP_WARNING.to_string()]);
    }

    #[test]
    fn class_assignment_rules() {
        let d = data();
        assert_eq!(assign_class(&[SplitCondition::le(0, 0.15)], &d), 1);
        // [1, 1] covered: tie goes to class 0
        assert_eq!(assign_class(&[SplitCondition::gt(0, 0.5)], &d), 0);
        // nothing covered: dataset majority (3 vs 3, so class 0)
        assert_eq!(assign_class(&[SplitCondition::gt(0, 5.0)], &d), 0);
    }
}

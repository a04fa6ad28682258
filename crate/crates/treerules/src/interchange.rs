//! The JSON interchange format for ensembles.
//!
//! Only `le` and `in` splits are written. Trees holding `gt` or `not_in`
//! conditions are saved with the condition negated and the children
//! swapped, which routes every instance the same way.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use treerules_core::{Aggregation, Ensemble, Feature, Node, NodeKind, SplitCondition, SplitOp, Tree};

use crate::error::{Error, Result};
use crate::io::{read_text, write_text};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format_version: u32,
    aggregation: String,
    n_classes: usize,
    base_score: f64,
    classes: Vec<String>,
    features: Vec<Feature>,
    trees: Vec<TreeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc {
    nodes: Vec<NodeDoc>,
    root: u32,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: u32,
    leaf: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    op: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    counts: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
}

fn node_doc(tree: &Tree, node: &Node, boosted: bool) -> NodeDoc {
    match &node.kind {
        NodeKind::Leaf { class_counts, value } => NodeDoc {
            id: node.id,
            leaf: true,
            counts: Some(class_counts.clone()),
            value: boosted.then_some(*value),
            ..NodeDoc::default()
        },
        NodeKind::Internal { condition, left, right } => {
            let (mut l, mut r) = (tree.node(*left).id, tree.node(*right).id);
            let mut doc = NodeDoc { id: node.id, leaf: false, feature: Some(condition.feature), ..NodeDoc::default() };
            match &condition.op {
                SplitOp::Le { threshold } | SplitOp::Gt { threshold } => {
                    doc.op = Some("le".into());
                    doc.threshold = Some(*threshold);
                }
                SplitOp::In { values } | SplitOp::NotIn { values } => {
                    doc.op = Some("in".into());
                    doc.values = Some(values.clone());
                }
            }
            if matches!(condition.op, SplitOp::Gt { .. } | SplitOp::NotIn { .. }) {
                std::mem::swap(&mut l, &mut r);
            }
            doc.left = Some(l);
            doc.right = Some(r);
            doc
        }
    }
}

/// Serializes to the compact interchange document.
pub fn to_json(ens: &Ensemble) -> String {
    let (aggregation, base_score, boosted) = match ens.aggregation() {
        Aggregation::MajorityVote => ("vote", 0.0, false),
        Aggregation::ScoreSum { base_score } => ("score_sum", base_score, true),
    };
    let doc = Document {
        format_version: FORMAT_VERSION,
        aggregation: aggregation.into(),
        n_classes: ens.n_classes(),
        base_score,
        classes: ens.classes().to_vec(),
        features: ens.features().to_vec(),
        trees: ens
            .trees()
            .iter()
            .map(|t| TreeDoc {
                nodes: t.nodes().iter().map(|n| node_doc(t, n, boosted)).collect(),
                root: t.node(t.root()).id,
            })
            .collect(),
    };
    serde_json::to_string(&doc).expect("interchange document serializes")
}

fn malformed(msg: String) -> treerules_core::Error {
    treerules_core::Error::MalformedModel(msg)
}

fn tree_from_doc(k: usize, doc: TreeDoc) -> Result<Tree, treerules_core::Error> {
    let mut pos = HashMap::with_capacity(doc.nodes.len());
    for (i, n) in doc.nodes.iter().enumerate() {
        if pos.insert(n.id, i).is_some() {
            return Err(malformed(format!("tree {k}: duplicate node id {}", n.id)));
        }
    }
    let child = |owner: u32, id: Option<u32>, side: &str| -> Result<usize, treerules_core::Error> {
        let id = id.ok_or_else(|| malformed(format!("tree {k}, node {owner}: missing {side} child")))?;
        pos.get(&id)
            .copied()
            .ok_or_else(|| malformed(format!("tree {k}, node {owner}: dangling {side} child id {id}")))
    };
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for n in &doc.nodes {
        let kind = if n.leaf {
            let class_counts =
                n.counts.clone().ok_or_else(|| malformed(format!("tree {k}, node {}: leaf without counts", n.id)))?;
            NodeKind::Leaf { class_counts, value: n.value.unwrap_or(0.0) }
        } else {
            let feature = n.feature.ok_or_else(|| malformed(format!("tree {k}, node {}: split without feature", n.id)))?;
            let condition = match (n.op.as_deref(), n.threshold, &n.values) {
                (Some("le"), Some(t), None) => SplitCondition::le(feature, t),
                (Some("in"), None, Some(v)) => SplitCondition::is_in(feature, v.iter().copied()),
                (Some(op @ ("le" | "in")), _, _) => {
                    return Err(malformed(format!("tree {k}, node {}: bad arguments for `{op}`", n.id)))
                }
                (Some(op), _, _) => {
                    return Err(malformed(format!("tree {k}, node {}: unsupported op `{op}`", n.id)))
                }
                (None, _, _) => return Err(malformed(format!("tree {k}, node {}: split without op", n.id))),
            };
            NodeKind::Internal { condition, left: child(n.id, n.left, "left")?, right: child(n.id, n.right, "right")? }
        };
        nodes.push(Node { id: n.id, kind });
    }
    let root = *pos.get(&doc.root).ok_or_else(|| malformed(format!("tree {k}: root id {} not found", doc.root)))?;
    Tree::new(nodes, root)
}

/// Parses and validates an interchange document.
pub fn from_json(text: &str) -> Result<Ensemble, treerules_core::Error> {
    let doc: Document = serde_json::from_str(text).map_err(|e| malformed(format!("malformed document: {e}")))?;
    if doc.format_version != FORMAT_VERSION {
        return Err(malformed(format!("unsupported format_version {}", doc.format_version)));
    }
    if doc.n_classes != doc.classes.len() {
        return Err(malformed(format!("n_classes is {} but {} classes are listed", doc.n_classes, doc.classes.len())));
    }
    let aggregation = match doc.aggregation.as_str() {
        "vote" => Aggregation::MajorityVote,
        "score_sum" => Aggregation::ScoreSum { base_score: doc.base_score },
        other => return Err(malformed(format!("unknown aggregation `{other}`"))),
    };
    let trees = doc.trees.into_iter().enumerate().map(|(k, t)| tree_from_doc(k, t)).collect::<Result<_, _>>()?;
    Ensemble::new(trees, aggregation, doc.features, doc.classes)
}

pub fn save_ensemble(path: &Path, ens: &Ensemble) -> Result<()> {
    write_text(path, &to_json(ens))
}

pub fn load_ensemble(path: &Path) -> Result<Ensemble> {
    from_json(&read_text(path)?).map_err(|e| Error::format(path, e))
}

use alloc::vec;
use alloc::vec::Vec;

use super::condition::SplitCondition;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// `left` and `right` are positions in the owning tree's node store.
    Internal { condition: SplitCondition, left: usize, right: usize },
    /// `class_counts` are per-class training instance counts (possibly
    /// weighted); `value` is the additive score used by boosted ensembles.
    Leaf { class_counts: Vec<f64>, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// External identifier, preserved through load/save.
    pub id: u32,
    pub kind: NodeKind,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    pub fn condition(&self) -> Option<&SplitCondition> {
        match &self.kind {
            NodeKind::Internal { condition, .. } => Some(condition),
            NodeKind::Leaf { .. } => None,
        }
    }
}

/// Rooted binary tree. The left child is taken when the node condition is
/// true.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    root: usize,
}

impl Tree {
    /// Validates that `nodes` form a single rooted binary tree: every
    /// child position exists, every non-root node has exactly one parent,
    /// and every node is reachable from `root`.
    pub fn new(nodes: Vec<Node>, root: usize) -> Result<Self> {
        if root >= nodes.len() {
            return Err(Error::MalformedModel(alloc::format!("root {root} out of range")));
        }
        let mut parents = vec![0u32; nodes.len()];
        for n in &nodes {
            if let NodeKind::Internal { left, right, .. } = n.kind {
                for c in [left, right] {
                    if c >= nodes.len() {
                        return Err(Error::MalformedModel(alloc::format!(
                            "node {} references missing child",
                            n.id
                        )));
                    }
                    parents[c] += 1;
                }
            }
        }
        if parents[root] != 0 {
            return Err(Error::MalformedModel("root has a parent".into()));
        }
        if let Some(i) = (0..nodes.len()).find(|&i| i != root && parents[i] != 1) {
            return Err(Error::MalformedModel(alloc::format!(
                "node {} has {} parents",
                nodes[i].id,
                parents[i]
            )));
        }
        let tree = Tree { nodes, root };
        let mut seen = 0usize;
        tree.walk(|_, _| seen += 1);
        if seen != tree.nodes.len() {
            return Err(Error::MalformedModel("unreachable or cyclic nodes".into()));
        }
        Ok(tree)
    }

    /// A tree with a single leaf and no splits.
    pub fn stump(class_counts: Vec<f64>, value: f64) -> Self {
        Tree { nodes: vec![Node { id: 0, kind: NodeKind::Leaf { class_counts, value } }], root: 0 }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn nodes_mut(&mut self) -> &mut [Node] {
        &mut self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, pos: usize) -> &Node {
        &self.nodes[pos]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn is_stump(&self) -> bool {
        self.nodes[self.root].is_leaf()
    }

    /// Maximum root-to-leaf edge count.
    pub fn depth(&self) -> usize {
        let mut d = 0;
        self.walk(|_, depth| d = d.max(depth));
        d
    }

    /// Position of the leaf reached by `row`.
    pub fn leaf_for(&self, row: &[f64]) -> usize {
        let mut pos = self.root;
        loop {
            match &self.nodes[pos].kind {
                NodeKind::Internal { condition, left, right } => {
                    pos = if condition.eval(row) { *left } else { *right };
                }
                NodeKind::Leaf { .. } => return pos,
            }
        }
    }

    /// Pre-order traversal (left subtree first), bounded by node count so
    /// that malformed input cannot loop.
    fn walk(&self, mut visit: impl FnMut(usize, usize)) {
        let mut stack = vec![(self.root, 0usize)];
        let mut budget = self.nodes.len();
        while let Some((pos, depth)) = stack.pop() {
            if budget == 0 {
                return;
            }
            budget -= 1;
            visit(pos, depth);
            if let NodeKind::Internal { left, right, .. } = self.nodes[pos].kind {
                stack.push((right, depth + 1));
                stack.push((left, depth + 1));
            }
        }
    }

    /// Visit every node in pre-order with the conditions on its path from
    /// the root: the parent's condition when the node is a left child, its
    /// negation when it is a right child.
    pub fn for_each_path(&self, mut visit: impl FnMut(usize, &[SplitCondition])) {
        let mut path: Vec<SplitCondition> = Vec::new();
        self.paths_rec(self.root, &mut path, &mut visit);
    }

    fn paths_rec(
        &self,
        pos: usize,
        path: &mut Vec<SplitCondition>,
        visit: &mut impl FnMut(usize, &[SplitCondition]),
    ) {
        visit(pos, path);
        if let NodeKind::Internal { condition, left, right } = &self.nodes[pos].kind {
            path.push(condition.clone());
            self.paths_rec(*left, path, visit);
            path.pop();
            path.push(condition.negate());
            self.paths_rec(*right, path, visit);
            path.pop();
        }
    }

    /// Conditions along the route `row` takes, ending at its leaf.
    pub fn decision_path(&self, row: &[f64]) -> (usize, Vec<SplitCondition>) {
        let mut pos = self.root;
        let mut path = Vec::new();
        loop {
            match &self.nodes[pos].kind {
                NodeKind::Internal { condition, left, right } => {
                    if condition.eval(row) {
                        path.push(condition.clone());
                        pos = *left;
                    } else {
                        path.push(condition.negate());
                        pos = *right;
                    }
                }
                NodeKind::Leaf { .. } => return (pos, path),
            }
        }
    }
}

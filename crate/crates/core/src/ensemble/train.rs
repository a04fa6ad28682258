//! Exact greedy CART trainers: single tree, bagged forest and binary
//! logistic gradient boosting.
//!
//! Split ties go to the lowest feature index and then to the lowest
//! threshold (or shortest category prefix), so training is a pure function
//! of the data and the seed.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{logistic, Aggregation, Ensemble, Node, NodeKind, SplitCondition, Tree};
use crate::dataset::{Dataset, FeatureKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: 5, min_leaf: 1, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Fraction of features considered at each split.
    pub feature_fraction: f64,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 100, max_depth: 5, min_leaf: 1, feature_fraction: 0.5, bootstrap: true, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbdtParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    /// L2 penalty on leaf values.
    pub l2: f64,
    pub seed: u64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams { n_rounds: 50, max_depth: 3, learning_rate: 0.1, min_leaf: 5, l2: 1.0, seed: 0 }
    }
}

const MIN_GAIN: f64 = 1e-12;

/// Sufficient statistics of a node, combinable by row.
trait Stats: Clone {
    fn add_row(&mut self, row: usize);
    fn minus(&self, other: &Self) -> Self;
    fn count(&self) -> usize;
    /// Larger is better; split gain = score(left) + score(right) - score(parent).
    fn score(&self) -> f64;
    /// Sort key for ordering categories before prefix scanning.
    fn order_key(&self, parent: &Self) -> f64;
}

#[derive(Clone)]
struct ClassStats<'a> {
    labels: &'a [usize],
    counts: Vec<usize>,
    n: usize,
}

impl<'a> ClassStats<'a> {
    fn empty(labels: &'a [usize], n_classes: usize) -> Self {
        ClassStats { labels, counts: vec![0; n_classes], n: 0 }
    }
}

impl Stats for ClassStats<'_> {
    fn add_row(&mut self, row: usize) {
        self.counts[self.labels[row]] += 1;
        self.n += 1;
    }

    fn minus(&self, other: &Self) -> Self {
        let counts = self.counts.iter().zip(&other.counts).map(|(a, b)| a - b).collect();
        ClassStats { labels: self.labels, counts, n: self.n - other.n }
    }

    fn count(&self) -> usize {
        self.n
    }

    // n - score is n times the Gini impurity.
    fn score(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let sq: f64 = self.counts.iter().map(|&c| (c * c) as f64).sum();
        sq / self.n as f64
    }

    fn order_key(&self, parent: &Self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let target = if self.counts.len() == 2 { 1 } else { crate::dataset::argmax_lowest(&parent.counts) };
        self.counts[target] as f64 / self.n as f64
    }
}

#[derive(Clone)]
struct NewtonStats<'a> {
    grad: &'a [f64],
    hess: &'a [f64],
    l2: f64,
    g: f64,
    h: f64,
    n: usize,
}

impl Stats for NewtonStats<'_> {
    fn add_row(&mut self, row: usize) {
        self.g += self.grad[row];
        self.h += self.hess[row];
        self.n += 1;
    }

    fn minus(&self, other: &Self) -> Self {
        NewtonStats { g: self.g - other.g, h: self.h - other.h, n: self.n - other.n, ..self.clone() }
    }

    fn count(&self) -> usize {
        self.n
    }

    fn score(&self) -> f64 {
        self.g * self.g / (self.h + self.l2)
    }

    fn order_key(&self, _parent: &Self) -> f64 {
        -self.g / (self.h + self.l2)
    }
}

struct Candidate {
    gain: f64,
    condition: SplitCondition,
}

struct Builder<'d, S, L> {
    data: &'d Dataset,
    max_depth: usize,
    min_leaf: usize,
    n_split_features: usize,
    empty: S,
    leaf: L,
    nodes: Vec<Node>,
}

impl<'d, S: Stats, L: Fn(&S) -> (Vec<f64>, f64)> Builder<'d, S, L> {
    fn stats_of(&self, rows: &[usize]) -> S {
        let mut s = self.empty.clone();
        for &r in rows {
            s.add_row(r);
        }
        s
    }

    fn push_leaf(&mut self, stats: &S) -> usize {
        let (class_counts, value) = (self.leaf)(stats);
        let pos = self.nodes.len();
        self.nodes.push(Node { id: pos as u32, kind: NodeKind::Leaf { class_counts, value } });
        pos
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let stats = self.stats_of(&rows);
        if depth >= self.max_depth || rows.len() < 2 * self.min_leaf {
            return self.push_leaf(&stats);
        }
        let features = self.sample_features(rng);
        let mut best: Option<Candidate> = None;
        for f in features {
            let cand = match self.data.schema().features[f].kind {
                FeatureKind::Continuous => self.best_continuous(f, &rows, &stats),
                FeatureKind::Categorical => self.best_categorical(f, &rows, &stats),
            };
            if let Some(c) = cand {
                if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        let Some(best) = best.filter(|b| b.gain > MIN_GAIN) else {
            return self.push_leaf(&stats);
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| best.condition.eval(self.data.row(r)));
        drop(rows);
        let pos = self.nodes.len();
        // placeholder, patched once the children exist
        self.nodes.push(Node {
            id: pos as u32,
            kind: NodeKind::Leaf { class_counts: Vec::new(), value: 0.0 },
        });
        let left = self.build(left_rows, depth + 1, rng);
        let right = self.build(right_rows, depth + 1, rng);
        self.nodes[pos].kind = NodeKind::Internal { condition: best.condition, left, right };
        pos
    }

    fn sample_features(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let m = self.data.m();
        if self.n_split_features >= m {
            return (0..m).collect();
        }
        let mut picked = index::sample(rng, m, self.n_split_features).into_vec();
        picked.sort_unstable();
        picked
    }

    fn best_continuous(&self, f: usize, rows: &[usize], total: &S) -> Option<Candidate> {
        let mut sorted: Vec<(f64, usize)> = rows.iter().map(|&r| (self.data.row(r)[f], r)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut left = self.empty.clone();
        let mut best: Option<(f64, f64)> = None;
        let parent = total.score();
        for i in 0..sorted.len() - 1 {
            left.add_row(sorted[i].1);
            let (a, b) = (sorted[i].0, sorted[i + 1].0);
            if a == b {
                continue;
            }
            let n_left = i + 1;
            if n_left < self.min_leaf || sorted.len() - n_left < self.min_leaf {
                continue;
            }
            let right = total.minus(&left);
            let gain = left.score() + right.score() - parent;
            if best.is_none_or(|(g, _)| gain > g) {
                let mut t = a + (b - a) / 2.0;
                if t >= b {
                    t = a;
                }
                best = Some((gain, t));
            }
        }
        best.map(|(gain, t)| Candidate { gain, condition: SplitCondition::le(f, t) })
    }

    fn best_categorical(&self, f: usize, rows: &[usize], total: &S) -> Option<Candidate> {
        let n_cat = self.data.schema().features[f].categories.len();
        let mut per_cat: Vec<S> = vec![self.empty.clone(); n_cat];
        for &r in rows {
            per_cat[self.data.row(r)[f] as usize].add_row(r);
        }
        let mut order: Vec<usize> = (0..n_cat).filter(|&c| per_cat[c].count() > 0).collect();
        if order.len() < 2 {
            return None;
        }
        let keys: Vec<f64> = (0..n_cat).map(|c| per_cat[c].order_key(total)).collect();
        order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
        let parent = total.score();
        let mut left = self.empty.clone();
        let mut best: Option<(f64, usize)> = None;
        for j in 0..order.len() - 1 {
            let c = &per_cat[order[j]];
            for &r in rows {
                if self.data.row(r)[f] as usize == order[j] {
                    left.add_row(r);
                }
            }
            debug_assert!(left.count() >= c.count());
            let n_left = left.count();
            if n_left < self.min_leaf || rows.len() - n_left < self.min_leaf {
                continue;
            }
            let right = total.minus(&left);
            let gain = left.score() + right.score() - parent;
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, j + 1));
            }
        }
        best.map(|(gain, len)| Candidate {
            gain,
            condition: SplitCondition::is_in(f, order[..len].iter().map(|&c| c as u32)),
        })
    }
}

fn check_trainable(data: &Dataset, min_leaf: usize) -> Result<()> {
    if data.n() < 2 {
        return Err(Error::InvalidParameter(alloc::format!("need at least 2 rows, got {}", data.n())));
    }
    if min_leaf == 0 {
        return Err(Error::InvalidParameter("min_leaf must be at least 1".into()));
    }
    Ok(())
}

fn grow_classification_tree(
    data: &Dataset,
    rows: Vec<usize>,
    max_depth: usize,
    min_leaf: usize,
    n_split_features: usize,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let n_classes = data.n_classes();
    let mut b = Builder {
        data,
        max_depth,
        min_leaf,
        n_split_features,
        empty: ClassStats::empty(data.labels(), n_classes),
        leaf: |s: &ClassStats<'_>| (s.counts.iter().map(|&c| c as f64).collect(), 0.0),
        nodes: Vec::new(),
    };
    let root = b.build(rows, 0, rng);
    let nodes = b.nodes;
    Tree::new(nodes, root).expect("builder produces a well-formed tree")
}

/// Single CART tree with Gini splits; aggregation is majority vote.
pub fn train_decision_tree(data: &Dataset, params: &TreeParams) -> Result<Ensemble> {
    check_trainable(data, params.min_leaf)?;
    let mut rng = tree_rng(params.seed, 0);
    let tree = grow_classification_tree(
        data,
        (0..data.n()).collect(),
        params.max_depth,
        params.min_leaf,
        data.m(),
        &mut rng,
    );
    Ensemble::new(
        vec![tree],
        Aggregation::MajorityVote,
        data.schema().features.clone(),
        data.schema().classes.clone(),
    )
}

/// Independent stream per tree so that tree `k` does not depend on how
/// many draws earlier trees consumed.
fn tree_rng(seed: u64, tree_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree_index as u64);
    rng
}

/// Grow one forest member. Exposed so callers can build trees in parallel
/// and assemble them with [`assemble_forest`].
pub fn train_forest_tree(data: &Dataset, params: &ForestParams, tree_index: usize) -> Tree {
    let mut rng = tree_rng(params.seed, tree_index);
    let n = data.n();
    let rows: Vec<usize> = if params.bootstrap {
        let mut rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        rows.sort_unstable();
        rows
    } else {
        (0..n).collect()
    };
    let m = data.m();
    let k = libm::round(params.feature_fraction * m as f64) as usize;
    grow_classification_tree(data, rows, params.max_depth, params.min_leaf, k.clamp(1, m), &mut rng)
}

pub fn assemble_forest(data: &Dataset, trees: Vec<Tree>) -> Result<Ensemble> {
    Ensemble::new(
        trees,
        Aggregation::MajorityVote,
        data.schema().features.clone(),
        data.schema().classes.clone(),
    )
}

fn check_forest(data: &Dataset, params: &ForestParams) -> Result<()> {
    check_trainable(data, params.min_leaf)?;
    if params.n_trees == 0 {
        return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
    }
    if !(params.feature_fraction > 0.0 && params.feature_fraction <= 1.0) {
        return Err(Error::InvalidParameter("feature_fraction must be in (0, 1]".into()));
    }
    Ok(())
}

/// Bagged Gini trees with per-split feature subsampling.
pub fn train_random_forest(data: &Dataset, params: &ForestParams) -> Result<Ensemble> {
    check_forest(data, params)?;
    let trees = (0..params.n_trees).map(|k| train_forest_tree(data, params, k)).collect();
    assemble_forest(data, trees)
}

/// Validate forest parameters without training.
pub fn validate_forest_params(data: &Dataset, params: &ForestParams) -> Result<()> {
    check_forest(data, params)
}

/// Binary logistic-loss gradient boosting. Each round fits one regression
/// tree to the loss gradients with Newton leaf values; leaf class counts
/// are filled afterwards by routing the training rows.
pub fn train_gbdt(data: &Dataset, params: &GbdtParams) -> Result<Ensemble> {
    check_trainable(data, params.min_leaf)?;
    if params.n_rounds < 1 {
        return Err(Error::InvalidParameter("n_rounds must be at least 1".into()));
    }
    if data.n_classes() != 2 {
        return Err(Error::Unsupported("gradient boosting supports binary classification only".into()));
    }
    if params.learning_rate.is_nan() || params.learning_rate <= 0.0 || params.l2 < 0.0 {
        return Err(Error::InvalidParameter("learning_rate must be positive and l2 non-negative".into()));
    }
    let n = data.n();
    let y: Vec<f64> = data.labels().iter().map(|&l| l as f64).collect();
    let pos = y.iter().sum::<f64>() / n as f64;
    let p0 = pos.clamp(1e-6, 1.0 - 1e-6);
    let base_score = libm::log(p0 / (1.0 - p0));
    let mut margin = vec![base_score; n];
    let mut rng = tree_rng(params.seed, 0);
    let mut trees = Vec::with_capacity(params.n_rounds);
    for _ in 0..params.n_rounds {
        let mut grad = Vec::with_capacity(n);
        let mut hess = Vec::with_capacity(n);
        for i in 0..n {
            let p = logistic(margin[i]);
            grad.push(p - y[i]);
            hess.push((p * (1.0 - p)).max(1e-16));
        }
        let lr = params.learning_rate;
        let l2 = params.l2;
        let mut b = Builder {
            data,
            max_depth: params.max_depth,
            min_leaf: params.min_leaf,
            n_split_features: data.m(),
            empty: NewtonStats { grad: &grad, hess: &hess, l2, g: 0.0, h: 0.0, n: 0 },
            leaf: |s: &NewtonStats<'_>| (vec![0.0, 0.0], -lr * s.g / (s.h + l2)),
            nodes: Vec::new(),
        };
        let root = b.build((0..n).collect(), 0, &mut rng);
        let tree = Tree::new(b.nodes, root).expect("builder produces a well-formed tree");
        for (i, m) in margin.iter_mut().enumerate() {
            if let NodeKind::Leaf { value, .. } = tree.node(tree.leaf_for(data.row(i))).kind {
                *m += value;
            }
        }
        trees.push(tree);
    }
    fill_leaf_counts(&mut trees, data);
    Ensemble::new(
        trees,
        Aggregation::ScoreSum { base_score },
        data.schema().features.clone(),
        data.schema().classes.clone(),
    )
}

/// Overwrite every leaf's class counts with the counts of `data` rows
/// routed to it.
pub fn fill_leaf_counts(trees: &mut [Tree], data: &Dataset) {
    let n_classes = data.n_classes();
    for tree in trees.iter_mut() {
        let mut counts: Vec<Vec<f64>> = vec![vec![0.0; n_classes]; tree.node_count()];
        for i in 0..data.n() {
            counts[tree.leaf_for(data.row(i))][data.label(i)] += 1.0;
        }
        for (node, c) in tree.nodes_mut().iter_mut().zip(counts) {
            if let NodeKind::Leaf { class_counts, .. } = &mut node.kind {
                *class_counts = c;
            }
        }
    }
}

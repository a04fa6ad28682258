//! Model training driven by configuration, with forest trees built in
//! parallel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use treerules_core::ensemble::train::{assemble_forest, train_forest_tree, validate_forest_params};
use treerules_core::ensemble::{train_decision_tree, train_gbdt, ForestParams, GbdtParams, TreeParams};
use treerules_core::{Dataset, Ensemble};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Tree,
    #[default]
    Forest,
    Gbdt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub feature_fraction: f64,
    pub bootstrap: bool,
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let f = ForestParams::default();
        let g = GbdtParams::default();
        ModelConfig {
            kind: ModelKind::Forest,
            n_trees: f.n_trees,
            max_depth: f.max_depth,
            min_leaf: f.min_leaf,
            feature_fraction: f.feature_fraction,
            bootstrap: f.bootstrap,
            n_rounds: g.n_rounds,
            learning_rate: g.learning_rate,
            l2: g.l2,
        }
    }
}

impl ModelConfig {
    pub fn forest_params(&self, seed: u64) -> ForestParams {
        ForestParams {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            feature_fraction: self.feature_fraction,
            bootstrap: self.bootstrap,
            seed,
        }
    }
}

/// Same trees as `train_random_forest`; each tree draws from its own
/// random stream, so thread count never changes the result.
pub fn train_forest_parallel(data: &Dataset, params: &ForestParams) -> Result<Ensemble> {
    validate_forest_params(data, params)?;
    let trees = (0..params.n_trees).into_par_iter().map(|k| train_forest_tree(data, params, k)).collect();
    Ok(assemble_forest(data, trees)?)
}

pub fn train_model(data: &Dataset, cfg: &ModelConfig, seed: u64) -> Result<Ensemble> {
    Ok(match cfg.kind {
        ModelKind::Tree => {
            train_decision_tree(data, &TreeParams { max_depth: cfg.max_depth, min_leaf: cfg.min_leaf, seed })?
        }
        ModelKind::Forest => train_forest_parallel(data, &cfg.forest_params(seed))?,
        ModelKind::Gbdt => train_gbdt(
            data,
            &GbdtParams {
                n_rounds: cfg.n_rounds,
                max_depth: cfg.max_depth,
                learning_rate: cfg.learning_rate,
                min_leaf: cfg.min_leaf,
                l2: cfg.l2,
                seed,
            },
        )?,
    })
}

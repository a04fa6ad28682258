//! Exact branch and bound over per-class rule selections.
//!
//! The search runs one pass per total selection size `SR`, so that the
//! per-rule averages have fixed weights inside a pass. Within a pass rules
//! are tried in ascending id order, which makes the first optimum found the
//! lexicographically smallest id tuple of that size.

use alloc::vec;
use alloc::vec::Vec;

use num_rational::Ratio;

use super::objective::{evaluate_scaled, rule_level_weights, Arithmetic, Direction, Metric};
use super::validity::filter_valid;
use super::{
    dominates, DominanceMode, DominanceScope, ObjectiveValue, RuleSetSolution, SelectionConfig, SolveStats,
    SolveStatus,
};
use crate::error::{Error, Result};
use crate::rules::CandidateRuleSet;

/// Search budget, consulted once per explored node.
pub trait Budget {
    /// `false` stops the search.
    fn tick(&mut self) -> bool;
}

/// Never runs out.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unlimited;

impl Budget for Unlimited {
    fn tick(&mut self) -> bool {
        true
    }
}

/// Stops after a fixed number of nodes.
#[derive(Debug, Clone, Copy)]
pub struct NodeLimit(pub u64);

impl Budget for NodeLimit {
    fn tick(&mut self) -> bool {
        if self.0 == 0 {
            return false;
        }
        self.0 -= 1;
        true
    }
}

/// Solve without a budget.
pub fn solve(crs: &CandidateRuleSet, cfg: &SelectionConfig) -> Result<RuleSetSolution> {
    solve_with_budget(crs, cfg, &mut Unlimited)
}

/// Rule ids a selection may draw from: valid, of an active class, and not
/// dominated within the configured scope when dominance is on.
pub fn selectable_rules(crs: &CandidateRuleSet, cfg: &SelectionConfig) -> Result<Vec<u32>> {
    let active = active_classes(crs, cfg)?;
    let valid = filter_valid(crs, &cfg.validity).valid;
    let allowed = valid
        .iter()
        .copied()
        .filter(|&x| active[crs.rule(x).predicted_class])
        .filter(|&x| {
            cfg.dominance == DominanceMode::Off
                || !valid.iter().any(|&y| {
                    (cfg.dominance_scope == DominanceScope::AllValid
                        || crs.rule(y).predicted_class == crs.rule(x).predicted_class)
                        && dominates(crs.metrics_of(y), crs.metrics_of(x))
                })
        })
        .collect();
    Ok(allowed)
}

fn active_classes(crs: &CandidateRuleSet, cfg: &SelectionConfig) -> Result<Vec<bool>> {
    let mut active = vec![cfg.classes.is_none(); crs.n_classes()];
    for &c in cfg.classes.iter().flatten() {
        if c >= crs.n_classes() {
            return Err(Error::InvalidParameter(alloc::format!("class index {c} out of range")));
        }
        active[c] = true;
    }
    Ok(active)
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

fn lcm_range(lo: i128, hi: i128) -> Option<i128> {
    let mut acc: i128 = 1;
    for v in lo.max(1)..=hi {
        acc = acc.checked_div(gcd(acc, v))?.checked_mul(v)?;
    }
    Some(acc)
}

/// Solve, stopping early when `budget` runs out.
pub fn solve_with_budget(
    crs: &CandidateRuleSet,
    cfg: &SelectionConfig,
    budget: &mut dyn Budget,
) -> Result<RuleSetSolution> {
    cfg.check()?;
    let spec = cfg.effective_objective();
    let levels = spec.levels();
    let active = active_classes(crs, cfg)?;
    let allowed = selectable_rules(crs, cfg)?;
    let n_active = active.iter().filter(|&&a| a).count();
    let b = cfg.max_rules_per_class;
    let min = cfg.min_rules_per_class;

    let mut avail = vec![0usize; crs.n_classes()];
    for &x in &allowed {
        avail[crs.rule(x).predicted_class] += 1;
    }
    let infeasible = |nodes| RuleSetSolution {
        selected: Vec::new(),
        objective_vector: Vec::new(),
        status: SolveStatus::Infeasible,
        stats: SolveStats { nodes, passes: 0, selectable: allowed.len(), elapsed_ms: 0 },
    };
    if n_active == 0 || (0..crs.n_classes()).any(|c| active[c] && avail[c] < min) {
        return Ok(infeasible(0));
    }
    let sr_lo = n_active * min;
    let sr_hi: usize = (0..crs.n_classes()).filter(|&c| active[c]).map(|c| avail[c].min(b)).sum();

    let scale = match cfg.arithmetic {
        Arithmetic::AspParity => 1,
        Arithmetic::ExactRational => {
            let mut sizes: i128 = 1;
            for &x in &allowed {
                let s = crs.metrics_of(x).size.max(1) as i128;
                sizes = sizes.checked_div(gcd(sizes, s)).and_then(|q| q.checked_mul(s)).ok_or_else(overflow)?;
            }
            let srs = if spec.uses_rule_count() { lcm_range(sr_lo as i128, sr_hi as i128) } else { Some(1) };
            srs.and_then(|s| s.checked_mul(sizes)).ok_or_else(overflow)?
        }
    };

    let mut search = Search {
        crs,
        cfg,
        spec: &spec,
        levels: &levels,
        allowed: &allowed,
        scale,
        active: &active,
        budget,
        nodes: 0,
        stopped: false,
        best: None,
        pass_best: None,
        tables: Tables::default(),
        sr: 0,
        overlap_slack_levels: Vec::new(),
        max_size: allowed.iter().map(|&x| crs.metrics_of(x).size as i128).max().unwrap_or(0),
    };
    search.overlap_slack_levels = levels
        .iter()
        .map(|&p| spec.terms.iter().any(|t| t.priority == p && t.metric == Metric::Overlap && t.direction == Direction::Max))
        .collect();

    let mut passes = 0;
    for sr in sr_lo..=sr_hi {
        passes += 1;
        search.run_pass(sr);
        if search.stopped {
            break;
        }
    }
    let nodes = search.nodes;
    let stopped = search.stopped;
    let Some((vector, picks)) = search.best else {
        if stopped {
            return Ok(RuleSetSolution {
                status: SolveStatus::TimeoutBestKnown,
                ..infeasible(nodes)
            });
        }
        return Ok(infeasible(nodes));
    };
    Ok(RuleSetSolution {
        selected: picks,
        objective_vector: levels
            .iter()
            .zip(vector)
            .map(|(&priority, v)| ObjectiveValue { priority, value: Ratio::new(v, scale) })
            .collect(),
        status: if stopped { SolveStatus::TimeoutBestKnown } else { SolveStatus::Optimal },
        stats: SolveStats { nodes, passes, selectable: allowed.len(), elapsed_ms: 0 },
    })
}

fn overflow() -> Error {
    Error::Unsupported("objective denominators overflow exact arithmetic".into())
}

/// Suffix summaries per class for position `j` onward.
#[derive(Default)]
struct Tables {
    n_classes: usize,
    n_levels: usize,
    b: usize,
    /// `[j][c][l][k]`: sum of the `k` largest level-`l` weights of class
    /// `c` among positions `>= j`.
    top: Vec<i128>,
    /// `[j][c][k]`: sum of the `k` smallest sizes.
    min_size: Vec<i128>,
    /// `[j][c]`: rules available.
    avail: Vec<usize>,
    weights: Vec<Vec<i128>>,
}

impl Tables {
    fn top(&self, j: usize, c: usize, l: usize, k: usize) -> i128 {
        self.top[((j * self.n_classes + c) * self.n_levels + l) * (self.b + 1) + k]
    }

    fn min_size(&self, j: usize, c: usize, k: usize) -> i128 {
        self.min_size[(j * self.n_classes + c) * (self.b + 1) + k]
    }

    fn avail(&self, j: usize, c: usize) -> usize {
        self.avail[j * self.n_classes + c]
    }
}

struct Search<'a> {
    crs: &'a CandidateRuleSet,
    cfg: &'a SelectionConfig,
    spec: &'a super::ObjectiveSpec,
    levels: &'a [i32],
    allowed: &'a [u32],
    scale: i128,
    active: &'a [bool],
    budget: &'a mut dyn Budget,
    nodes: u64,
    stopped: bool,
    best: Option<(Vec<i128>, Vec<u32>)>,
    pass_best: Option<(Vec<i128>, Vec<u32>)>,
    tables: Tables,
    sr: usize,
    overlap_slack_levels: Vec<bool>,
    max_size: i128,
}

struct State {
    chosen: Vec<usize>,
    per_class: Vec<usize>,
    size: i128,
    partial: Vec<i128>,
}

impl Search<'_> {
    fn class_of(&self, pos: usize) -> usize {
        self.crs.rule(self.allowed[pos]).predicted_class
    }

    fn size_of(&self, pos: usize) -> i128 {
        self.crs.metrics_of(self.allowed[pos]).size as i128
    }

    fn build_tables(&mut self, sr: usize) {
        let n = self.allowed.len();
        let nc = self.crs.n_classes();
        let nl = self.levels.len();
        let b = self.cfg.max_rules_per_class;
        let weights: Vec<Vec<i128>> = self
            .allowed
            .iter()
            .map(|&x| {
                rule_level_weights(self.spec, self.levels, self.crs.metrics_of(x), sr as i128, self.scale, self.cfg.arithmetic)
            })
            .collect();
        let mut top = vec![0i128; (n + 1) * nc * nl * (b + 1)];
        let mut min_size = vec![0i128; (n + 1) * nc * (b + 1)];
        let mut avail = vec![0usize; (n + 1) * nc];
        // running best-b lists per class: weights per level (descending) and sizes (ascending)
        let mut best_w: Vec<Vec<Vec<i128>>> = vec![vec![Vec::new(); nl]; nc];
        let mut best_s: Vec<Vec<i128>> = vec![Vec::new(); nc];
        let mut count = vec![0usize; nc];
        for j in (0..=n).rev() {
            if j < n {
                let c = self.class_of(j);
                count[c] += 1;
                for l in 0..nl {
                    insert_bounded(&mut best_w[c][l], weights[j][l], b, |a, b| a > b);
                }
                insert_bounded(&mut best_s[c], self.size_of(j), b, |a, b| a < b);
            }
            for c in 0..nc {
                avail[j * nc + c] = count[c];
                for l in 0..nl {
                    let mut acc = 0;
                    for k in 0..=b {
                        if k > 0 {
                            acc += best_w[c][l].get(k - 1).copied().unwrap_or(0);
                        }
                        top[((j * nc + c) * nl + l) * (b + 1) + k] = acc;
                    }
                }
                let mut acc = 0;
                for k in 0..=b {
                    if k > 0 {
                        acc += best_s[c].get(k - 1).copied().unwrap_or(0);
                    }
                    min_size[(j * nc + c) * (b + 1) + k] = acc;
                }
            }
        }
        self.tables = Tables { n_classes: nc, n_levels: nl, b, top, min_size, avail, weights };
    }

    fn run_pass(&mut self, sr: usize) {
        self.sr = sr;
        self.build_tables(sr);
        self.pass_best = None;
        let mut st = State {
            chosen: Vec::with_capacity(sr),
            per_class: vec![0; self.crs.n_classes()],
            size: 0,
            partial: vec![0; self.levels.len()],
        };
        self.dfs(0, &mut st);
        if let Some(pass) = self.pass_best.take() {
            let better = match &self.best {
                None => true,
                Some(best) => pass.0 > best.0 || (pass.0 == best.0 && pass.1 < best.1),
            };
            if better {
                self.best = Some(pass);
            }
        }
    }

    fn ids(&self, chosen: &[usize]) -> Vec<u32> {
        chosen.iter().map(|&p| self.allowed[p]).collect()
    }

    fn partial_scores(&self, st: &State) -> Vec<i128> {
        if self.spec.has_overlap() {
            evaluate_scaled(
                self.crs,
                self.spec,
                self.levels,
                &self.ids(&st.chosen),
                self.sr as i128,
                self.scale,
                self.cfg.arithmetic,
            )
        } else {
            st.partial.clone()
        }
    }

    fn dfs(&mut self, start: usize, st: &mut State) {
        if st.chosen.len() == self.sr {
            self.leaf(st);
            return;
        }
        let partial = self.partial_scores(st);
        for j in start..self.allowed.len() {
            self.nodes += 1;
            if !self.budget.tick() {
                self.stopped = true;
                return;
            }
            if !self.bound_ok(j, st, &partial) {
                // bounds only shrink as the suffix does
                break;
            }
            let c = self.class_of(j);
            let size = self.size_of(j);
            if st.per_class[c] >= self.cfg.max_rules_per_class
                || self.cfg.max_total_conditions.is_some_and(|t| st.size + size > t as i128)
            {
                continue;
            }
            st.chosen.push(j);
            st.per_class[c] += 1;
            st.size += size;
            for l in 0..self.levels.len() {
                st.partial[l] += self.tables.weights[j][l];
            }
            self.dfs(j + 1, st);
            for l in 0..self.levels.len() {
                st.partial[l] -= self.tables.weights[j][l];
            }
            st.size -= size;
            st.per_class[c] -= 1;
            st.chosen.pop();
            if self.stopped {
                return;
            }
        }
    }

    /// Whether some completion drawing the remaining picks from positions
    /// `>= j` could still beat the incumbents.
    fn bound_ok(&self, j: usize, st: &State, partial: &[i128]) -> bool {
        let t = &self.tables;
        let rem = self.sr - st.chosen.len();
        let b = self.cfg.max_rules_per_class;
        let min = self.cfg.min_rules_per_class;
        let classes: Vec<(usize, usize, usize)> = (0..self.crs.n_classes())
            .filter(|&c| self.active[c])
            .map(|c| {
                let lo = min.saturating_sub(st.per_class[c]);
                let hi = (b - st.per_class[c]).min(t.avail(j, c)).min(rem);
                (c, lo, hi)
            })
            .collect();
        if classes.iter().any(|&(_, lo, hi)| lo > hi) {
            return false;
        }
        let Some(neg_min_size) = allocate(&classes, rem, |c, k| -t.min_size(j, c, k)) else {
            return false;
        };
        if let Some(limit) = self.cfg.max_total_conditions {
            if st.size - neg_min_size > limit as i128 {
                return false;
            }
        }
        let c_now = st.chosen.len() as i128;
        let sr = self.sr as i128;
        let mut upper = Vec::with_capacity(self.levels.len());
        for (l, &done) in partial.iter().enumerate() {
            let Some(future) = allocate(&classes, rem, |c, k| t.top(j, c, l, k)) else {
                return false;
            };
            let slack = if self.overlap_slack_levels[l] {
                (sr * (sr - 1) - c_now * (c_now - 1)) * self.max_size * self.scale
            } else {
                0
            };
            upper.push(done + future + slack);
        }
        if let Some((best, _)) = &self.best {
            if upper < *best {
                return false;
            }
        }
        if let Some((pass, _)) = &self.pass_best {
            if upper <= *pass {
                return false;
            }
        }
        true
    }

    fn leaf(&mut self, st: &State) {
        let min = self.cfg.min_rules_per_class;
        if (0..self.crs.n_classes()).any(|c| self.active[c] && st.per_class[c] < min) {
            return;
        }
        let ids = self.ids(&st.chosen);
        let v = if self.spec.has_overlap() {
            evaluate_scaled(self.crs, self.spec, self.levels, &ids, self.sr as i128, self.scale, self.cfg.arithmetic)
        } else {
            st.partial.clone()
        };
        if let Some((best, _)) = &self.best {
            if v < *best {
                return;
            }
        }
        // ascending-order search: an equal value found later is a larger tuple
        if self.pass_best.as_ref().is_none_or(|(p, _)| v > *p) {
            self.pass_best = Some((v, ids));
        }
    }
}

/// Keep `list` as the best `cap` values under `before`, in order.
fn insert_bounded(list: &mut Vec<i128>, v: i128, cap: usize, before: impl Fn(i128, i128) -> bool) {
    let pos = list.iter().position(|&x| before(v, x)).unwrap_or(list.len());
    if pos < cap {
        list.insert(pos, v);
        list.truncate(cap);
    }
}

/// Maximum of `Σ value(c, k_c)` over per-class counts `lo <= k_c <= hi`
/// summing to `total`; `None` when no such counts exist.
fn allocate(classes: &[(usize, usize, usize)], total: usize, value: impl Fn(usize, usize) -> i128) -> Option<i128> {
    let mut dp: Vec<Option<i128>> = vec![None; total + 1];
    dp[0] = Some(0);
    for &(c, lo, hi) in classes {
        let mut next = vec![None; total + 1];
        for (used, cur) in dp.iter().enumerate() {
            let Some(cur) = *cur else { continue };
            for k in lo..=hi {
                if used + k > total {
                    break;
                }
                let v = cur + value(c, k);
                if next[used + k].is_none_or(|x| v > x) {
                    next[used + k] = Some(v);
                }
            }
        }
        dp = next;
    }
    dp[total]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allocation_respects_bounds() {
        // class 0 weights 5,4 ; class 1 weights 3
        let top = |c: usize, k: usize| [[0, 5, 9], [0, 3, 3]][c][k];
        assert_eq!(allocate(&[(0, 1, 2), (1, 1, 1)], 3, top), Some(12));
        assert_eq!(allocate(&[(0, 1, 2), (1, 1, 1)], 2, top), Some(8));
        assert_eq!(allocate(&[(0, 1, 2), (1, 1, 1)], 4, top), None);
    }

    #[test]
    fn bounded_insert_keeps_top() {
        let mut v = Vec::new();
        for x in [3, 9, 1, 7, 9] {
            insert_bounded(&mut v, x, 3, |a, b| a > b);
        }
        assert_eq!(v, vec![9, 9, 7]);
    }

    #[test]
    fn lcm_of_range() {
        assert_eq!(lcm_range(1, 6), Some(60));
        assert_eq!(lcm_range(4, 4), Some(4));
    }
}

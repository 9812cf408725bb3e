//! Vector-output gradient-boosted regression trees.
//!
//! Each round grows one tree whose leaves carry `(Δa, Δb)`. Split search is
//! exact and greedy: every feature is presorted once and each tree level is
//! scanned in a single pass per feature. The gain is the reduction in squared
//! error of the gradient residuals, summed over output dimensions. Leaves take
//! a Newton step per dimension.
//!
//! The same machinery, with a one-dimensional head, backs a binary log-loss
//! baseline ([`GbrtLogistic`]).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::horizon_label;
use crate::beta_math::BetaParams;
use crate::error::{Error, Result};
use crate::evalkit::fit_sbg_cohort;
use crate::linear::DEFAULT_CLAMP;
use crate::numeric::{pairwise_sum, sigmoid, softplus};
use crate::sbg::{self, Observation, DEFAULT_MAX_HORIZON};
use crate::RiskModel;

/// Per-row Hessian floor applied before the Newton division.
pub const HESSIAN_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbrtConfig {
    pub rounds: usize,
    pub learning_rate: f64,
    /// Depth 0 grows single-leaf trees (intercept updates only).
    pub max_depth: usize,
    pub min_leaf_rows: usize,
    pub l2_leaf: f64,
    pub seed: u64,
    /// Probability that a row enters a given round's tree.
    pub subsample: f64,
}

impl Default for GbrtConfig {
    fn default() -> Self {
        Self {
            rounds: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_leaf_rows: 20,
            l2_leaf: 1.0,
            seed: 0,
            subsample: 1.0,
        }
    }
}

impl GbrtConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Input("learning_rate must be positive".into()));
        }
        if !(self.l2_leaf >= 0.0) {
            return Err(Error::Input("l2_leaf must be nonnegative".into()));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::Input("subsample must be in (0, 1]".into()));
        }
        if self.min_leaf_rows == 0 {
            return Err(Error::Input("min_leaf_rows must be at least 1".into()));
        }
        Ok(())
    }
}

/// Tree node. Internal nodes send `x[feature_index] < threshold` (and missing
/// values) to `left`; leaves have `feature_index = None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature_index: Option<usize>,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    pub leaf_delta_a: f64,
    pub leaf_delta_b: f64,
}

impl TreeNode {
    fn leaf(delta: [f64; 2]) -> Self {
        Self {
            feature_index: None,
            threshold: 0.0,
            left: 0,
            right: 0,
            leaf_delta_a: delta[0],
            leaf_delta_b: delta[1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Node arena; index 0 is the root.
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        while let Some(f) = self.nodes[i].feature_index {
            let node = &self.nodes[i];
            let v = x[f];
            i = if v.is_nan() || v < node.threshold {
                node.left
            } else {
                node.right
            };
        }
        i
    }

    /// Leaf values `(Δa, Δb)` reached by `x`.
    pub fn predict(&self, x: &[f64]) -> [f64; 2] {
        let n = &self.nodes[self.leaf_index(x)];
        [n.leaf_delta_a, n.leaf_delta_b]
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature_index.is_none()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbrtBetaLogistic {
    pub trees: Vec<Tree>,
    pub learning_rate: f64,
    /// `(a0, b0)` from the unconditional cohort fit.
    pub base_scores: (f64, f64),
    pub max_depth: usize,
    pub feature_names: Vec<String>,
    pub clamp: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GbrtReport {
    /// Training loss before the first round and after each round.
    pub round_losses: Vec<f64>,
    pub rounds: usize,
}

impl GbrtBetaLogistic {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Unclamped accumulated scores `(a(x), b(x))`.
    pub fn raw_scores(&self, x: &[f64]) -> Result<(f64, f64)> {
        check_dim(x, self.n_features())?;
        let (mut a, mut b) = self.base_scores;
        for tree in &self.trees {
            let [da, db] = tree.predict(x);
            a += self.learning_rate * da;
            b += self.learning_rate * db;
        }
        Ok((a, b))
    }

    pub fn predict_params(&self, x: &[f64]) -> Result<BetaParams> {
        let (a, b) = self.raw_scores(x)?;
        Ok(BetaParams::from_log(a, b, self.clamp))
    }

    pub fn predict_survival_curve(&self, x: &[f64], horizon: u32) -> Result<Vec<f64>> {
        Ok(sbg::survival_curve(self.predict_params(x)?, horizon))
    }
}

/// Alias matching the free-function style of the other model modules.
pub fn predict_gbrt(model: &GbrtBetaLogistic, x: &[f64]) -> Result<BetaParams> {
    model.predict_params(x)
}

impl RiskModel for GbrtBetaLogistic {
    fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn risk_score(&self, x: &[f64], horizon: u32) -> Result<f64> {
        Ok(1.0 - sbg::survival(self.predict_params(x)?, horizon))
    }

    fn event_variance(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_params(x)?.variance())
    }
}

fn check_dim(x: &[f64], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::Input(format!(
            "feature vector has {} entries, model expects {d}",
            x.len()
        )));
    }
    Ok(())
}

fn check_rows(observations: &[Observation]) -> Result<usize> {
    let d = observations.first().map_or(0, |o| o.features.len());
    for (i, obs) in observations.iter().enumerate() {
        if obs.features.len() != d {
            return Err(Error::Input(format!(
                "row {i} has {} features, expected {d}",
                obs.features.len()
            )));
        }
        obs.validate(DEFAULT_MAX_HORIZON)?;
    }
    Ok(d)
}

/// Per-row loss gradient and Hessian diagonal with respect to `(a, b)`:
/// the negated, weighted sbg derivatives. Components are zero where the score
/// lies outside the clamp.
pub fn beta_logistic_grad_hess(obs: &Observation, a: f64, b: f64, clamp: f64) -> ([f64; 2], [f64; 2], f64) {
    let p = BetaParams::from_log(a, b, clamp);
    let r = sbg::row_terms(p, obs.t, obs.censored).expect("validated row");
    let w = obs.weight;
    let ia = if a.abs() <= clamp { 1.0 } else { 0.0 };
    let ib = if b.abs() <= clamp { 1.0 } else { 0.0 };
    (
        [-w * r.derivs.dlog_da * ia, -w * r.derivs.dlog_db * ib],
        [-w * r.derivs.d2log_da2 * ia, -w * r.derivs.d2log_db2 * ib],
        -w * r.log_prob,
    )
}

/// Column-major feature storage with per-feature presorted row order.
struct Columns {
    values: Vec<Vec<f64>>,
    sorted: Vec<Vec<u32>>,
    missing: Vec<Vec<u32>>,
}

impl Columns {
    fn new(observations: &[Observation], d: usize) -> Self {
        let values: Vec<Vec<f64>> = (0..d)
            .map(|j| observations.iter().map(|o| o.features[j]).collect())
            .collect();
        let (sorted, missing) = values
            .par_iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..col.len() as u32).filter(|&i| !col[i as usize].is_nan()).collect();
                idx.sort_by(|&i, &j| col[i as usize].total_cmp(&col[j as usize]).then(i.cmp(&j)));
                let miss = (0..col.len() as u32).filter(|&i| col[i as usize].is_nan()).collect();
                (idx, miss)
            })
            .unzip();
        Self {
            values,
            sorted,
            missing,
        }
    }
}

#[derive(Clone, Copy)]
struct Stats<const K: usize> {
    g: [f64; K],
    h: [f64; K],
    h_floored: [f64; K],
    w: f64,
    n: usize,
}

impl<const K: usize> Default for Stats<K> {
    fn default() -> Self {
        Self {
            g: [0.0; K],
            h: [0.0; K],
            h_floored: [0.0; K],
            w: 0.0,
            n: 0,
        }
    }
}

impl<const K: usize> Stats<K> {
    fn add(&mut self, g: &[f64; K], h: &[f64; K], w: f64) {
        for k in 0..K {
            self.g[k] += g[k];
            self.h[k] += h[k];
            self.h_floored[k] += h[k].max(w * HESSIAN_FLOOR);
        }
        self.w += w;
        self.n += 1;
    }

    fn score(&self) -> f64 {
        if self.w <= 0.0 {
            return 0.0;
        }
        self.g.iter().map(|g| g * g).sum::<f64>() / self.w
    }

    /// Newton step per dimension; a gradient step when the raw curvature is
    /// not positive.
    fn leaf_value(&self, l2: f64) -> [f64; K] {
        let mut out = [0.0; K];
        for k in 0..K {
            out[k] = if self.h[k] > 0.0 {
                -self.g[k] / (self.h_floored[k] + l2)
            } else {
                -self.g[k] / self.w
            };
        }
        out
    }
}

#[derive(Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

const NO_NODE: u32 = u32::MAX;

/// Grows one tree on rows with `node_of[i] == 0` (others are out of sample).
fn grow_tree<const K: usize>(
    cols: &Columns,
    grads: &[[f64; K]],
    hess: &[[f64; K]],
    weights: &[f64],
    in_sample: &[bool],
    config: &GbrtConfig,
) -> Tree {
    let n = grads.len();
    let d = cols.values.len();
    let mut node_of: Vec<u32> = in_sample.iter().map(|s| if *s { 0 } else { NO_NODE }).collect();
    let mut nodes: Vec<TreeNode> = vec![TreeNode::leaf([0.0; 2])];
    let mut frontier: Vec<usize> = vec![0];

    for depth in 0..=config.max_depth {
        // Totals for each frontier node.
        let slot_of = |node: u32| -> Option<usize> {
            if node == NO_NODE {
                return None;
            }
            frontier.binary_search(&(node as usize)).ok()
        };
        let mut totals = vec![Stats::<K>::default(); frontier.len()];
        for i in 0..n {
            if let Some(s) = slot_of(node_of[i]) {
                totals[s].add(&grads[i], &hess[i], weights[i]);
            }
        }
        let can_split = depth < config.max_depth;
        let best: Vec<Option<Split>> = if can_split {
            let per_feature: Vec<Vec<Option<Split>>> = (0..d)
                .into_par_iter()
                .map(|j| scan_feature(j, cols, grads, hess, weights, &node_of, &frontier, &totals, config))
                .collect();
            (0..frontier.len())
                .map(|s| {
                    let mut best: Option<Split> = None;
                    for feat in &per_feature {
                        if let Some(c) = feat[s] {
                            if best.is_none_or(|b| c.gain > b.gain) {
                                best = Some(c);
                            }
                        }
                    }
                    best
                })
                .collect()
        } else {
            vec![None; frontier.len()]
        };

        let mut next = Vec::new();
        let mut children: Vec<Option<(u32, u32)>> = vec![None; frontier.len()];
        for (s, &node) in frontier.iter().enumerate() {
            match best[s] {
                Some(split) => {
                    let l = nodes.len();
                    nodes.push(TreeNode::leaf([0.0; 2]));
                    nodes.push(TreeNode::leaf([0.0; 2]));
                    nodes[node] = TreeNode {
                        feature_index: Some(split.feature),
                        threshold: split.threshold,
                        left: l,
                        right: l + 1,
                        leaf_delta_a: 0.0,
                        leaf_delta_b: 0.0,
                    };
                    children[s] = Some((l as u32, l as u32 + 1));
                    next.push(l);
                    next.push(l + 1);
                }
                None => {
                    let v = totals[s].leaf_value(config.l2_leaf);
                    let mut delta = [0.0; 2];
                    delta[..K].copy_from_slice(&v);
                    nodes[node] = TreeNode::leaf(delta);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        for i in 0..n {
            let Some(s) = slot_of(node_of[i]) else { continue };
            match (children[s], best[s]) {
                (Some((l, r)), Some(split)) => {
                    let v = cols.values[split.feature][i];
                    node_of[i] = if v.is_nan() || v < split.threshold { l } else { r };
                }
                _ => node_of[i] = NO_NODE,
            }
        }
        frontier = next;
    }
    Tree { nodes }
}

#[allow(clippy::too_many_arguments)]
fn scan_feature<const K: usize>(
    j: usize,
    cols: &Columns,
    grads: &[[f64; K]],
    hess: &[[f64; K]],
    weights: &[f64],
    node_of: &[u32],
    frontier: &[usize],
    totals: &[Stats<K>],
    config: &GbrtConfig,
) -> Vec<Option<Split>> {
    let slots = frontier.len();
    let slot_of = |node: u32| -> Option<usize> {
        if node == NO_NODE {
            return None;
        }
        frontier.binary_search(&(node as usize)).ok()
    };
    // Missing values always go left, so they seed the left accumulator.
    let mut left = vec![Stats::<K>::default(); slots];
    for &i in &cols.missing[j] {
        let i = i as usize;
        if let Some(s) = slot_of(node_of[i]) {
            left[s].add(&grads[i], &hess[i], weights[i]);
        }
    }
    let mut last: Vec<Option<f64>> = vec![None; slots];
    let mut best: Vec<Option<Split>> = vec![None; slots];
    let col = &cols.values[j];
    let min_rows = config.min_leaf_rows;
    for &i in &cols.sorted[j] {
        let i = i as usize;
        let Some(s) = slot_of(node_of[i]) else { continue };
        let x = col[i];
        if let Some(prev) = last[s] {
            if x > prev {
                let total = &totals[s];
                let l = &left[s];
                let right_n = total.n - l.n;
                if l.n >= min_rows && right_n >= min_rows {
                    let mut r = Stats::<K>::default();
                    for k in 0..K {
                        r.g[k] = total.g[k] - l.g[k];
                    }
                    r.w = total.w - l.w;
                    let gain = l.score() + r.score() - total.score();
                    if gain > 0.0 && best[s].is_none_or(|b| gain > b.gain) {
                        let mut threshold = 0.5 * (prev + x);
                        if threshold <= prev {
                            threshold = x;
                        }
                        best[s] = Some(Split {
                            feature: j,
                            threshold,
                            gain,
                        });
                    }
                }
            }
        }
        left[s].add(&grads[i], &hess[i], weights[i]);
        last[s] = Some(x);
    }
    best
}

fn sample_rows(n: usize, fraction: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    if fraction >= 1.0 {
        return vec![true; n];
    }
    (0..n).map(|_| rng.random_bool(fraction)).collect()
}

fn default_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}

/// Fits the vector-output beta-logistic GBRT.
pub fn fit_gbrt(observations: &[Observation], config: &GbrtConfig) -> Result<(GbrtBetaLogistic, GbrtReport)> {
    config.validate()?;
    let d = check_rows(observations)?;
    if observations.is_empty() {
        return Err(Error::Training("empty dataset".into()));
    }
    let cohort = fit_sbg_cohort(observations)?;
    let base = (cohort.log_alpha, cohort.log_beta);
    let clamp = DEFAULT_CLAMP;
    let cols = Columns::new(observations, d);
    let weights: Vec<f64> = observations.iter().map(|o| o.weight).collect();
    let mut scores: Vec<(f64, f64)> = vec![base; observations.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trees = Vec::with_capacity(config.rounds);
    let mut report = GbrtReport::default();

    for round in 0..=config.rounds {
        let per_row: Vec<([f64; 2], [f64; 2], f64)> = observations
            .par_iter()
            .zip(&scores)
            .map(|(o, &(a, b))| beta_logistic_grad_hess(o, a, b, clamp))
            .collect();
        report.round_losses.push(pairwise_sum(&per_row.iter().map(|r| r.2).collect::<Vec<_>>()));
        if round == config.rounds {
            break;
        }
        let grads: Vec<[f64; 2]> = per_row.iter().map(|r| r.0).collect();
        let hess: Vec<[f64; 2]> = per_row.iter().map(|r| r.1).collect();
        let in_sample = sample_rows(observations.len(), config.subsample, &mut rng);
        let tree = grow_tree::<2>(&cols, &grads, &hess, &weights, &in_sample, config);
        scores
            .par_iter_mut()
            .zip(observations)
            .for_each(|(s, o)| {
                let [da, db] = tree.predict(&o.features);
                s.0 += config.learning_rate * da;
                s.1 += config.learning_rate * db;
            });
        trees.push(tree);
        report.rounds += 1;
    }
    let model = GbrtBetaLogistic {
        trees,
        learning_rate: config.learning_rate,
        base_scores: base,
        max_depth: config.max_depth,
        feature_names: default_names(d),
        clamp,
    };
    Ok((model, report))
}

/// Boosted binary log-loss classifier on the "event by horizon" label, built
/// with the same tree grower (leaf deltas live in `leaf_delta_a`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbrtLogistic {
    pub trees: Vec<Tree>,
    pub learning_rate: f64,
    pub base_score: f64,
    pub horizon: u32,
    pub feature_names: Vec<String>,
}

impl GbrtLogistic {
    pub fn raw_score(&self, x: &[f64]) -> Result<f64> {
        check_dim(x, self.feature_names.len())?;
        Ok(self.base_score + self.learning_rate * self.trees.iter().map(|t| t.predict(x)[0]).sum::<f64>())
    }

    pub fn predict_probability(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.raw_score(x)?))
    }
}

impl RiskModel for GbrtLogistic {
    fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Predicts the training horizon only; `horizon` is ignored.
    fn risk_score(&self, x: &[f64], _horizon: u32) -> Result<f64> {
        self.predict_probability(x)
    }
}

/// Fits [`GbrtLogistic`] at horizon `h`; rows censored before `h` are dropped.
pub fn fit_gbrt_logistic(
    observations: &[Observation],
    h: u32,
    config: &GbrtConfig,
) -> Result<(GbrtLogistic, GbrtReport)> {
    config.validate()?;
    if h == 0 {
        return Err(Error::Input("horizon must be at least 1".into()));
    }
    let d = check_rows(observations)?;
    let (rows, labels): (Vec<Observation>, Vec<f64>) = observations
        .iter()
        .filter_map(|o| horizon_label(o, h).map(|y| (o.clone(), if y { 1.0 } else { 0.0 })))
        .unzip();
    let w_pos: f64 = rows.iter().zip(&labels).map(|(o, y)| o.weight * y).sum();
    let w_all: f64 = rows.iter().map(|o| o.weight).sum();
    if w_pos == 0.0 || w_pos == w_all {
        return Err(Error::Training(format!(
            "labels at horizon {h} are all one class ({w_pos} positive of {w_all} weight)"
        )));
    }
    let rate = w_pos / w_all;
    let base = (rate / (1.0 - rate)).ln();
    let cols = Columns::new(&rows, d);
    let weights: Vec<f64> = rows.iter().map(|o| o.weight).collect();
    let mut scores = vec![base; rows.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trees = Vec::with_capacity(config.rounds);
    let mut report = GbrtReport::default();
    for round in 0..=config.rounds {
        let losses: Vec<f64> = scores
            .iter()
            .zip(&labels)
            .zip(&weights)
            .map(|((z, y), w)| w * (y * softplus(-z) + (1.0 - y) * softplus(*z)))
            .collect();
        report.round_losses.push(pairwise_sum(&losses));
        if round == config.rounds {
            break;
        }
        let (grads, hess): (Vec<[f64; 1]>, Vec<[f64; 1]>) = scores
            .iter()
            .zip(&labels)
            .zip(&weights)
            .map(|((z, y), w)| {
                let p = sigmoid(*z);
                ([w * (p - y)], [w * p * (1.0 - p)])
            })
            .unzip();
        let in_sample = sample_rows(rows.len(), config.subsample, &mut rng);
        let tree = grow_tree::<1>(&cols, &grads, &hess, &weights, &in_sample, config);
        for (s, o) in scores.iter_mut().zip(&rows) {
            *s += config.learning_rate * tree.predict(&o.features)[0];
        }
        trees.push(tree);
        report.rounds += 1;
    }
    let model = GbrtLogistic {
        trees,
        learning_rate: config.learning_rate,
        base_score: base,
        horizon: h,
        feature_names: default_names(d),
    };
    Ok((model, report))
}

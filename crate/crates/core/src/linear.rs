//! Conditional beta-logistic with linear predictors
//! `a(x) = γa·x + ca`, `b(x) = γb·x + cb`, `α = e^a`, `β = e^b`.
//!
//! Training minimizes `ℓ + (λ/2)(‖γa‖² + ‖γb‖²)` (intercepts unpenalized).
//! Full-batch training uses L-BFGS or plain gradient descent, both with a
//! backtracking line search and optional Hessian-diagonal preconditioning.
//! Mini-batch SGD is available for large inputs.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta_math::BetaParams;
use crate::error::{Error, Result};
use crate::numeric::{dot, norm2, pairwise_sum, sigmoid};
use crate::sbg::{self, Observation, DEFAULT_MAX_HORIZON};
use crate::RiskModel;

/// Linear scores are clamped to `[-30, 30]` before exponentiation.
pub const DEFAULT_CLAMP: f64 = 30.0;

const DIAG_NEWTON_DAMPING: f64 = 1e-3;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const MAX_STEP: f64 = 1e6;
const LBFGS_MEMORY: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearBetaLogistic {
    pub gamma_a: Vec<f64>,
    pub gamma_b: Vec<f64>,
    pub intercept_a: f64,
    pub intercept_b: f64,
    pub feature_names: Vec<String>,
    pub clamp: f64,
}

/// `P(T = 1 | x) = 1 / (1 + exp(c·x + c0))`, the one-step logistic form of a
/// linear beta-logistic model.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticEquivalent {
    /// `γb − γa`.
    pub coefficients: Vec<f64>,
    /// `cb − ca`.
    pub intercept: f64,
}

impl LogisticEquivalent {
    pub fn first_step_probability(&self, x: &[f64]) -> f64 {
        sigmoid(-(dot(&self.coefficients, x) + self.intercept))
    }
}

impl LinearBetaLogistic {
    /// All-zero model: every prediction is the uniform prior `Beta(1, 1)`.
    pub fn zeros(n_features: usize) -> Self {
        Self {
            gamma_a: vec![0.0; n_features],
            gamma_b: vec![0.0; n_features],
            intercept_a: 0.0,
            intercept_b: 0.0,
            feature_names: (0..n_features).map(|j| format!("x{j}")).collect(),
            clamp: DEFAULT_CLAMP,
        }
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        self.feature_names = names;
        self
    }

    fn from_flat(params: &[f64], d: usize) -> Self {
        Self {
            gamma_a: params[..d].to_vec(),
            gamma_b: params[d..2 * d].to_vec(),
            intercept_a: params[2 * d],
            intercept_b: params[2 * d + 1],
            ..Self::zeros(d)
        }
    }

    pub fn n_features(&self) -> usize {
        self.gamma_a.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::Input(format!(
                "feature vector has {} entries, model expects {}",
                x.len(),
                self.n_features()
            )));
        }
        Ok(())
    }

    /// Unclamped `(a(x), b(x))`. Missing (`NaN`) features contribute zero.
    pub fn linear_scores(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_dim(x)?;
        let mut a = self.intercept_a;
        let mut b = self.intercept_b;
        for ((xj, ga), gb) in x.iter().zip(&self.gamma_a).zip(&self.gamma_b) {
            if !xj.is_nan() {
                a += ga * xj;
                b += gb * xj;
            }
        }
        Ok((a, b))
    }

    pub fn predict_params(&self, x: &[f64]) -> Result<BetaParams> {
        let (a, b) = self.linear_scores(x)?;
        Ok(BetaParams::from_log(a, b, self.clamp))
    }

    /// `[P(T > 1 | x), ..., P(T > horizon | x)]`.
    pub fn predict_survival_curve(&self, x: &[f64], horizon: u32) -> Result<Vec<f64>> {
        Ok(sbg::survival_curve(self.predict_params(x)?, horizon))
    }

    /// Variance of `θ` under the predicted prior.
    pub fn predict_event_variance(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_params(x)?.variance())
    }

    pub fn to_logistic_equivalent(&self) -> LogisticEquivalent {
        LogisticEquivalent {
            coefficients: self
                .gamma_b
                .iter()
                .zip(&self.gamma_a)
                .map(|(b, a)| b - a)
                .collect(),
            intercept: self.intercept_b - self.intercept_a,
        }
    }
}

impl RiskModel for LinearBetaLogistic {
    fn n_features(&self) -> usize {
        self.gamma_a.len()
    }

    fn risk_score(&self, x: &[f64], horizon: u32) -> Result<f64> {
        Ok(1.0 - sbg::survival(self.predict_params(x)?, horizon))
    }

    fn event_variance(&self, x: &[f64]) -> Result<f64> {
        self.predict_event_variance(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchSize {
    Full,
    Mini(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Lbfgs,
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Full-batch optimizer; ignored for mini-batch training.
    pub optimizer: Optimizer,
    /// Initial step for the line search (full batch) or the fixed SGD step.
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub l2_penalty: f64,
    /// Stop once the objective gradient, divided by the total weight, has
    /// Euclidean norm at most this value.
    pub gradient_tolerance: f64,
    pub batch_size: BatchSize,
    /// Precondition steps by `1 / (|∂²/∂θⱼ²| + 1e-3)`.
    pub use_diag_newton: bool,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Lbfgs,
            learning_rate: 1.0,
            max_epochs: 20_000,
            l2_penalty: 1e-4,
            gradient_tolerance: 1e-8,
            batch_size: BatchSize::Full,
            use_diag_newton: true,
            seed: 0,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Input("learning_rate must be positive".into()));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::Input("gradient_tolerance must be positive".into()));
        }
        if !(self.l2_penalty >= 0.0) {
            return Err(Error::Input("l2_penalty must be nonnegative".into()));
        }
        if self.batch_size == BatchSize::Mini(0) {
            return Err(Error::Input("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingReport {
    /// Penalized objective after each epoch.
    pub epoch_losses: Vec<f64>,
    /// Unpenalized negative log-likelihood at the returned solution.
    pub final_nll: f64,
    /// Objective gradient norm divided by the total weight.
    pub final_gradient_norm: f64,
    pub epochs: usize,
    pub converged: bool,
}

/// Penalized beta-logistic objective over linear predictors.
///
/// Parameter layout: `[γa (d), γb (d), ca, cb]`. Rows with identical
/// `(t, censored, x)` are merged with summed weights, which leaves every
/// value and derivative unchanged.
#[derive(Debug, Clone)]
pub struct LinearObjective {
    rows: Vec<Observation>,
    d: usize,
    l2: f64,
    clamp: f64,
    total_weight: f64,
}

struct Evaluation {
    value: f64,
    nll: f64,
    gradient: Vec<f64>,
    curvature: Vec<f64>,
}

impl LinearObjective {
    pub fn new(observations: &[Observation], l2: f64) -> Result<Self> {
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
        let rows = compress(observations);
        let total_weight = pairwise_sum(&rows.iter().map(|r| r.weight).collect::<Vec<_>>());
        Ok(Self {
            rows,
            d,
            l2,
            clamp: DEFAULT_CLAMP,
            total_weight,
        })
    }

    pub fn n_params(&self) -> usize {
        2 * self.d + 2
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Number of distinct rows after merging duplicates.
    pub fn n_unique_rows(&self) -> usize {
        self.rows.len()
    }

    fn scores(&self, params: &[f64], x: &[f64]) -> (f64, f64) {
        let d = self.d;
        (
            dot(&params[..d], x) + params[2 * d],
            dot(&params[d..2 * d], x) + params[2 * d + 1],
        )
    }

    fn penalty(&self, params: &[f64]) -> f64 {
        0.5 * self.l2 * params[..2 * self.d].iter().map(|v| v * v).sum::<f64>()
    }

    fn nll(&self, params: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .rows
            .par_iter()
            .map(|row| {
                let (a, b) = self.scores(params, &row.features);
                let p = BetaParams::from_log(a, b, self.clamp);
                let lp = sbg::log_likelihood_row(p, row.t, row.censored).expect("validated t");
                -row.weight * lp
            })
            .collect();
        pairwise_sum(&terms)
    }

    /// Penalized objective value.
    pub fn value(&self, params: &[f64]) -> f64 {
        self.nll(params) + self.penalty(params)
    }

    /// Gradient of the penalized objective.
    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        self.evaluate(params, &self.rows).gradient
    }

    fn evaluate(&self, params: &[f64], rows: &[Observation]) -> Evaluation {
        let d = self.d;
        let per_row: Vec<[f64; 5]> = rows
            .par_iter()
            .map(|row| {
                let (a, b) = self.scores(params, &row.features);
                let p = BetaParams::from_log(a, b, self.clamp);
                let terms = sbg::row_terms(p, row.t, row.censored).expect("validated t");
                let w = row.weight;
                let inside = |s: f64| if s.abs() <= self.clamp { 1.0 } else { 0.0 };
                let (ia, ib) = (inside(a), inside(b));
                [
                    -w * terms.log_prob,
                    -w * terms.derivs.dlog_da * ia,
                    -w * terms.derivs.dlog_db * ib,
                    -w * terms.derivs.d2log_da2 * ia,
                    -w * terms.derivs.d2log_db2 * ib,
                ]
            })
            .collect();

        let mut gradient = vec![0.0; 2 * d + 2];
        let mut curvature = vec![0.0; 2 * d + 2];
        for (row, [_, ga, gb, ha, hb]) in rows.iter().zip(&per_row) {
            for (j, &x) in row.features.iter().enumerate() {
                gradient[j] += ga * x;
                gradient[d + j] += gb * x;
                curvature[j] += ha * x * x;
                curvature[d + j] += hb * x * x;
            }
            gradient[2 * d] += ga;
            gradient[2 * d + 1] += gb;
            curvature[2 * d] += ha;
            curvature[2 * d + 1] += hb;
        }
        for j in 0..2 * d {
            gradient[j] += self.l2 * params[j];
            curvature[j] += self.l2;
        }
        let nll = pairwise_sum(&per_row.iter().map(|r| r[0]).collect::<Vec<_>>());
        Evaluation {
            value: nll + self.penalty(params),
            nll,
            gradient,
            curvature,
        }
    }
}

/// Merges rows with identical outcome and features, summing weights.
/// Missing features are zero-filled first.
pub(crate) fn compress(observations: &[Observation]) -> Vec<Observation> {
    let mut index: HashMap<(u32, bool, Vec<u64>), usize> = HashMap::new();
    let mut rows: Vec<Observation> = Vec::new();
    for obs in observations {
        let features: Vec<f64> = obs
            .features
            .iter()
            .map(|v| if v.is_nan() { 0.0 } else { *v })
            .collect();
        let key = (obs.t, obs.censored, features.iter().map(|v| v.to_bits()).collect());
        match index.get(&key) {
            Some(&i) => rows[i].weight += obs.weight,
            None => {
                index.insert(key, rows.len());
                rows.push(Observation {
                    features,
                    ..obs.clone()
                });
            }
        }
    }
    rows
}

/// Fits the linear beta-logistic model.
pub fn fit_linear(
    observations: &[Observation],
    config: &FitConfig,
) -> Result<(LinearBetaLogistic, TrainingReport)> {
    config.validate()?;
    if observations.is_empty() {
        return Err(Error::Training("empty dataset".into()));
    }
    if observations.iter().all(|o| o.censored) {
        return Err(Error::Training(
            "every row is censored; the likelihood is unbounded as β grows".into(),
        ));
    }
    let objective = LinearObjective::new(observations, config.l2_penalty)?;
    let d = objective.d;
    let mut params = vec![0.0; objective.n_params()];
    let report = match config.batch_size {
        BatchSize::Full => full_batch(&objective, &mut params, config),
        BatchSize::Mini(size) => mini_batch(&objective, &mut params, config, size),
    };
    Ok((LinearBetaLogistic::from_flat(&params, d), report))
}

fn preconditioner(eval: &Evaluation, config: &FitConfig, weight: f64) -> Vec<f64> {
    if config.use_diag_newton {
        eval.curvature
            .iter()
            .map(|h| 1.0 / (h.abs() + DIAG_NEWTON_DAMPING))
            .collect()
    } else {
        vec![1.0 / weight; eval.gradient.len()]
    }
}

/// Two-loop recursion: `-H g` for the L-BFGS inverse Hessian built on `h0`.
fn lbfgs_direction(gradient: &[f64], h0: &[f64], memory: &[(Vec<f64>, Vec<f64>, f64)]) -> Vec<f64> {
    let mut q = gradient.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let mut r: Vec<f64> = q.iter().zip(h0).map(|(q, h)| q * h).collect();
    if let Some((s, y, _)) = memory.last() {
        // Rescale the diagonal so it matches the most recent curvature pair.
        let hy: f64 = y.iter().zip(h0).map(|(y, h)| y * y * h).sum();
        let gamma = dot(s, y) / hy;
        if gamma.is_finite() && gamma > 0.0 {
            r.iter_mut().for_each(|v| *v *= gamma);
        }
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &r);
        for (ri, si) in r.iter_mut().zip(s) {
            *ri += (a - b) * si;
        }
    }
    r.iter_mut().for_each(|v| *v = -*v);
    r
}

fn full_batch(objective: &LinearObjective, params: &mut [f64], config: &FitConfig) -> TrainingReport {
    let weight = objective.total_weight;
    let mut eval = objective.evaluate(params, &objective.rows);
    let mut report = TrainingReport::default();
    let mut step = config.learning_rate;
    let mut memory: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();

    for _ in 0..config.max_epochs {
        if norm2(&eval.gradient) / weight <= config.gradient_tolerance {
            report.converged = true;
            break;
        }
        let h0 = preconditioner(&eval, config, weight);
        let (mut dir, mut s) = match config.optimizer {
            Optimizer::Lbfgs => (lbfgs_direction(&eval.gradient, &h0, &memory), config.learning_rate),
            Optimizer::GradientDescent => (
                eval.gradient.iter().zip(&h0).map(|(g, h)| -g * h).collect(),
                step,
            ),
        };
        let mut slope = dot(&eval.gradient, &dir);
        if !(slope < 0.0) {
            memory.clear();
            dir = eval.gradient.iter().zip(&h0).map(|(g, h)| -g * h).collect();
            slope = dot(&eval.gradient, &dir);
            s = config.learning_rate;
        }
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = params.iter().zip(&dir).map(|(p, d)| p + s * d).collect();
            let value = objective.value(&trial);
            if value <= eval.value + ARMIJO * s * slope {
                accepted = Some(trial);
                break;
            }
            s *= 0.5;
        }
        let Some(trial) = accepted else {
            if !memory.is_empty() {
                memory.clear();
                continue;
            }
            // No decrease along a descent direction: numerically at the optimum.
            report.converged = norm2(&eval.gradient) / weight <= config.gradient_tolerance.sqrt();
            break;
        };
        let next = objective.evaluate(&trial, &objective.rows);
        let sv: Vec<f64> = trial.iter().zip(params.iter()).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = next.gradient.iter().zip(&eval.gradient).map(|(a, b)| a - b).collect();
        let sy = dot(&sv, &yv);
        if sy > 1e-12 * norm2(&sv) * norm2(&yv) {
            if memory.len() == LBFGS_MEMORY {
                memory.remove(0);
            }
            memory.push((sv, yv, 1.0 / sy));
        }
        params.copy_from_slice(&trial);
        eval = next;
        report.epoch_losses.push(eval.value);
        report.epochs += 1;
        step = (2.0 * s).min(MAX_STEP);
    }
    report.final_nll = eval.nll;
    report.final_gradient_norm = norm2(&eval.gradient) / weight;
    report
}

fn mini_batch(
    objective: &LinearObjective,
    params: &mut [f64],
    config: &FitConfig,
    batch: usize,
) -> TrainingReport {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..objective.rows.len()).collect();
    let mut report = TrainingReport::default();
    for _ in 0..config.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let rows: Vec<Observation> = chunk.iter().map(|&i| objective.rows[i].clone()).collect();
            let batch_weight: f64 = rows.iter().map(|r| r.weight).sum();
            let mut eval = objective.evaluate(params, &rows);
            // Rescale the data term so the batch estimates the full objective.
            let scale = objective.total_weight / batch_weight;
            for j in 0..eval.gradient.len() {
                let pen = if j < 2 * objective.d { objective.l2 } else { 0.0 };
                let pen_grad = pen * params[j];
                eval.gradient[j] = (eval.gradient[j] - pen_grad) * scale + pen_grad;
                eval.curvature[j] = (eval.curvature[j] - pen) * scale + pen;
            }
            let h0 = preconditioner(&eval, config, objective.total_weight);
            for ((p, g), h) in params.iter_mut().zip(&eval.gradient).zip(&h0) {
                *p -= config.learning_rate * g * h;
            }
        }
        let eval = objective.evaluate(params, &objective.rows);
        report.epoch_losses.push(eval.value);
        report.epochs += 1;
        report.final_nll = eval.nll;
        report.final_gradient_norm = norm2(&eval.gradient) / objective.total_weight;
        if report.final_gradient_norm <= config.gradient_tolerance {
            report.converged = true;
            break;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn bp(a: f64, b: f64) -> BetaParams {
        BetaParams::new(a, b).unwrap()
    }

    #[test]
    fn zero_model_predicts_uniform_prior() {
        let m = LinearBetaLogistic::zeros(3);
        assert_eq!(m.predict_params(&[5.0, -1.0, 2.0]).unwrap(), bp(1.0, 1.0));
        assert!((m.predict_event_variance(&[0.0; 3]).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert!(m.predict_params(&[1.0]).is_err());
    }

    #[test]
    fn intercepts_map_to_params() {
        let mut m = LinearBetaLogistic::zeros(2);
        m.intercept_a = 2f64.ln();
        m.intercept_b = 3f64.ln();
        let p = m.predict_params(&[0.3, 0.4]).unwrap();
        assert!((p.alpha - 2.0).abs() < 1e-14 && (p.beta - 3.0).abs() < 1e-14);

        let eq = m.to_logistic_equivalent();
        assert!((eq.intercept - 1.5f64.ln()).abs() < 1e-15);
        assert!((eq.first_step_probability(&[0.3, 0.4]) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn survival_curve_uniform_prior() {
        let m = LinearBetaLogistic::zeros(1);
        let c = m.predict_survival_curve(&[1.0], 3).unwrap();
        for (got, want) in c.iter().zip([0.5, 1.0 / 3.0, 0.25]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(m.predict_survival_curve(&[1.0], 1).unwrap()[0], sbg::survival(bp(1.0, 1.0), 1));

        let mut skewed = LinearBetaLogistic::zeros(1);
        skewed.intercept_b = 12.0;
        assert!(skewed.predict_survival_curve(&[0.0], 20).unwrap().iter().all(|s| *s > 0.999));
    }

    #[test]
    fn variance_examples() {
        let mut m = LinearBetaLogistic::zeros(0);
        m.intercept_a = 2f64.ln();
        m.intercept_b = 2f64.ln();
        assert!((m.predict_event_variance(&[]).unwrap() - 0.05).abs() < 1e-15);
        m.intercept_a = 4.75f64.ln();
        m.intercept_b = 14.25f64.ln();
        assert!((m.predict_event_variance(&[]).unwrap() - 0.009375).abs() < 1e-12);
    }

    #[test]
    fn clamp_bounds_predictions() {
        let mut m = LinearBetaLogistic::zeros(1);
        m.gamma_a[0] = 1e6;
        m.gamma_b[0] = -1e6;
        let p = m.predict_params(&[1.0]).unwrap();
        assert_eq!(p.alpha, 30f64.exp());
        assert_eq!(p.beta, (-30f64).exp());
    }

    #[test]
    fn logistic_equivalence_on_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let d = 4;
            let mut m = LinearBetaLogistic::zeros(d);
            for j in 0..d {
                m.gamma_a[j] = rng.random_range(-1.0..1.0);
                m.gamma_b[j] = rng.random_range(-1.0..1.0);
            }
            m.intercept_a = rng.random_range(-1.0..1.0);
            m.intercept_b = rng.random_range(-1.0..1.0);
            let eq = m.to_logistic_equivalent();
            for _ in 0..100 {
                let x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let p = m.predict_params(&x).unwrap();
                assert!((eq.first_step_probability(&x) - p.mean()).abs() < 1e-12);
            }
        }
        let same = LinearBetaLogistic::zeros(3).to_logistic_equivalent();
        assert_eq!(same.coefficients, vec![0.0; 3]);
        assert_eq!(same.first_step_probability(&[1.0, 2.0, 3.0]), 0.5);
    }

    /// Draws from a linear beta-logistic model with heterogeneous `θ`,
    /// censored after `t = 7`.
    fn small_dataset(seed: u64, n: usize, d: usize) -> Vec<Observation> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let a = 0.3 + x.iter().sum::<f64>() * 0.4;
                let b = 1.0 - x.first().copied().unwrap_or(0.0) * 0.5;
                let theta: f64 = rand_distr::Beta::new(a.exp(), b.exp()).unwrap().sample(&mut rng);
                let mut t = 1;
                while t < 8 && !rng.random_bool(theta) {
                    t += 1;
                }
                if t == 8 {
                    Observation::censored(7, x)
                } else {
                    Observation::event(t, x)
                }
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let obs = small_dataset(3, 150, 4);
        let objective = LinearObjective::new(&obs, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params: Vec<f64> = (0..objective.n_params()).map(|_| rng.random_range(-0.5..0.5)).collect();
        let g = objective.gradient(&params);
        let h = 1e-6;
        for j in 0..params.len() {
            let mut up = params.clone();
            let mut dn = params.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (objective.value(&up) - objective.value(&dn)) / (2.0 * h);
            assert!((g[j] - fd).abs() <= 1e-4 * fd.abs().max(1.0), "param {j}: {} vs {fd}", g[j]);
        }
    }

    #[test]
    fn full_batch_loss_is_monotone_and_converges() {
        let obs = small_dataset(9, 200, 3);
        for (diag, optimizer) in [
            (true, Optimizer::Lbfgs),
            (false, Optimizer::Lbfgs),
            (true, Optimizer::GradientDescent),
        ] {
            let cfg = FitConfig {
                use_diag_newton: diag,
                optimizer,
                gradient_tolerance: 1e-7,
                ..FitConfig::default()
            };
            let (_, report) = fit_linear(&obs, &cfg).unwrap();
            assert!(report.converged, "diag = {diag}: {report:?}");
            assert!(report.epoch_losses.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn mini_batch_reaches_full_batch_solution() {
        let obs = small_dataset(10, 400, 2);
        let (full, _) = fit_linear(&obs, &FitConfig::default()).unwrap();
        let cfg = FitConfig {
            batch_size: BatchSize::Mini(64),
            learning_rate: 0.05,
            max_epochs: 400,
            ..FitConfig::default()
        };
        let (mb, report) = fit_linear(&obs, &cfg).unwrap();
        assert_eq!(report.epochs, report.epoch_losses.len());
        let x = &obs[0].features;
        let (pf, pm) = (full.predict_params(x).unwrap(), mb.predict_params(x).unwrap());
        assert!((pf.mean() - pm.mean()).abs() < 0.02, "{pf:?} vs {pm:?}");
    }

    #[test]
    fn training_errors() {
        let cens = vec![Observation::censored(3, vec![1.0]); 4];
        assert!(matches!(fit_linear(&cens, &FitConfig::default()), Err(Error::Training(_))));
        let ragged = vec![Observation::event(1, vec![1.0]), Observation::event(2, vec![1.0, 2.0])];
        assert!(matches!(fit_linear(&ragged, &FitConfig::default()), Err(Error::Input(_))));
        assert!(fit_linear(&[], &FitConfig::default()).is_err());
        let bad = FitConfig {
            learning_rate: 0.0,
            ..FitConfig::default()
        };
        assert!(fit_linear(&small_dataset(1, 10, 1), &bad).is_err());
    }

    #[test]
    fn duplicated_constant_feature_matches_intercept_only() {
        let base = small_dataset(12, 300, 0);
        let dup: Vec<Observation> = base
            .iter()
            .map(|o| Observation {
                features: vec![1.0, 1.0],
                ..o.clone()
            })
            .collect();
        let (m0, _) = fit_linear(&base, &FitConfig::default()).unwrap();
        let (m2, r2) = fit_linear(&dup, &FitConfig::default()).unwrap();
        assert!(r2.converged);
        let p0 = m0.predict_params(&[]).unwrap();
        let p2 = m2.predict_params(&[1.0, 1.0]).unwrap();
        assert!((p0.alpha - p2.alpha).abs() < 1e-4 * p0.alpha, "{p0:?} {p2:?}");
        assert!((p0.beta - p2.beta).abs() < 1e-4 * p0.beta);
    }

    #[test]
    fn feature_scaling_leaves_predictions_unchanged_without_penalty() {
        let obs = small_dataset(13, 200, 2);
        let scaled: Vec<Observation> = obs
            .iter()
            .map(|o| Observation {
                features: o.features.iter().map(|v| 7.5 * v).collect(),
                ..o.clone()
            })
            .collect();
        let cfg = FitConfig {
            l2_penalty: 0.0,
            gradient_tolerance: 1e-9,
            ..FitConfig::default()
        };
        let (m, _) = fit_linear(&obs, &cfg).unwrap();
        let (ms, _) = fit_linear(&scaled, &cfg).unwrap();
        for (o, s) in obs.iter().zip(&scaled).take(20) {
            let p = m.predict_params(&o.features).unwrap();
            let q = ms.predict_params(&s.features).unwrap();
            assert!((p.mean() - q.mean()).abs() < 1e-5);
            assert!((p.variance() - q.variance()).abs() < 1e-5);
        }
    }

    #[test]
    fn compression_preserves_objective() {
        let obs = small_dataset(14, 100, 1)
            .into_iter()
            .map(|mut o| {
                o.features[0] = (o.features[0] * 2.0).round();
                o
            })
            .collect::<Vec<_>>();
        let compressed = compress(&obs);
        assert!(compressed.len() < obs.len());
        let params = BetaParams::new(0.8, 2.5).unwrap();
        let full = sbg::neg_log_likelihood(&obs, &vec![params; obs.len()]).unwrap();
        let merged = sbg::neg_log_likelihood(&compressed, &vec![params; compressed.len()]).unwrap();
        assert!((full - merged).abs() < 1e-9 * full);
    }
}

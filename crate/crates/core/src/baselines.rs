//! Comparison models: horizon-h binary logistic regression with Laplace
//! posterior variance, and a point-estimate shifted-geometric survival model.
//!
//! Both are binomial GLMs on an augmented design `[1, x]` and share one
//! Newton solver. Rows with identical features are merged into weighted
//! success/failure counts first.

use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{normal_cdf, pairwise_sum, sigmoid, softplus};
use crate::sbg::{Observation, DEFAULT_MAX_HORIZON};
use crate::RiskModel;

/// Full-Hessian storage and Laplace variance are limited to this many features.
pub const FULL_HESSIAN_MAX_DIM: usize = 200;

/// Binary outcome "event by horizon `h`":
/// `Some(true)` for an event at `t ≤ h`, `Some(false)` for an event after `h`
/// or a row censored at `t ≥ h` (known to survive past `h`), and `None` for
/// rows censored before `h`.
pub fn horizon_label(obs: &Observation, h: u32) -> Option<bool> {
    if !obs.censored {
        Some(obs.t <= h)
    } else if obs.t >= h {
        Some(false)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlmConfig {
    /// Ridge penalty on the feature coefficients (the intercept is unpenalized).
    pub l2_penalty: f64,
    pub max_iter: usize,
    /// Stop once the gradient norm divided by the total weight falls below this.
    pub gradient_tolerance: f64,
}

impl Default for GlmConfig {
    fn default() -> Self {
        Self {
            l2_penalty: 1e-4,
            max_iter: 100,
            gradient_tolerance: 1e-10,
        }
    }
}

/// One design row with weighted success and failure counts.
struct GlmRow {
    x: Vec<f64>,
    successes: f64,
    failures: f64,
}

struct GlmFit {
    /// `[intercept, θ₁, ..., θ_d]`.
    coef: Vec<f64>,
    hessian: DMatrix<f64>,
    loss: f64,
    iterations: usize,
    converged: bool,
}

fn merge_rows(rows: impl Iterator<Item = (Vec<f64>, f64, f64)>) -> Vec<GlmRow> {
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut out: Vec<GlmRow> = Vec::new();
    for (x, s, f) in rows {
        let x: Vec<f64> = x.iter().map(|v| if v.is_nan() { 0.0 } else { *v }).collect();
        let key = x.iter().map(|v| v.to_bits()).collect();
        match index.get(&key) {
            Some(&i) => {
                out[i].successes += s;
                out[i].failures += f;
            }
            None => {
                index.insert(key, out.len());
                out.push(GlmRow {
                    x,
                    successes: s,
                    failures: f,
                });
            }
        }
    }
    out
}

struct Design {
    x: DMatrix<f64>,
    successes: DVector<f64>,
    totals: DVector<f64>,
    total_weight: f64,
}

impl Design {
    fn new(rows: &[GlmRow], d: usize) -> Self {
        let n = rows.len();
        let x = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { rows[i].x[j - 1] });
        let successes = DVector::from_iterator(n, rows.iter().map(|r| r.successes));
        let totals = DVector::from_iterator(n, rows.iter().map(|r| r.successes + r.failures));
        let total_weight = totals.sum();
        Self {
            x,
            successes,
            totals,
            total_weight,
        }
    }

    fn loss(&self, coef: &DVector<f64>, l2: f64) -> f64 {
        let z = &self.x * coef;
        let terms: Vec<f64> = (0..z.len())
            .map(|i| {
                let s = self.successes[i];
                let f = self.totals[i] - s;
                s * softplus(-z[i]) + f * softplus(z[i])
            })
            .collect();
        pairwise_sum(&terms) + 0.5 * l2 * coef.rows(1, coef.len() - 1).norm_squared()
    }

    fn gradient_hessian(&self, coef: &DVector<f64>, l2: f64) -> (DVector<f64>, DMatrix<f64>) {
        let z = &self.x * coef;
        let p = z.map(sigmoid);
        let resid = DVector::from_fn(z.len(), |i, _| self.totals[i] * p[i] - self.successes[i]);
        let mut grad = self.x.tr_mul(&resid);
        let sqrt_w = DVector::from_fn(z.len(), |i, _| (self.totals[i] * p[i] * (1.0 - p[i])).sqrt());
        let mut xw = self.x.clone();
        for mut col in xw.column_iter_mut() {
            col.component_mul_assign(&sqrt_w);
        }
        let mut hess = xw.tr_mul(&xw);
        for j in 1..coef.len() {
            grad[j] += l2 * coef[j];
            hess[(j, j)] += l2;
        }
        (grad, hess)
    }
}

fn newton_step(grad: &DVector<f64>, hess: &DMatrix<f64>) -> DVector<f64> {
    if let Some(chol) = Cholesky::new(hess.clone()) {
        return -chol.solve(grad);
    }
    // Separable or rank-deficient designs: damped diagonal step.
    DVector::from_fn(grad.len(), |i, _| -grad[i] / (hess[(i, i)].abs() + 1e-8))
}

fn fit_glm(rows: &[GlmRow], d: usize, config: &GlmConfig) -> GlmFit {
    let design = Design::new(rows, d);
    let l2 = config.l2_penalty;
    let mut coef = DVector::zeros(d + 1);
    let successes = design.successes.sum();
    let rate = (successes / design.total_weight).clamp(1e-12, 1.0 - 1e-12);
    coef[0] = (rate / (1.0 - rate)).ln();

    let mut loss = design.loss(&coef, l2);
    let (mut grad, mut hess) = design.gradient_hessian(&coef, l2);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        if grad.norm() / design.total_weight <= config.gradient_tolerance {
            converged = true;
            break;
        }
        let step = newton_step(&grad, &hess);
        let slope = grad.dot(&step);
        let mut s = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let trial = &coef + s * &step;
            let trial_loss = design.loss(&trial, l2);
            if trial_loss <= loss + 1e-4 * s * slope {
                coef = trial;
                loss = trial_loss;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        iterations += 1;
        let (g, h) = design.gradient_hessian(&coef, l2);
        grad = g;
        hess = h;
        if !accepted {
            converged = grad.norm() / design.total_weight <= config.gradient_tolerance.sqrt();
            break;
        }
    }
    GlmFit {
        coef: coef.iter().copied().collect(),
        hessian: hess,
        loss,
        iterations,
        converged,
    }
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

fn check_dim(x: &[f64], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::Input(format!(
            "feature vector has {} entries, model expects {d}",
            x.len()
        )));
    }
    Ok(())
}

fn linear_score(coef: &[f64], intercept: f64, x: &[f64]) -> f64 {
    intercept
        + coef
            .iter()
            .zip(x)
            .filter(|(_, v)| !v.is_nan())
            .map(|(c, v)| c * v)
            .sum::<f64>()
}

fn default_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}

/// Summary of a baseline fit.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmReport {
    /// Penalized negative log-likelihood at the solution.
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Rows that entered the fit (after horizon labeling for logistic models).
    pub n_used: usize,
}

/// Binary logistic regression on the "event by horizon" label.
///
/// The Hessian covers `[intercept, θ]`; index 0 of `hessian_diag` and row and
/// column 0 of `hessian_full` belong to the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub theta: Vec<f64>,
    pub intercept: f64,
    pub horizon: u32,
    pub feature_names: Vec<String>,
    pub hessian_diag: Option<Vec<f64>>,
    /// Row-major `(d+1) × (d+1)`, stored only when `d ≤ 200`.
    pub hessian_full: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    Diagonal,
    Full,
}

/// Gaussian distribution of the linear score `Y = θ·x + c` under the Laplace
/// posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianScorePosterior {
    pub mu: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionVariance {
    /// Approximation clipped to `[0, 0.25]`.
    pub value: f64,
    /// Unclipped approximation; may be slightly negative near `σ² = 0`.
    pub raw: f64,
    pub posterior: GaussianScorePosterior,
}

/// Variance of `sigmoid(Y)` for Gaussian `Y`, by the probit-style
/// approximation `Φ((πμ/√8 − 1)/√(π − 1 + π²σ²/8)) − (1 + exp(−μ/√(1 + πσ²/8)))⁻²`.
pub fn sigmoid_gaussian_variance(posterior: GaussianScorePosterior) -> PredictionVariance {
    use std::f64::consts::PI;
    let GaussianScorePosterior { mu, sigma2 } = posterior;
    let first = normal_cdf((PI * mu / 8f64.sqrt() - 1.0) / (PI - 1.0 + PI * PI * sigma2 / 8.0).sqrt());
    let mean = sigmoid(mu / (1.0 + PI * sigma2 / 8.0).sqrt());
    let raw = first - mean * mean;
    PredictionVariance {
        value: raw.clamp(0.0, 0.25),
        raw,
        posterior,
    }
}

/// Fits a logistic regression at horizon `h`; rows censored before `h` are dropped.
pub fn fit_logistic_at_horizon(
    observations: &[Observation],
    h: u32,
    config: &GlmConfig,
) -> Result<(LogisticModel, GlmReport)> {
    if h == 0 {
        return Err(Error::Input("horizon must be at least 1".into()));
    }
    let d = check_rows(observations)?;
    let mut positives = 0.0;
    let mut negatives = 0.0;
    let mut n_used = 0;
    let labeled = observations.iter().filter_map(|o| {
        let y = horizon_label(o, h)?;
        Some((o, y))
    });
    let mut raw = Vec::new();
    for (o, y) in labeled {
        n_used += 1;
        if y {
            positives += o.weight;
            raw.push((o.features.clone(), o.weight, 0.0));
        } else {
            negatives += o.weight;
            raw.push((o.features.clone(), 0.0, o.weight));
        }
    }
    if positives == 0.0 || negatives == 0.0 {
        return Err(Error::Training(format!(
            "labels at horizon {h} are all one class ({positives} positive, {negatives} negative weight)"
        )));
    }
    let rows = merge_rows(raw.into_iter());
    let fit = fit_glm(&rows, d, config);
    let hessian_diag = Some(fit.hessian.diagonal().iter().copied().collect());
    let hessian_full = (d <= FULL_HESSIAN_MAX_DIM).then(|| fit.hessian.transpose().iter().copied().collect());
    let model = LogisticModel {
        theta: fit.coef[1..].to_vec(),
        intercept: fit.coef[0],
        horizon: h,
        feature_names: default_names(d),
        hessian_diag,
        hessian_full,
    };
    let report = GlmReport {
        loss: fit.loss,
        iterations: fit.iterations,
        converged: fit.converged,
        n_used,
    };
    Ok((model, report))
}

/// Precomputed Laplace posterior over `[intercept, θ]` for repeated variance queries.
pub struct LaplacePosterior {
    mode: VarianceMode,
    inv_diag: Vec<f64>,
    chol: Option<Cholesky<f64, nalgebra::Dyn>>,
}

impl LaplacePosterior {
    pub fn score_posterior(&self, model: &LogisticModel, x: &[f64]) -> Result<GaussianScorePosterior> {
        check_dim(x, model.theta.len())?;
        let mu = linear_score(&model.theta, model.intercept, x);
        let aug = augmented(x);
        let sigma2 = match self.mode {
            VarianceMode::Diagonal => aug.iter().zip(&self.inv_diag).map(|(v, s)| v * v * s).sum(),
            VarianceMode::Full => {
                let chol = self.chol.as_ref().expect("full mode has a factor");
                let v = DVector::from_vec(aug);
                v.dot(&chol.solve(&v))
            }
        };
        Ok(GaussianScorePosterior { mu, sigma2 })
    }

    pub fn variance(&self, model: &LogisticModel, x: &[f64]) -> Result<PredictionVariance> {
        Ok(sigmoid_gaussian_variance(self.score_posterior(model, x)?))
    }
}

fn augmented(x: &[f64]) -> Vec<f64> {
    std::iter::once(1.0)
        .chain(x.iter().map(|v| if v.is_nan() { 0.0 } else { *v }))
        .collect()
}

impl LogisticModel {
    pub fn n_features(&self) -> usize {
        self.theta.len()
    }

    pub fn predict_probability(&self, x: &[f64]) -> Result<f64> {
        check_dim(x, self.theta.len())?;
        Ok(sigmoid(linear_score(&self.theta, self.intercept, x)))
    }

    fn full_matrix(&self) -> Option<DMatrix<f64>> {
        let k = self.theta.len() + 1;
        self.hessian_full
            .as_ref()
            .map(|h| DMatrix::from_row_slice(k, k, h))
    }

    /// Factorizes the stored Hessian once for the requested mode.
    pub fn laplace(&self, mode: VarianceMode) -> Result<LaplacePosterior> {
        match mode {
            VarianceMode::Diagonal => {
                let diag = self
                    .hessian_diag
                    .as_ref()
                    .ok_or_else(|| Error::Unsupported("model has no Hessian diagonal".into()))?;
                if diag.iter().any(|h| !(*h > 0.0)) {
                    return Err(Error::Domain(
                        "Hessian diagonal has a zero entry; refit with l2_penalty > 0".into(),
                    ));
                }
                Ok(LaplacePosterior {
                    mode,
                    inv_diag: diag.iter().map(|h| 1.0 / h).collect(),
                    chol: None,
                })
            }
            VarianceMode::Full => {
                let h = self.full_matrix().ok_or_else(|| {
                    Error::Unsupported(format!(
                        "full Hessian is only stored for at most {FULL_HESSIAN_MAX_DIM} features"
                    ))
                })?;
                let chol = Cholesky::new(h).ok_or_else(|| {
                    Error::Domain("Hessian is singular; refit with l2_penalty > 0".into())
                })?;
                Ok(LaplacePosterior {
                    mode,
                    inv_diag: Vec::new(),
                    chol: Some(chol),
                })
            }
        }
    }

    /// `xᵀ H⁻¹ x` through an explicit inverse. Slower than [`Self::laplace`];
    /// kept as a cross-check.
    pub fn score_variance_explicit_inverse(&self, x: &[f64]) -> Result<f64> {
        check_dim(x, self.theta.len())?;
        let h = self
            .full_matrix()
            .ok_or_else(|| Error::Unsupported("no full Hessian stored".into()))?;
        let inv = h
            .try_inverse()
            .ok_or_else(|| Error::Domain("Hessian is singular; refit with l2_penalty > 0".into()))?;
        let v = DVector::from_vec(augmented(x));
        Ok((inv * &v).dot(&v))
    }
}

/// Laplace-approximate variance of the predicted probability at `x`.
pub fn logistic_prediction_variance(
    model: &LogisticModel,
    x: &[f64],
    mode: VarianceMode,
) -> Result<PredictionVariance> {
    model.laplace(mode)?.variance(model, x)
}

impl RiskModel for LogisticModel {
    fn n_features(&self) -> usize {
        self.theta.len()
    }

    /// The logistic model predicts one horizon; `horizon` is ignored.
    fn risk_score(&self, x: &[f64], _horizon: u32) -> Result<f64> {
        self.predict_probability(x)
    }

    fn event_variance(&self, x: &[f64]) -> Result<f64> {
        let mode = if self.hessian_full.is_some() {
            VarianceMode::Full
        } else {
            VarianceMode::Diagonal
        };
        Ok(logistic_prediction_variance(self, x, mode)?.value)
    }
}

/// Shifted-geometric survival with a point-estimate rate `θ(x) = sigmoid(w·x + c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub feature_names: Vec<String>,
}

impl GeometricModel {
    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    /// Per-step event probability `θ(x)`.
    pub fn predict_theta(&self, x: &[f64]) -> Result<f64> {
        check_dim(x, self.weights.len())?;
        Ok(sigmoid(linear_score(&self.weights, self.intercept, x)))
    }

    /// `[P(T > 1), ..., P(T > horizon)]` with `P(T > t) = (1 − θ)^t`.
    pub fn predict_survival_curve(&self, x: &[f64], horizon: u32) -> Result<Vec<f64>> {
        let theta = self.predict_theta(x)?;
        Ok((1..=horizon).map(|t| (1.0 - theta).powi(t as i32)).collect())
    }

    /// Unpenalized negative log-likelihood on `observations`.
    pub fn neg_log_likelihood(&self, observations: &[Observation]) -> Result<f64> {
        let terms = observations
            .iter()
            .map(|o| {
                let z = linear_score(&self.weights, self.intercept, &o.features);
                check_dim(&o.features, self.weights.len())?;
                let (events, fails) = geometric_counts(o);
                Ok(o.weight * (events * softplus(-z) + fails * softplus(z)))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(pairwise_sum(&terms))
    }
}

/// An event at `t` contributes one success and `t − 1` failures; a row
/// censored at `t` contributes `t` failures.
fn geometric_counts(o: &Observation) -> (f64, f64) {
    if o.censored {
        (0.0, o.t as f64)
    } else {
        (1.0, o.t as f64 - 1.0)
    }
}

impl RiskModel for GeometricModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn risk_score(&self, x: &[f64], horizon: u32) -> Result<f64> {
        Ok(1.0 - (1.0 - self.predict_theta(x)?).powi(horizon as i32))
    }
}

/// Maximum-likelihood point-estimate geometric model.
pub fn fit_geometric_pointestimate(
    observations: &[Observation],
    config: &GlmConfig,
) -> Result<(GeometricModel, GlmReport)> {
    let d = check_rows(observations)?;
    if observations.is_empty() {
        return Err(Error::Training("empty dataset".into()));
    }
    if observations.iter().all(|o| o.censored) {
        return Err(Error::Training(
            "every row is censored; the likelihood is maximized at θ = 0".into(),
        ));
    }
    let rows = merge_rows(observations.iter().map(|o| {
        let (s, f) = geometric_counts(o);
        (o.features.clone(), o.weight * s, o.weight * f)
    }));
    let fit = fit_glm(&rows, d, config);
    let model = GeometricModel {
        weights: fit.coef[1..].to_vec(),
        intercept: fit.coef[0],
        feature_names: default_names(d),
    };
    let report = GlmReport {
        loss: fit.loss,
        iterations: fit.iterations,
        converged: fit.converged,
        n_used: observations.len(),
    };
    Ok((model, report))
}

/// Rank-based AUC helper used by the tests here; see `evalkit` for the
/// horizon-aware version.
#[cfg(test)]
fn auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut pairs = 0.0;
    let mut wins = 0.0;
    for (s1, l1) in scores.iter().zip(labels) {
        for (s0, l0) in scores.iter().zip(labels) {
            if *l1 && !*l0 {
                pairs += 1.0;
                wins += if s1 > s0 { 1.0 } else if s1 == s0 { 0.5 } else { 0.0 };
            }
        }
    }
    wins / pairs
}

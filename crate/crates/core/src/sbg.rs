//! Shifted-beta-geometric probabilities, the censored negative
//! log-likelihood, and its derivatives with respect to the log-parameters
//! `a = ln α` and `b = ln β`.
//!
//! All recurrences run in log space and cost `O(t)` per row.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta_math::BetaParams;
use crate::error::{domain, Error, Result};
use crate::numeric::pairwise_sum;

/// Default upper bound on `t` accepted by dataset-level routines.
pub const DEFAULT_MAX_HORIZON: u32 = 10_000;

/// One unit: discrete time `t` of the event (or of censoring), the censoring
/// flag, covariates and an importance weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: u32,
    /// `true` when the event had not happened by `t`, i.e. only `T > t` is known.
    pub censored: bool,
    pub features: Vec<f64>,
    pub weight: f64,
}

impl Observation {
    pub fn event(t: u32, features: Vec<f64>) -> Self {
        Self {
            t,
            censored: false,
            features,
            weight: 1.0,
        }
    }

    pub fn censored(t: u32, features: Vec<f64>) -> Self {
        Self {
            t,
            censored: true,
            features,
            weight: 1.0,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub(crate) fn validate(&self, max_horizon: u32) -> Result<()> {
        if self.t == 0 {
            return domain("t must be >= 1 (shift zero-based times by one time unit)");
        }
        if self.t > max_horizon {
            return domain(format!("t = {} exceeds the maximum horizon {max_horizon}", self.t));
        }
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return domain(format!("weight must be positive, got {}", self.weight));
        }
        Ok(())
    }
}

/// `ln P(T = t | α, β)`.
pub fn log_pmf(params: BetaParams, t: u32) -> Result<f64> {
    if t == 0 {
        return domain("sbg pmf is defined for t >= 1");
    }
    let BetaParams { alpha, beta } = params;
    let s = alpha + beta;
    let mut acc = alpha.ln() - s.ln();
    for u in 2..=t {
        let u = f64::from(u);
        acc += (beta + u - 2.0).ln() - (s + u - 1.0).ln();
    }
    Ok(acc)
}

/// `P(T = t | α, β)`.
pub fn pmf(params: BetaParams, t: u32) -> Result<f64> {
    log_pmf(params, t).map(f64::exp)
}

/// `ln P(T > t | α, β)`; zero at `t = 0`.
pub fn log_survival(params: BetaParams, t: u32) -> f64 {
    let BetaParams { alpha, beta } = params;
    let s = alpha + beta;
    let mut acc = 0.0;
    for u in 1..=t {
        let u = f64::from(u);
        acc += (beta + u - 1.0).ln() - (s + u - 1.0).ln();
    }
    acc
}

/// `P(T > t | α, β)`.
pub fn survival(params: BetaParams, t: u32) -> f64 {
    log_survival(params, t).exp()
}

/// `[P(T > 1), ..., P(T > horizon)]` in one pass.
pub fn survival_curve(params: BetaParams, horizon: u32) -> Vec<f64> {
    let BetaParams { alpha, beta } = params;
    let s = alpha + beta;
    let mut acc = 0.0;
    (1..=horizon)
        .map(|u| {
            let u = f64::from(u);
            acc += (beta + u - 1.0).ln() - (s + u - 1.0).ln();
            acc.exp()
        })
        .collect()
}

/// Log-probability of one row's outcome: the pmf for events, survival for
/// censored rows.
pub fn log_likelihood_row(params: BetaParams, t: u32, censored: bool) -> Result<f64> {
    if censored {
        Ok(log_survival(params, t))
    } else {
        log_pmf(params, t)
    }
}

/// `ℓ = −Σ wᵢ log P(outcomeᵢ | αᵢ, βᵢ)`.
pub fn neg_log_likelihood(observations: &[Observation], params_per_row: &[BetaParams]) -> Result<f64> {
    if observations.len() != params_per_row.len() {
        return Err(Error::Input(format!(
            "{} observations but {} parameter rows",
            observations.len(),
            params_per_row.len()
        )));
    }
    let terms = observations
        .par_iter()
        .zip(params_per_row.par_iter())
        .map(|(obs, p)| log_likelihood_row(*p, obs.t, obs.censored).map(|l| -obs.weight * l))
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&terms))
}

/// First and second derivatives of `log P` for one row, taken with respect to
/// the log-parameters `a = ln α`, `b = ln β` (identity predictor).
///
/// Sign convention: derivatives of the log-probability. Loss gradients are
/// the negation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SbgDerivatives {
    pub dlog_da: f64,
    pub dlog_db: f64,
    pub d2log_da2: f64,
    pub d2log_db2: f64,
    /// Mixed partial `∂² log P / ∂a ∂b`; used by the two-parameter cohort fit.
    pub d2log_dadb: f64,
}

/// Log-probability together with its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowTerms {
    pub log_prob: f64,
    pub derivs: SbgDerivatives,
}

/// Derivative recurrences for one row.
pub fn derivatives(params: BetaParams, t: u32, censored: bool) -> Result<SbgDerivatives> {
    row_terms(params, t, censored).map(|r| r.derivs)
}

/// Log-probability and derivative recurrences accumulated in a single `O(t)` pass.
pub fn row_terms(params: BetaParams, t: u32, censored: bool) -> Result<RowTerms> {
    if t == 0 {
        return domain("sbg derivatives are defined for t >= 1");
    }
    let BetaParams { alpha, beta } = params;
    let s = alpha + beta;
    let ab = alpha * beta;
    let base_curv = -ab / (s * s);

    let (mut lp, mut ga, mut gb) = if censored {
        (beta.ln() - s.ln(), -alpha / s, alpha / s)
    } else {
        (alpha.ln() - s.ln(), beta / s, -beta / s)
    };
    let mut haa = base_curv;
    let mut hbb = base_curv;
    let mut hab = ab / (s * s);

    // Event rows shift β by one step relative to censored rows.
    let offset = if censored { 1.0 } else { 2.0 };
    for u in 2..=t {
        let u = f64::from(u);
        let num = beta + u - offset; // β + u − 2 for events, β + u − 1 for survival
        let den = s + u - 1.0;
        lp += num.ln() - den.ln();
        ga -= alpha / den;
        gb += beta / num - beta / den;
        haa -= alpha * (beta + u - 1.0) / (den * den);
        hbb += beta * ((u - offset) / (num * num) - (alpha + u - 1.0) / (den * den));
        hab += ab / (den * den);
    }
    Ok(RowTerms {
        log_prob: lp,
        derivs: SbgDerivatives {
            dlog_da: ga,
            dlog_db: gb,
            d2log_da2: haa,
            d2log_db2: hbb,
            d2log_dadb: hab,
        },
    })
}

/// Per-row curvature of the loss `ℓ` in `a` and `b`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvexityReport {
    /// `∂²ℓᵢ/∂a²` per row (weighted). Always nonnegative.
    pub curvature_a: Vec<f64>,
    /// `∂²ℓᵢ/∂b²` per row (weighted). Either sign.
    pub curvature_b: Vec<f64>,
}

impl ConvexityReport {
    pub fn total_a(&self) -> f64 {
        pairwise_sum(&self.curvature_a)
    }

    pub fn total_b(&self) -> f64 {
        pairwise_sum(&self.curvature_b)
    }

    pub fn min_a(&self) -> Option<f64> {
        self.curvature_a.iter().copied().reduce(f64::min)
    }

    /// Diagonal Hessian entries `∂²ℓ/∂γ_{a,j}²` and `∂²ℓ/∂γ_{b,j}²` under
    /// linear predictors, where each row contributes `x_{ij}²` times its curvature.
    pub fn linear_coordinate_curvature(&self, observations: &[Observation]) -> (Vec<f64>, Vec<f64>) {
        let d = observations.first().map_or(0, |o| o.features.len());
        let mut ha = vec![0.0; d];
        let mut hb = vec![0.0; d];
        for ((obs, ca), cb) in observations.iter().zip(&self.curvature_a).zip(&self.curvature_b) {
            for (j, &x) in obs.features.iter().enumerate() {
                let x2 = if x.is_nan() { 0.0 } else { x * x };
                ha[j] += x2 * ca;
                hb[j] += x2 * cb;
            }
        }
        (ha, hb)
    }
}

/// Loss curvature of every row at the given parameters.
pub fn convexity_diagnostic(
    observations: &[Observation],
    params_per_row: &[BetaParams],
) -> Result<ConvexityReport> {
    if observations.len() != params_per_row.len() {
        return Err(Error::Input("observation/parameter length mismatch".into()));
    }
    let rows = observations
        .par_iter()
        .zip(params_per_row.par_iter())
        .map(|(obs, p)| {
            derivatives(*p, obs.t, obs.censored)
                .map(|d| (-obs.weight * d.d2log_da2, -obs.weight * d.d2log_db2))
        })
        .collect::<Result<Vec<_>>>()?;
    let (curvature_a, curvature_b) = rows.into_iter().unzip();
    Ok(ConvexityReport {
        curvature_a,
        curvature_b,
    })
}

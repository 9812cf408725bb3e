//! # beta-survival
//!
//! Discrete-time survival regression with the beta-logistic model, also known
//! as the shifted-beta-geometric (sBG) model.
//!
//! Each unit churns at step `t` with a per-step probability `θ`, and `θ` itself
//! is drawn from a `Beta(α(x), β(x))` prior whose log-parameters `a = ln α` and
//! `b = ln β` are predicted from covariates `x`. Integrating `θ` out gives
//! closed-form recurrences for `P(T = t)` and `P(T > t)`, which makes the
//! censored type-II likelihood cheap to evaluate and differentiate.
//!
//! What is in the crate:
//!
//! - [`beta_math`]: log-beta, regularized incomplete beta, medians, sampling.
//! - [`sbg`]: probability recurrences, censored likelihood, gradient and
//!   Hessian-diagonal recurrences, convexity diagnostics.
//! - [`linear`]: linear predictors trained by L-BFGS or diagonally scaled gradient descent.
//! - [`gbrt`]: vector-output gradient boosted trees over `(a, b)`.
//! - [`ranking`]: transitive median ranking and the power-beta horizon projection.
//! - [`baselines`]: horizon logistic regression with Laplace posteriors, and a
//!   point-estimate geometric survival model.
//! - [`simgen`]: synthetic cohort generators.
//! - [`evalkit`]: horizon AUC, Kaplan-Meier, cohort fits, posterior-size experiment.
//! - [`data`] and [`model_io`]: CSV datasets and versioned JSON model files.
//! - [`cli`]: the `beta-survival` command line.
//!
//! ```
//! use beta_survival::beta_math::BetaParams;
//! use beta_survival::sbg;
//!
//! let uniform = BetaParams::new(1.0, 1.0).unwrap();
//! assert!((sbg::pmf(uniform, 2).unwrap() - 1.0 / 6.0).abs() < 1e-12);
//! assert!((sbg::survival(uniform, 2) - 1.0 / 3.0).abs() < 1e-12);
//! ```

pub mod baselines;
pub mod beta_math;
pub mod cli;
pub mod data;
pub mod error;
pub mod evalkit;
pub mod gbrt;
pub mod linear;
pub mod model_io;
pub mod numeric;
pub mod ranking;
pub mod sbg;
pub mod simgen;

pub use beta_math::BetaParams;
pub use data::Dataset;
pub use error::{Error, Result};
pub use sbg::Observation;

/// Scoring interface shared by every fitted model.
///
/// `risk_score` is the model's estimate of `P(T <= horizon | x)`; higher means
/// the event is expected sooner.
pub trait RiskModel {
    fn n_features(&self) -> usize;

    fn risk_score(&self, x: &[f64], horizon: u32) -> Result<f64>;

    /// Predictive variance of the per-step event probability at `x`.
    fn event_variance(&self, _x: &[f64]) -> Result<f64> {
        Err(Error::Unsupported(
            "this model does not define a predictive variance".into(),
        ))
    }
}

//! Evaluation: horizon AUC, Kaplan–Meier survival, unconditional cohort fits
//! and the posterior-size experiment.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{Matrix2, Vector2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::baselines::{self, horizon_label, GlmConfig, VarianceMode, FULL_HESSIAN_MAX_DIM};
use crate::beta_math::BetaParams;
use crate::data::format_float;
use crate::error::{Error, Result};
use crate::linear::{self, FitConfig, DEFAULT_CLAMP};
use crate::numeric::pairwise_sum;
use crate::sbg::{self, Observation, DEFAULT_MAX_HORIZON};
use crate::RiskModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HorizonEval {
    pub horizon: u32,
    pub auc: f64,
    /// Rows whose label at `horizon` is determinable.
    pub n_effective: usize,
    pub positives: usize,
    pub negatives: usize,
}

/// Weighted ROC AUC with tied scores counted as one half.
/// Fails with [`Error::UndefinedAuc`] when only one class is present.
pub fn auc(scores: &[f64], labels: &[bool], weights: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() || scores.len() != weights.len() {
        return Err(Error::Input("scores, labels and weights differ in length".into()));
    }
    let positives = labels.iter().filter(|l| **l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedAuc { positives, negatives });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Input("NaN score".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));

    let (mut wins, mut neg_below, mut w_pos, mut w_neg) = (0.0, 0.0, 0.0, 0.0);
    let mut k = 0;
    while k < order.len() {
        let mut end = k;
        let (mut pos_group, mut neg_group) = (0.0, 0.0);
        while end < order.len() && scores[order[end]] == scores[order[k]] {
            let i = order[end];
            if labels[i] {
                pos_group += weights[i];
            } else {
                neg_group += weights[i];
            }
            end += 1;
        }
        wins += pos_group * (neg_below + 0.5 * neg_group);
        neg_below += neg_group;
        w_pos += pos_group;
        w_neg += neg_group;
        k = end;
    }
    Ok(wins / (w_pos * w_neg))
}

/// AUC of `scores` (higher = event sooner) for the label "event by `h`".
/// Rows censored before `h` are excluded.
pub fn auc_at_horizon(scores: &[f64], observations: &[Observation], h: u32) -> Result<HorizonEval> {
    if scores.len() != observations.len() {
        return Err(Error::Input(format!(
            "{} scores for {} observations",
            scores.len(),
            observations.len()
        )));
    }
    let (mut s, mut l, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for (score, obs) in scores.iter().zip(observations) {
        if let Some(y) = horizon_label(obs, h) {
            s.push(*score);
            l.push(y);
            w.push(obs.weight);
        }
    }
    let positives = l.iter().filter(|y| **y).count();
    let auc = auc(&s, &l, &w)?;
    Ok(HorizonEval {
        horizon: h,
        auc,
        n_effective: s.len(),
        positives,
        negatives: s.len() - positives,
    })
}

/// Scores every observation with `model` and evaluates AUC at each horizon.
pub fn evaluate_model<M: RiskModel + Sync>(
    model: &M,
    observations: &[Observation],
    horizons: &[u32],
) -> Result<Vec<HorizonEval>> {
    horizons
        .iter()
        .map(|&h| {
            let scores = observations
                .iter()
                .map(|o| model.risk_score(&o.features, h))
                .collect::<Result<Vec<f64>>>()?;
            auc_at_horizon(&scores, observations, h)
        })
        .collect()
}

/// Writes `(horizon, model, auc, n_effective)` rows.
pub fn write_auc_report<W: Write>(writer: W, rows: &[(String, HorizonEval)]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(["horizon", "model", "auc", "n_effective"])?;
    for (model, eval) in rows {
        w.write_record([
            eval.horizon.to_string(),
            model.clone(),
            format_float(eval.auc),
            eval.n_effective.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Kaplan–Meier estimate `[(t, Ŝ(t))]` for `t = 1..=max t`, using weights.
/// A row censored at `t` is at risk at `t` and leaves afterwards.
pub fn empirical_survival(observations: &[Observation]) -> Result<Vec<(u32, f64)>> {
    if observations.is_empty() {
        return Err(Error::Input("empirical survival of an empty dataset".into()));
    }
    let max_t = observations.iter().map(|o| o.t).max().unwrap_or(0);
    if observations.iter().any(|o| o.t == 0) {
        return Err(Error::Domain("t must be >= 1".into()));
    }
    let mut events = vec![0.0; max_t as usize + 2];
    let mut leaving = vec![0.0; max_t as usize + 2];
    for o in observations {
        if !o.censored {
            events[o.t as usize] += o.weight;
        }
        leaving[o.t as usize] += o.weight;
    }
    let mut at_risk: f64 = pairwise_sum(&leaving);
    let mut s = 1.0;
    let mut curve = Vec::with_capacity(max_t as usize);
    for t in 1..=max_t as usize {
        if at_risk > 0.0 {
            s *= 1.0 - events[t] / at_risk;
        }
        curve.push((t as u32, s.max(0.0)));
        at_risk -= leaving[t];
    }
    Ok(curve)
}

/// Unconditional maximum-likelihood fit of `(α, β)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortFit {
    pub params: BetaParams,
    pub log_alpha: f64,
    pub log_beta: f64,
    pub neg_log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `false` when the optimizer did not converge, stopped on the
    /// log-parameter clamp, or the information matrix is numerically singular.
    pub identifiable: bool,
}

struct Histogram {
    cells: Vec<(u32, bool, f64)>,
    total_weight: f64,
}

impl Histogram {
    fn new(observations: &[Observation]) -> Result<Self> {
        let mut map: BTreeMap<(u32, bool), f64> = BTreeMap::new();
        for o in observations {
            o.validate(DEFAULT_MAX_HORIZON)?;
            *map.entry((o.t, o.censored)).or_default() += o.weight;
        }
        let cells: Vec<(u32, bool, f64)> = map.into_iter().map(|((t, c), w)| (t, c, w)).collect();
        let total_weight = cells.iter().map(|c| c.2).sum();
        Ok(Self { cells, total_weight })
    }

    fn loss(&self, a: f64, b: f64) -> f64 {
        let p = BetaParams::from_log(a, b, DEFAULT_CLAMP);
        let terms: Vec<f64> = self
            .cells
            .iter()
            .map(|&(t, c, w)| -w * sbg::log_likelihood_row(p, t, c).expect("validated"))
            .collect();
        pairwise_sum(&terms)
    }

    fn derivatives(&self, a: f64, b: f64) -> (f64, Vector2<f64>, Matrix2<f64>) {
        let p = BetaParams::from_log(a, b, DEFAULT_CLAMP);
        let mut loss = Vec::with_capacity(self.cells.len());
        let mut g = Vector2::zeros();
        let mut h = Matrix2::zeros();
        for &(t, c, w) in &self.cells {
            let r = sbg::row_terms(p, t, c).expect("validated");
            loss.push(-w * r.log_prob);
            let d = r.derivs;
            g += -w * Vector2::new(d.dlog_da, d.dlog_db);
            h += -w * Matrix2::new(d.d2log_da2, d.d2log_dadb, d.d2log_dadb, d.d2log_db2);
        }
        (pairwise_sum(&loss), g, h)
    }
}

/// Smallest observed-information eigenvalue per unit weight for an
/// identifiable cohort fit.
const MIN_INFORMATION: f64 = 1e-8;

/// Fits `(α, β)` to a cohort by damped Newton iterations on `(ln α, ln β)`.
/// Features are ignored.
pub fn fit_sbg_cohort(observations: &[Observation]) -> Result<CohortFit> {
    if observations.is_empty() {
        return Err(Error::Training("empty cohort".into()));
    }
    if observations.iter().all(|o| o.censored) {
        return Err(Error::Training(
            "every row is censored; the likelihood is unbounded as β grows".into(),
        ));
    }
    let hist = Histogram::new(observations)?;
    let tol = 1e-9 * hist.total_weight;
    let clamp = |v: f64| v.clamp(-DEFAULT_CLAMP, DEFAULT_CLAMP);
    let (mut a, mut b) = (0.0, 0.0);
    let (mut loss, mut g, mut h) = hist.derivatives(a, b);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < 500 {
        if g.norm() <= tol {
            converged = true;
            break;
        }
        let step = match h.cholesky() {
            Some(chol) => -chol.solve(&g),
            None => Vector2::new(-g[0] / (h[(0, 0)].abs() + 1e-3), -g[1] / (h[(1, 1)].abs() + 1e-3)),
        };
        let slope = g.dot(&step);
        let mut s = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let (ta, tb) = (clamp(a + s * step[0]), clamp(b + s * step[1]));
            let tl = hist.loss(ta, tb);
            if tl <= loss + 1e-4 * s * slope.min(0.0) && (ta, tb) != (a, b) {
                a = ta;
                b = tb;
                moved = true;
                break;
            }
            s *= 0.5;
        }
        iterations += 1;
        (loss, g, h) = hist.derivatives(a, b);
        if !moved {
            break;
        }
    }
    let on_boundary = a.abs() >= DEFAULT_CLAMP - 1e-9 || b.abs() >= DEFAULT_CLAMP - 1e-9;
    // A flat direction in the observed information means the optimum lies at
    // infinity along it, even when the gradient has already vanished.
    let flat = h.symmetric_eigenvalues().min() <= MIN_INFORMATION * hist.total_weight;
    Ok(CohortFit {
        params: BetaParams::from_log(a, b, DEFAULT_CLAMP),
        log_alpha: a,
        log_beta: b,
        neg_log_likelihood: loss,
        iterations,
        converged,
        identifiable: converged && !on_boundary && !flat,
    })
}

/// Settings for [`posterior_size_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorConfig {
    pub horizons: Vec<u32>,
    pub d_projected: usize,
    pub seed: u64,
    /// Fraction of rows used for training; the rest are held out.
    pub train_fraction: f64,
    pub linear: FitConfig,
    pub logistic: GlmConfig,
}

impl Default for PosteriorConfig {
    fn default() -> Self {
        Self {
            horizons: vec![1, 2, 3, 4, 5],
            d_projected: 50,
            seed: 0,
            train_fraction: 0.5,
            linear: FitConfig::default(),
            logistic: GlmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorRow {
    pub horizon: u32,
    /// Mean beta variance `αβ/((α+β)²(α+β+1))` of the one-step beta-logistic on held-out rows.
    pub beta_logistic_var: f64,
    pub laplace_diag_var: f64,
    pub laplace_full_var: f64,
    pub beta_logistic_auc: f64,
    pub logistic_auc: f64,
    pub n_train: usize,
    pub n_holdout: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorReport {
    pub rows: Vec<PosteriorRow>,
}

impl PosteriorReport {
    /// Whether the beta-logistic mean variance is below the full-Laplace mean
    /// at every horizon.
    pub fn expectation_met(&self) -> bool {
        self.rows.iter().all(|r| r.beta_logistic_var < r.laplace_full_var)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record([
            "horizon",
            "beta_logistic_var",
            "laplace_diag_var",
            "laplace_full_var",
            "beta_logistic_auc",
            "logistic_auc",
            "n_train",
            "n_holdout",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.horizon.to_string(),
                format_float(r.beta_logistic_var),
                format_float(r.laplace_diag_var),
                format_float(r.laplace_full_var),
                format_float(r.beta_logistic_auc),
                format_float(r.logistic_auc),
                r.n_train.to_string(),
                r.n_holdout.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Projects features through a seeded Gaussian matrix with `N(0, 1/k)` entries.
pub fn random_projection(observations: &[Observation], k: usize, seed: u64) -> Vec<Observation> {
    let d = observations.first().map_or(0, |o| o.features.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (k as f64).sqrt();
    let r: Vec<f64> = (0..d * k)
        .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect::<Vec<f64>>();
    observations
        .iter()
        .map(|o| {
            let mut z = vec![0.0; k];
            for (j, x) in o.features.iter().enumerate() {
                if x.is_nan() {
                    continue;
                }
                for (zc, rc) in z.iter_mut().zip(&r[j * k..(j + 1) * k]) {
                    *zc += x * rc;
                }
            }
            Observation {
                features: z,
                ..o.clone()
            }
        })
        .collect()
}

/// Relabels rows as one-step outcomes for horizon `h`: an event by `h`
/// becomes an event at `t = 1`, a known survivor becomes censored at `t = 1`.
pub fn one_step_dataset(observations: &[Observation], h: u32) -> Vec<Observation> {
    observations
        .iter()
        .filter_map(|o| {
            let y = horizon_label(o, h)?;
            Some(Observation {
                t: 1,
                censored: !y,
                ..o.clone()
            })
        })
        .collect()
}

/// Compares predictive variances of a one-step beta-logistic with a
/// Laplace-approximated logistic regression at several horizons.
pub fn posterior_size_experiment(
    observations: &[Observation],
    config: &PosteriorConfig,
) -> Result<PosteriorReport> {
    if config.d_projected == 0 || config.d_projected > FULL_HESSIAN_MAX_DIM {
        return Err(Error::Input(format!(
            "d_projected must be in 1..={FULL_HESSIAN_MAX_DIM}"
        )));
    }
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(Error::Input("train_fraction must be in (0, 1)".into()));
    }
    let projected = random_projection(observations, config.d_projected, config.seed);
    let mut order: Vec<usize> = (0..projected.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1)));
    let n_train = (projected.len() as f64 * config.train_fraction).round() as usize;
    let train: Vec<Observation> = order[..n_train].iter().map(|&i| projected[i].clone()).collect();
    let holdout: Vec<Observation> = order[n_train..].iter().map(|&i| projected[i].clone()).collect();

    let mut rows = Vec::new();
    for &h in &config.horizons {
        let train_h = one_step_dataset(&train, h);
        let hold_h = one_step_dataset(&holdout, h);
        let (beta_model, _) = linear::fit_linear(&train_h, &config.linear)?;
        let (logit, _) = baselines::fit_logistic_at_horizon(&train_h, 1, &config.logistic)?;
        let diag = logit.laplace(VarianceMode::Diagonal)?;
        let full = logit.laplace(VarianceMode::Full)?;

        let mut bv = Vec::with_capacity(hold_h.len());
        let mut dv = Vec::with_capacity(hold_h.len());
        let mut fv = Vec::with_capacity(hold_h.len());
        for o in &hold_h {
            bv.push(beta_model.predict_event_variance(&o.features)?);
            dv.push(diag.variance(&logit, &o.features)?.value);
            fv.push(full.variance(&logit, &o.features)?.value);
        }
        let mean = |v: &[f64]| pairwise_sum(v) / v.len().max(1) as f64;
        let beta_scores = hold_h
            .iter()
            .map(|o| beta_model.risk_score(&o.features, 1))
            .collect::<Result<Vec<_>>>()?;
        let logit_scores = hold_h
            .iter()
            .map(|o| logit.risk_score(&o.features, 1))
            .collect::<Result<Vec<_>>>()?;
        rows.push(PosteriorRow {
            horizon: h,
            beta_logistic_var: mean(&bv),
            laplace_diag_var: mean(&dv),
            laplace_full_var: mean(&fv),
            beta_logistic_auc: auc_at_horizon(&beta_scores, &hold_h, 1)?.auc,
            logistic_auc: auc_at_horizon(&logit_scores, &hold_h, 1)?.auc,
            n_train: train_h.len(),
            n_holdout: hold_h.len(),
        });
    }
    Ok(PosteriorReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let (mut wins, mut pairs) = (0.0, 0.0);
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

    #[test]
    fn auc_matches_pair_counting() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let n = 40;
            let scores: Vec<f64> = (0..n).map(|_| (rng.random_range(0..8) as f64) / 2.0).collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
            if labels.iter().all(|l| *l) || labels.iter().all(|l| !*l) {
                continue;
            }
            let got = auc(&scores, &labels, &vec![1.0; n]).unwrap();
            assert!((got - brute_auc(&scores, &labels)).abs() < 1e-12);
        }
    }

    #[test]
    fn auc_edge_cases() {
        assert_eq!(auc(&[0.1, 0.9], &[false, true], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.5, 0.5], &[false, true], &[1.0, 1.0]).unwrap(), 0.5);
        assert!(matches!(
            auc(&[0.5, 0.6], &[true, true], &[1.0, 1.0]),
            Err(Error::UndefinedAuc { positives: 2, negatives: 0 })
        ));
        // Integer weights act as row duplication.
        let w = auc(&[0.1, 0.2, 0.3], &[true, false, true], &[1.0, 2.0, 1.0]).unwrap();
        let dup = brute_auc(&[0.1, 0.2, 0.2, 0.3], &[true, false, false, true]);
        assert!((w - dup).abs() < 1e-15);
    }

    #[test]
    fn auc_null_is_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let scores: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
        let a = auc(&scores, &labels, &vec![1.0; n]).unwrap();
        assert!((a - 0.5).abs() < 0.01);
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let scores: Vec<f64> = (0..500).map(|_| rng.random_range(-3.0..3.0)).collect();
        let labels: Vec<bool> = scores.iter().map(|s| rng.random_bool(crate::numeric::sigmoid(*s))).collect();
        let w = vec![1.0; 500];
        let a = auc(&scores, &labels, &w).unwrap();
        let t: Vec<f64> = scores.iter().map(|s| s.exp() * 3.0 + 1.0).collect();
        assert_eq!(a, auc(&t, &labels, &w).unwrap());
    }

    #[test]
    fn horizon_auc_excludes_early_censoring() {
        let obs = vec![
            Observation::event(1, vec![]),
            Observation::censored(1, vec![]),
            Observation::event(5, vec![]),
            Observation::censored(3, vec![]),
        ];
        let e = auc_at_horizon(&[0.9, 0.1, 0.2, 0.3], &obs, 3).unwrap();
        assert_eq!((e.n_effective, e.positives, e.negatives), (3, 1, 2));
        assert_eq!(e.auc, 1.0);
    }

    #[test]
    fn kaplan_meier_examples() {
        let obs = vec![
            Observation::event(1, vec![]),
            Observation::event(1, vec![]),
            Observation::event(2, vec![]),
        ];
        let km = empirical_survival(&obs).unwrap();
        assert!((km[0].1 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(km[1], (2, 0.0));

        let cens = vec![Observation::censored(5, vec![]); 4];
        assert!(empirical_survival(&cens).unwrap().iter().all(|(_, s)| *s == 1.0));
        assert!(empirical_survival(&[]).is_err());
    }

    #[test]
    fn kaplan_meier_without_censoring_is_one_minus_cdf() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let obs: Vec<Observation> = (0..1000).map(|_| Observation::event(rng.random_range(1..12), vec![])).collect();
        for (t, s) in empirical_survival(&obs).unwrap() {
            let frac = obs.iter().filter(|o| o.t > t).count() as f64 / 1000.0;
            assert!((s - frac).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn cohort_fit_recovers_expected_counts() {
        // Expected-count histogram: the MLE of exact expected frequencies is
        // the generating parameters.
        let params = BetaParams::new(1.3, 2.7).unwrap();
        let mut obs = Vec::new();
        for t in 1..=6 {
            obs.push(Observation::event(t, vec![]).with_weight(1e4 * sbg::pmf(params, t).unwrap()));
        }
        obs.push(Observation::censored(6, vec![]).with_weight(1e4 * sbg::survival(params, 6)));
        let fit = fit_sbg_cohort(&obs).unwrap();
        assert!(fit.identifiable);
        assert!((fit.params.alpha - 1.3).abs() < 1e-6, "{fit:?}");
        assert!((fit.params.beta - 2.7).abs() < 1e-6);
    }

    #[test]
    fn cohort_fit_degenerate_cases() {
        let fit = fit_sbg_cohort(&[Observation::event(1, vec![])]).unwrap();
        assert!(!fit.identifiable);
        assert!(fit_sbg_cohort(&[Observation::censored(2, vec![])]).is_err());
    }

    #[test]
    fn cohort_fit_agrees_with_linear_intercepts() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let obs: Vec<Observation> = (0..3000)
            .map(|_| {
                let theta: f64 = rand_distr::Beta::new(0.8, 2.0).unwrap().sample(&mut rng);
                let mut t = 1;
                while t <= 10 && !rng.random_bool(theta) {
                    t += 1;
                }
                if t > 10 {
                    Observation::censored(10, vec![])
                } else {
                    Observation::event(t, vec![])
                }
            })
            .collect();
        let fit = fit_sbg_cohort(&obs).unwrap();
        let cfg = FitConfig {
            gradient_tolerance: 1e-11,
            ..FitConfig::default()
        };
        let (lin, _) = linear::fit_linear(&obs, &cfg).unwrap();
        assert!((fit.log_alpha - lin.intercept_a).abs() < 1e-4);
        assert!((fit.log_beta - lin.intercept_b).abs() < 1e-4);
    }

    #[test]
    fn projection_is_seeded() {
        let obs = vec![Observation::event(1, vec![1.0, 2.0, 3.0]); 2];
        let a = random_projection(&obs, 2, 9);
        assert_eq!(a, random_projection(&obs, 2, 9));
        assert_ne!(a, random_projection(&obs, 2, 10));
        assert_eq!(a[0].features.len(), 2);
    }

    #[test]
    fn one_step_relabeling() {
        let obs = vec![
            Observation::event(2, vec![]),
            Observation::event(5, vec![]),
            Observation::censored(1, vec![]),
            Observation::censored(3, vec![]),
        ];
        let one = one_step_dataset(&obs, 3);
        assert_eq!(one.len(), 3);
        assert!(one.iter().all(|o| o.t == 1));
        assert_eq!(one.iter().map(|o| o.censored).collect::<Vec<_>>(), vec![false, true, true]);
    }
}

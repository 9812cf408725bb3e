//! Synthetic data: beta-geometric cohorts, the three-shape mixture with equal
//! means, a heterogeneity sweep and a conditional linear generator.
//!
//! Every unit draws from its own ChaCha8 stream (`seed`, stream = unit index),
//! so output is identical however the work is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Exp, StandardNormal};
use rayon::prelude::*;

use crate::beta_math::BetaParams;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linear::LinearBetaLogistic;
use crate::sbg::Observation;

#[derive(Debug, Clone, PartialEq)]
pub struct CohortSpec {
    pub name: String,
    pub params: BetaParams,
    pub n: usize,
}

impl CohortSpec {
    pub fn new(name: &str, alpha: f64, beta: f64, n: usize) -> Result<Self> {
        Ok(Self {
            name: name.to_string(),
            params: BetaParams::new(alpha, beta)?,
            n,
        })
    }
}

/// The three equal-mean (0.25) cohorts: bell-shaped `(4.75, 14.25)`,
/// right-skewed `(0.5, 1.5)` and U-shaped `(1/12, 1/4)`.
pub fn table1_cohorts(n_per_cohort: usize) -> Vec<CohortSpec> {
    [
        ("normal", 4.75, 14.25),
        ("right_skewed", 0.5, 1.5),
        ("u_shaped", 1.0 / 12.0, 0.25),
    ]
    .into_iter()
    .map(|(name, a, b)| CohortSpec::new(name, a, b, n_per_cohort).expect("valid constants"))
    .collect()
}

fn unit_rng(base: &ChaCha8Rng, unit: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(unit);
    rng
}

/// Shifted-geometric time with success probability `theta`, by inversion.
/// Returns `None` when the time exceeds `horizon`.
fn geometric_time<R: Rng>(rng: &mut R, theta: f64, horizon: u32) -> Option<u32> {
    if theta >= 1.0 {
        return Some(1);
    }
    if theta <= 0.0 {
        return None;
    }
    let u: f64 = 1.0 - rng.random::<f64>();
    let t = (u.ln() / (-theta).ln_1p()).ceil().max(1.0);
    (t <= horizon as f64).then_some(t as u32)
}

/// One unit: `θ ~ Beta(α, β)`, then `T ~ shifted geometric(θ)`, censored at `horizon`.
fn draw_unit<R: Rng>(rng: &mut R, params: BetaParams, horizon: u32, features: Vec<f64>) -> Observation {
    let theta = Beta::new(params.alpha, params.beta)
        .expect("valid beta parameters")
        .sample(rng);
    match geometric_time(rng, theta, horizon) {
        Some(t) => Observation::event(t, features),
        None => Observation::censored(horizon, features),
    }
}

fn check_horizon(horizon: u32) -> Result<()> {
    if horizon == 0 {
        return Err(Error::Input("censor horizon must be at least 1".into()));
    }
    Ok(())
}

/// `n` featureless draws from one beta-geometric cohort.
pub fn gen_beta_geometric(params: BetaParams, n: usize, censor_horizon: u32, seed: u64) -> Result<Vec<Observation>> {
    check_horizon(censor_horizon)?;
    let base = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| draw_unit(&mut unit_rng(&base, i), params, censor_horizon, Vec::new()))
        .collect())
}

/// Draws every cohort in turn; features are one-hot `group_<name>` columns.
pub fn gen_cohorts(cohorts: &[CohortSpec], censor_horizon: u32, seed: u64) -> Result<Dataset> {
    check_horizon(censor_horizon)?;
    let base = ChaCha8Rng::seed_from_u64(seed);
    let k = cohorts.len();
    let mut observations = Vec::with_capacity(cohorts.iter().map(|c| c.n).sum());
    let mut offset = 0u64;
    for (g, cohort) in cohorts.iter().enumerate() {
        let block: Vec<Observation> = (0..cohort.n as u64)
            .into_par_iter()
            .map(|i| {
                let mut x = vec![0.0; k];
                x[g] = 1.0;
                draw_unit(&mut unit_rng(&base, offset + i), cohort.params, censor_horizon, x)
            })
            .collect();
        observations.extend(block);
        offset += cohort.n as u64;
    }
    let names = cohorts.iter().map(|c| format!("group_{}", c.name)).collect();
    Ok(Dataset::new(names, observations))
}

/// The three-shape mixture with one-hot group columns `group_normal`,
/// `group_right_skewed` and `group_u_shaped`.
pub fn gen_table1_mixture(n_per_cohort: usize, censor_horizon: u32, seed: u64) -> Result<Dataset> {
    gen_cohorts(&table1_cohorts(n_per_cohort), censor_horizon, seed)
}

/// Heterogeneity sweep. Each unit picks one of the three mixture cohorts
/// uniformly and draws `u ~ U(0, 1)`; then
/// `α = α₀(1 + level·u) + Exp(noise)`, `β = 3α₀(1 + level·u) + Exp(noise)`,
/// where `Exp(noise)` has mean `noise_scale` (zero disables it). Larger `level`
/// raises `α + β` and so makes units more homogeneous while the noise-free
/// mean stays 0.25. Features: `u` then the three group indicators.
pub fn gen_heterogeneity_sweep(
    n: usize,
    homogeneity_level: f64,
    noise_scale: f64,
    censor_horizon: u32,
    seed: u64,
) -> Result<Dataset> {
    check_horizon(censor_horizon)?;
    if !(homogeneity_level >= 0.0 && homogeneity_level.is_finite()) {
        return Err(Error::Input("homogeneity_level must be a nonnegative number".into()));
    }
    if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
        return Err(Error::Input("noise_scale must be a nonnegative number".into()));
    }
    let cohorts = table1_cohorts(0);
    let noise = (noise_scale > 0.0).then(|| Exp::new(1.0 / noise_scale).expect("positive rate"));
    let base = ChaCha8Rng::seed_from_u64(seed);
    let observations: Vec<Observation> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = unit_rng(&base, i);
            let g = rng.random_range(0..cohorts.len());
            let u: f64 = rng.random();
            let alpha0 = cohorts[g].params.alpha * (1.0 + homogeneity_level * u);
            let mut alpha = alpha0;
            let mut beta = 3.0 * alpha0;
            if let Some(e) = &noise {
                alpha += e.sample(&mut rng);
                beta += e.sample(&mut rng);
            }
            let mut x = vec![u, 0.0, 0.0, 0.0];
            x[1 + g] = 1.0;
            let params = BetaParams::new(alpha, beta).expect("positive parameters");
            draw_unit(&mut rng, params, censor_horizon, x)
        })
        .collect();
    let mut names = vec!["u".to_string()];
    names.extend(cohorts.iter().map(|c| format!("group_{}", c.name)));
    Ok(Dataset::new(names, observations))
}

/// Draws from a linear beta-logistic model with standard normal features.
pub struct ConditionalSample {
    pub dataset: Dataset,
    /// The generating model.
    pub truth: LinearBetaLogistic,
}

/// Conditional generator: `x ~ N(0, I_d)`, `ln α = ln α₀ + γa·x`,
/// `ln β = ln β₀ + γb·x` with coefficients drawn once as `N(0, effect²/d)`.
pub fn gen_conditional_linear(
    n: usize,
    d: usize,
    base_params: BetaParams,
    effect_scale: f64,
    censor_horizon: u32,
    seed: u64,
) -> Result<ConditionalSample> {
    check_horizon(censor_horizon)?;
    let mut coef_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let sd = if d > 0 { effect_scale / (d as f64).sqrt() } else { 0.0 };
    let mut draw = || -> Vec<f64> {
        (0..d)
            .map(|_| sd * Distribution::<f64>::sample(&StandardNormal, &mut coef_rng))
            .collect()
    };
    let mut truth = LinearBetaLogistic::zeros(d);
    truth.gamma_a = draw();
    truth.gamma_b = draw();
    truth.intercept_a = base_params.alpha.ln();
    truth.intercept_b = base_params.beta.ln();

    let base = ChaCha8Rng::seed_from_u64(seed);
    let observations = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = unit_rng(&base, i);
            let x: Vec<f64> = (0..d)
                .map(|_| Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect();
            let params = truth.predict_params(&x).expect("dimension matches");
            draw_unit(&mut rng, params, censor_horizon, x)
        })
        .collect();
    let dataset = Dataset::new(truth.feature_names.clone(), observations);
    Ok(ConditionalSample { dataset, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbg;

    fn bp(a: f64, b: f64) -> BetaParams {
        BetaParams::new(a, b).unwrap()
    }

    #[test]
    fn uniform_prior_first_step_rate() {
        let obs = gen_beta_geometric(bp(1.0, 1.0), 1_000_000, 1, 1).unwrap();
        let events = obs.iter().filter(|o| !o.censored).count() as f64 / 1e6;
        assert!((events - 0.5).abs() < 0.002);
        assert!(obs.iter().all(|o| o.t == 1));
    }

    #[test]
    fn uniform_prior_survival_at_three() {
        let obs = gen_beta_geometric(bp(1.0, 1.0), 1_000_000, 3, 2).unwrap();
        let surv = obs.iter().filter(|o| o.censored).count() as f64 / 1e6;
        assert!((surv - 0.25).abs() < 0.002);
    }

    #[test]
    fn pmf_within_three_standard_errors() {
        let n = 1_000_000;
        for (i, params) in [bp(0.5, 1.5), bp(4.75, 14.25), bp(2.0, 0.7)].into_iter().enumerate() {
            let horizon = 6;
            let obs = gen_beta_geometric(params, n, horizon, 10 + i as u64).unwrap();
            for t in 1..=horizon {
                let p = sbg::pmf(params, t).unwrap();
                let freq = obs.iter().filter(|o| !o.censored && o.t == t).count() as f64 / n as f64;
                let se = (p * (1.0 - p) / n as f64).sqrt();
                assert!((freq - p).abs() < 3.5 * se, "{params:?} t={t}: {freq} vs {p}");
            }
            let s = sbg::survival(params, horizon);
            let cens = obs.iter().filter(|o| o.censored).count() as f64 / n as f64;
            assert!((cens - s).abs() < 3.5 * (s * (1.0 - s) / n as f64).sqrt());
        }
    }

    #[test]
    fn seeded_and_thread_independent() {
        let a = gen_beta_geometric(bp(0.7, 2.0), 5000, 10, 3).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| gen_beta_geometric(bp(0.7, 2.0), 5000, 10, 3).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, gen_beta_geometric(bp(0.7, 2.0), 5000, 10, 4).unwrap());
    }

    #[test]
    fn mixture_cohorts_share_first_step_rate() {
        let ds = gen_table1_mixture(200_000, 1, 5).unwrap();
        assert_eq!(
            ds.feature_names,
            vec!["group_normal", "group_right_skewed", "group_u_shaped"]
        );
        for g in 0..3 {
            let rows: Vec<&Observation> = ds.observations.iter().filter(|o| o.features[g] == 1.0).collect();
            let rate = rows.iter().filter(|o| !o.censored).count() as f64 / rows.len() as f64;
            assert!((rate - 0.25).abs() < 0.005, "group {g}: {rate}");
        }
        assert!(gen_table1_mixture(0, 4, 1).unwrap().is_empty());
    }

    #[test]
    fn u_shaped_alpha_is_one_twelfth() {
        let c = table1_cohorts(1);
        assert_eq!(c[2].params.alpha, 1.0 / 12.0);
        let s4: Vec<f64> = c.iter().map(|c| sbg::survival(c.params, 4)).collect();
        assert!(s4[2] > s4[1] && s4[1] > s4[0], "{s4:?}");
    }

    #[test]
    fn sweep_variance_shrinks_with_level() {
        // Prior variance of the noise-free parameters at u = 1 falls as the level rises.
        let var = |level: f64| bp(0.5 * (1.0 + level), 1.5 * (1.0 + level)).variance();
        assert!(var(5.0) < var(1.0) && var(1.0) < var(0.0));

        let a = gen_heterogeneity_sweep(3000, 2.0, 0.1, 4, 7).unwrap();
        assert_eq!(a, gen_heterogeneity_sweep(3000, 2.0, 0.1, 4, 7).unwrap());
        assert_eq!(a.n_features(), 4);
        for o in &a.observations {
            assert!((0.0..1.0).contains(&o.features[0]));
            assert_eq!(o.features[1..].iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn sweep_level_zero_without_noise_matches_mixture_rates() {
        let ds = gen_heterogeneity_sweep(300_000, 0.0, 0.0, 1, 8).unwrap();
        let rate = ds.observations.iter().filter(|o| !o.censored).count() as f64 / 3e5;
        assert!((rate - 0.25).abs() < 0.004);
    }

    #[test]
    fn zero_horizon_rejected() {
        assert!(gen_beta_geometric(bp(1.0, 1.0), 10, 0, 1).is_err());
        assert!(gen_table1_mixture(10, 0, 1).is_err());
    }

    #[test]
    fn conditional_generator_is_consistent() {
        let s = gen_conditional_linear(1000, 3, bp(0.2, 2.0), 1.0, 5, 9).unwrap();
        assert_eq!(s.dataset.n_features(), 3);
        assert_eq!(s.truth.predict_params(&[0.0; 3]).unwrap().alpha, 0.2f64.ln().exp());
        let again = gen_conditional_linear(1000, 3, bp(0.2, 2.0), 1.0, 5, 9).unwrap();
        assert_eq!(s.dataset, again.dataset);
    }
}

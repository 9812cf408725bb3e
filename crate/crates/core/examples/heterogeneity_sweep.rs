//! Held-out AUC of beta-logistic and horizon logistic models as the
//! population becomes more homogeneous.

use beta_survival::baselines::{fit_logistic_at_horizon, GlmConfig};
use beta_survival::evalkit::auc_at_horizon;
use beta_survival::linear::{fit_linear, FitConfig};
use beta_survival::simgen::gen_heterogeneity_sweep;
use beta_survival::{Result, RiskModel};

fn main() -> Result<()> {
    let horizon = 4;
    println!("level  h   beta-logistic  logistic(h)");
    for level in [0.0, 2.0, 8.0] {
        let train = gen_heterogeneity_sweep(20_000, level, 0.05, horizon, 1)?;
        let test = gen_heterogeneity_sweep(20_000, level, 0.05, horizon, 2)?;
        let (beta_model, _) = fit_linear(&train.observations, &FitConfig::default())?;
        for h in 2..=horizon {
            let (logit, _) = fit_logistic_at_horizon(&train.observations, h, &GlmConfig::default())?;
            let score = |m: &dyn RiskModel| -> Result<f64> {
                let s = test
                    .observations
                    .iter()
                    .map(|o| m.risk_score(&o.features, h))
                    .collect::<Result<Vec<_>>>()?;
                Ok(auc_at_horizon(&s, &test.observations, h)?.auc)
            };
            println!("{level:>5}  {h}   {:.4}         {:.4}", score(&beta_model)?, score(&logit)?);
        }
    }
    Ok(())
}

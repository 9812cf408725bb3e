//! Gradient boosting with the beta-logistic likelihood as a custom objective.
//!
//! `beta_logistic_grad_hess` is the per-row callback a boosting library
//! needs; `fit_gbrt` uses it to grow vector-output trees over (ln α, ln β).

use beta_survival::gbrt::{beta_logistic_grad_hess, fit_gbrt, GbrtConfig};
use beta_survival::linear::DEFAULT_CLAMP;
use beta_survival::simgen::gen_heterogeneity_sweep;
use beta_survival::{Observation, Result};

fn main() -> Result<()> {
    let row = Observation::event(3, vec![]);
    let (g, h, loss) = beta_logistic_grad_hess(&row, 0.2, 1.1, DEFAULT_CLAMP);
    println!("event at t=3, a=0.2, b=1.1: loss {loss:.5}, grad {g:.5?}, hess {h:.5?}");

    let data = gen_heterogeneity_sweep(20_000, 4.0, 0.05, 6, 3)?;
    let config = GbrtConfig {
        rounds: 60,
        max_depth: 3,
        learning_rate: 0.2,
        ..GbrtConfig::default()
    };
    let (model, report) = fit_gbrt(&data.observations, &config)?;
    println!(
        "\n{} trees, base scores (a, b) = ({:.3}, {:.3})",
        model.trees.len(),
        model.base_scores.0,
        model.base_scores.1
    );
    for (round, loss) in report.round_losses.iter().enumerate().step_by(10) {
        println!("round {round:>3}: negative log-likelihood {loss:.2}");
    }

    for x in [[0.1, 1.0, 0.0, 0.0], [0.9, 0.0, 0.0, 1.0]] {
        let p = model.predict_params(&x)?;
        let s = model.predict_survival_curve(&x, 6)?;
        println!("x = {x:?}: alpha {:.3}, beta {:.3}, S(6) = {:.4}", p.alpha, p.beta, s[5]);
    }
    Ok(())
}

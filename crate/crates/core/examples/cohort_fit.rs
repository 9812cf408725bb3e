//! Fit an unconditional shifted-beta-geometric model to one censored cohort
//! and compare it with the Kaplan-Meier curve.

use beta_survival::evalkit::{empirical_survival, fit_sbg_cohort};
use beta_survival::simgen::gen_beta_geometric;
use beta_survival::{sbg, BetaParams, Result};

fn main() -> Result<()> {
    let truth = BetaParams::new(0.5, 1.5)?;
    let cohort = gen_beta_geometric(truth, 50_000, 8, 11)?;
    let censored = cohort.iter().filter(|o| o.censored).count();
    println!("{} units, {censored} still active at t = 8", cohort.len());

    let fit = fit_sbg_cohort(&cohort)?;
    println!(
        "fitted alpha = {:.4}, beta = {:.4} (truth 0.5, 1.5); {} Newton steps, identifiable: {}",
        fit.params.alpha, fit.params.beta, fit.iterations, fit.identifiable
    );

    println!("\n t   Kaplan-Meier   fitted S(t)   extrapolated");
    let km = empirical_survival(&cohort)?;
    for (t, s) in &km {
        println!("{t:>2}   {s:.5}        {:.5}", sbg::survival(fit.params, *t));
    }
    for t in [12, 24, 52] {
        println!("{t:>2}   -              -             {:.5}", sbg::survival(fit.params, t));
    }
    Ok(())
}

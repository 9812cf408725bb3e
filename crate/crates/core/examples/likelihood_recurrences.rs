//! Probability and derivative recurrences of the shifted-beta-geometric model.
//!
//! Run with `cargo run --example likelihood_recurrences`.

use beta_survival::sbg;
use beta_survival::{BetaParams, Result};

fn main() -> Result<()> {
    for (alpha, beta) in [(1.0, 1.0), (0.5, 1.5), (4.75, 14.25)] {
        let p = BetaParams::new(alpha, beta)?;
        println!("Beta({alpha}, {beta})");
        println!("  t    P(T=t)      P(T>t)");
        for t in 1..=6 {
            println!("  {t}   {:.6}   {:.6}", sbg::pmf(p, t)?, sbg::survival(p, t));
        }
        let total: f64 = (1..=200).map(|t| sbg::pmf(p, t).unwrap()).sum::<f64>() + sbg::survival(p, 200);
        println!("  sum of pmf to 200 plus S(200) = {total:.15}");
    }

    // Gradient of log P(T = 3) in (a, b) = (ln α, ln β), checked by central differences.
    let (a, b) = (0.3_f64, -0.7_f64);
    let d = sbg::derivatives(BetaParams::new(a.exp(), b.exp())?, 3, false)?;
    let lp = |a: f64, b: f64| sbg::log_pmf(BetaParams::new(a.exp(), b.exp()).unwrap(), 3).unwrap();
    let h = 1e-5;
    let fd_a = (lp(a + h, b) - lp(a - h, b)) / (2.0 * h);
    let fd_b = (lp(a, b + h) - lp(a, b - h)) / (2.0 * h);
    println!("\nd logP/da: recurrence {:.9}, finite difference {fd_a:.9}", d.dlog_da);
    println!("d logP/db: recurrence {:.9}, finite difference {fd_b:.9}", d.dlog_db);
    println!("loss curvature in a, -d2 logP/da2 = {:.6} (never negative)", -d.d2log_da2);
    Ok(())
}

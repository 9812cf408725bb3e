//! Rank items by the median of their event-probability prior, then re-rank
//! after projecting the prior forward in time.

use beta_survival::beta_math::beta_median;
use beta_survival::ranking::{pairwise_prob_integer, rank_at_horizon};
use beta_survival::{BetaParams, Result};

fn main() -> Result<()> {
    let u = BetaParams::new(2.0, 3.0)?;
    let v = BetaParams::new(3.0, 2.0)?;
    println!(
        "P(theta_v > theta_u) = {:.4}; medians {:.4} vs {:.4}",
        pairwise_prob_integer(u, v)?,
        beta_median(u),
        beta_median(v)
    );

    let items = vec![
        ("steady".to_string(), BetaParams::new(20.0, 60.0)?),
        ("polarized".to_string(), BetaParams::new(0.3, 0.7)?),
        ("mostly-loyal".to_string(), BetaParams::new(0.5, 4.0)?),
        ("flaky".to_string(), BetaParams::new(3.0, 4.0)?),
    ];
    for t in [1, 3, 8] {
        println!("\nhorizon {t}:");
        for r in rank_at_horizon(&items, t)? {
            println!(
                "  {}. {:<13} projected Beta({:.3}, {:.3}), median {:.4e}",
                r.rank, r.item_id, r.params.alpha, r.params.beta, r.median_score
            );
        }
    }
    Ok(())
}

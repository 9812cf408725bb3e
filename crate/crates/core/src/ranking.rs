//! Ranking beta distributions: the integer-parameter pairwise probability,
//! median ordering, and power-beta projection for later horizons.
//!
//! At horizon 1 items are ordered by the median of `θ`, largest (most at
//! risk) first. For `t > 1` each item's `z = (1 − θ)θ^{t−1}` is approximated by
//! a beta distribution via method of moments and items are ordered by the
//! median of that approximation, smallest first. At `t = 1`, `z = 1 − θ`, so
//! both rules agree there.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta_math::{ln_beta, BetaParams};
use crate::data::format_float;
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

/// Medians closer than this are treated as tied.
pub const MEDIAN_TIE_TOL: f64 = 1e-12;

/// Largest integer parameter accepted by [`pairwise_prob_integer`].
pub const MAX_INTEGER_PARAM: f64 = 60.0;

fn as_small_integer(v: f64) -> Option<u32> {
    (v.fract() == 0.0 && (1.0..=MAX_INTEGER_PARAM).contains(&v)).then_some(v as u32)
}

/// `P(θv > θu)` for integer parameters, as a finite sum of beta-function
/// ratios evaluated in log space.
pub fn pairwise_prob_integer(u: BetaParams, v: BetaParams) -> Result<f64> {
    let ints = [u.alpha, u.beta, v.alpha, v.beta].map(as_small_integer);
    let [Some(au), Some(bu), Some(av), Some(bv)] = ints else {
        return Err(Error::Domain(format!(
            "pairwise_prob_integer needs integer parameters in 1..=60, got u = {u:?}, v = {v:?}; compare medians instead"
        )));
    };
    let (au, bu, av, bv) = (au as f64, bu as f64, av as f64, bv as f64);
    let base = ln_beta(au, bu);
    let terms: Vec<f64> = (0..av as u32)
        .map(|i| {
            let i = i as f64;
            (ln_beta(au + i, bu + bv) - (bv + i).ln() - ln_beta(1.0 + i, bv) - base).exp()
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Orders `u` and `v` by the medians of `θ`; `Equal` when they differ by
/// less than [`MEDIAN_TIE_TOL`].
pub fn compare_by_median(u: BetaParams, v: BetaParams) -> Ordering {
    let (mu, mv) = (u.median(), v.median());
    if (mu - mv).abs() < MEDIAN_TIE_TOL {
        Ordering::Equal
    } else {
        mu.total_cmp(&mv)
    }
}

/// First and second moments of `z = (1 − θ)θ^{t−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBetaMoments {
    pub m1: f64,
    pub m2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMode {
    /// Beta-function ratios `B(α+t−1, β+1)/B(α, β)` and `B(α+2t−2, β+2)/B(α, β)`.
    Exact,
    /// `m1 = (β/(α+β))(α/(α+β))^{t−1}` and
    /// `m2 = (α(α+1)/((α+β)(α+β+1)))(β(β+1)/((α+β)(α+β+1)))^{t−1}`.
    PaperClosedForm,
}

/// `ln Π_{j<n} (α+j)/(α+c+j)`, the log of `B(α+n, c)/B(α, c)`.
fn ln_rising_ratio(alpha: f64, c: f64, n: u32) -> f64 {
    let terms: Vec<f64> = (0..n).map(|j| -(c / (alpha + j as f64)).ln_1p()).collect();
    pairwise_sum(&terms)
}

/// Log moments `(ln m1, ln m2)`. Exact mode evaluates the beta-function
/// ratios as finite products, which keeps `m2 − m1²` accurate when it is
/// small relative to `m1²`.
fn log_moments(params: BetaParams, t: u32, mode: ProjectionMode) -> (f64, f64) {
    let (a, b) = (params.alpha, params.beta);
    let k = t - 1;
    match mode {
        ProjectionMode::Exact => {
            // B(α+k, β+1)/B(α, β) = β/(α+β) · B(α+k, β+1)/B(α, β+1).
            let l1 = -(a / b).ln_1p() + ln_rising_ratio(a, b + 1.0, k);
            // B(α+2k, β+2)/B(α, β) = β(β+1)/((α+β)(α+β+1)) · B(α+2k, β+2)/B(α, β+2).
            let l2 = -(a / b).ln_1p() - (a / (b + 1.0)).ln_1p() + ln_rising_ratio(a, b + 2.0, 2 * k);
            (l1, l2)
        }
        ProjectionMode::PaperClosedForm => {
            let k = k as f64;
            let s = a + b;
            let ln_s = s.ln();
            let ln_s1 = (s + 1.0).ln();
            (
                b.ln() - ln_s + k * (a.ln() - ln_s),
                a.ln() + (a + 1.0).ln() - ln_s - ln_s1 + k * (b.ln() + (b + 1.0).ln() - ln_s - ln_s1),
            )
        }
    }
}

pub fn power_beta_moments(params: BetaParams, t: u32, mode: ProjectionMode) -> Result<PowerBetaMoments> {
    if t == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let (l1, l2) = log_moments(params, t, mode);
    Ok(PowerBetaMoments {
        m1: l1.exp(),
        m2: l2.exp(),
    })
}

/// Beta approximation of `z = (1 − θ)θ^{t−1}` by method of moments:
/// `α̂ = (m1 − m2)m1/(m2 − m1²)`, `β̂ = (m1 − m2)(1 − m1)/(m2 − m1²)`.
pub fn project_power_beta(params: BetaParams, t: u32, mode: ProjectionMode) -> Result<BetaParams> {
    if t == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let (l1, l2) = log_moments(params, t, mode);
    let m1 = l1.exp();
    let m2 = l2.exp();
    // m2 − m1² without cancellation.
    let var = m1 * m1 * (l2 - 2.0 * l1).exp_m1();
    if !(var > 0.0) || !(m1 > m2) {
        return Err(Error::Domain(format!(
            "beta approximation invalid at horizon {t} for {params:?}: m1 = {m1:e}, m2 = {m2:e}"
        )));
    }
    let common = (m1 - m2) / var;
    BetaParams::new(common * m1, common * (1.0 - m1)).map_err(|e| {
        Error::Domain(format!("beta approximation out of range at horizon {t} for {params:?}: {e}"))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedItem {
    pub item_id: String,
    /// Raw parameters at horizon 1, projected parameters otherwise (raw when
    /// projection failed).
    pub params: BetaParams,
    /// Median of `params`.
    pub median_score: f64,
    pub horizon: u32,
    /// Position in the ranking, starting at 1 for the most at risk.
    pub rank: usize,
    /// Projection failed and the item was placed by its raw median.
    pub projection_failed: bool,
}

/// Ranks items most-at-risk first at horizon `t`.
///
/// At `t = 1` the key is `median(θ)`. For `t > 1` it is the median of the
/// beta approximation to `θ(1 − θ)^{t−1} = P(T = t | θ)`, obtained by
/// projecting the mirrored prior (`1 − θ ~ Beta(β, α)`). At `t = 1` the two
/// coincide. Ties (keys within [`MEDIAN_TIE_TOL`]) go to the lower `α`, then
/// to input order. Items whose projection fails are placed by the point value
/// `m(1 − m)^{t−1}` with `m = median(θ)` and flagged.
pub fn rank_at_horizon(items: &[(String, BetaParams)], t: u32) -> Result<Vec<RankedItem>> {
    if t == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    if items.is_empty() {
        return Err(Error::Input("nothing to rank".into()));
    }
    // Risk key: larger means more at risk.
    let scored: Vec<(f64, BetaParams, f64, bool)> = items
        .par_iter()
        .map(|(_, p)| {
            if t == 1 {
                let m = p.median();
                return (m, *p, m, false);
            }
            match project_power_beta(p.mirror(), t, ProjectionMode::Exact) {
                Ok(z) => {
                    let m = z.median();
                    (m, z, m, false)
                }
                Err(_) => {
                    let m = p.median();
                    (m * (1.0 - m).powi(t as i32 - 1), *p, m, true)
                }
            }
        })
        .collect();

    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&i, &j| scored[j].0.total_cmp(&scored[i].0).then(i.cmp(&j)));
    // Resolve near-ties group by group.
    let mut start = 0;
    while start < order.len() {
        let head = scored[order[start]].0;
        let mut end = start + 1;
        while end < order.len() && (head - scored[order[end]].0).abs() < MEDIAN_TIE_TOL {
            end += 1;
        }
        order[start..end].sort_by(|&i, &j| {
            scored[i].1.alpha.total_cmp(&scored[j].1.alpha).then(i.cmp(&j))
        });
        start = end;
    }

    Ok(order
        .into_iter()
        .enumerate()
        .map(|(r, i)| RankedItem {
            item_id: items[i].0.clone(),
            params: scored[i].1,
            median_score: scored[i].2,
            horizon: t,
            rank: r + 1,
            projection_failed: scored[i].3,
        })
        .collect())
}

/// Writes `item_id, horizon, alpha_hat, beta_hat, median, rank, projection_failed`.
pub fn write_rank_csv<W: Write>(writer: W, ranked: &[RankedItem]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record([
        "item_id",
        "horizon",
        "alpha_hat",
        "beta_hat",
        "median",
        "rank",
        "projection_failed",
    ])?;
    for item in ranked {
        w.write_record([
            item.item_id.clone(),
            item.horizon.to_string(),
            format_float(item.params.alpha),
            format_float(item.params.beta),
            format_float(item.median_score),
            item.rank.to_string(),
            u8::from(item.projection_failed).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

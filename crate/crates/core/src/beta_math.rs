//! Beta-function machinery: log-beta, the regularized incomplete beta
//! function, its inverse (medians), and seeded beta sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};

/// Smallest shape parameter accepted by [`BetaParams::new`].
///
/// Wide enough to hold `e^-30`, the bottom of the linear-score clamp used by
/// the model modules.
pub const PARAM_MIN: f64 = 1e-14;
/// Largest shape parameter accepted by [`BetaParams::new`] (holds `e^30`).
pub const PARAM_MAX: f64 = 1e14;

const CF_MAX_ITER: usize = 20_000;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

const QUANTILE_MAX_ITER: usize = 200;
const QUANTILE_X_TOL: f64 = 1e-12;

/// Shape parameters `(α, β)` of a beta distribution over the per-step event
/// probability `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !v.is_finite() || v <= 0.0 {
                return domain(format!("{name} must be positive and finite, got {v}"));
            }
            if !(PARAM_MIN..=PARAM_MAX).contains(&v) {
                return domain(format!(
                    "{name} = {v:e} is outside the supported range [{PARAM_MIN:e}, {PARAM_MAX:e}]"
                ));
            }
        }
        Ok(Self { alpha, beta })
    }

    /// Builds `(e^a, e^b)` after clamping both log-parameters to `[-clamp, clamp]`.
    ///
    /// `clamp` must not exceed 30 so the result stays inside the supported range.
    pub fn from_log(a: f64, b: f64, clamp: f64) -> Self {
        debug_assert!(clamp <= 30.0);
        let a = if a.is_nan() { 0.0 } else { a.clamp(-clamp, clamp) };
        let b = if b.is_nan() { 0.0 } else { b.clamp(-clamp, clamp) };
        Self {
            alpha: a.exp(),
            beta: b.exp(),
        }
    }

    /// The mirrored distribution of `1 - θ`.
    pub fn mirror(self) -> Self {
        Self {
            alpha: self.beta,
            beta: self.alpha,
        }
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }

    pub fn median(&self) -> f64 {
        beta_median(*self)
    }
}

/// `ln B(α, β) = ln Γ(α) + ln Γ(β) − ln Γ(α + β)`.
pub fn log_beta_fn(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha.is_finite() && beta.is_finite()) || alpha <= 0.0 || beta <= 0.0 {
        return domain(format!(
            "log_beta_fn requires positive finite arguments, got ({alpha}, {beta})"
        ));
    }
    Ok(ln_beta(alpha, beta))
}

/// Unchecked log-beta for hot loops; callers guarantee positive arguments.
#[inline]
pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    // Addition is commutative in IEEE arithmetic, so ln_beta(a, b) == ln_beta(b, a) exactly.
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Log density of `Beta(α, β)` at `x ∈ (0, 1)`.
pub fn ln_beta_pdf(x: f64, params: BetaParams) -> f64 {
    let BetaParams { alpha, beta } = params;
    (alpha - 1.0) * x.ln() + (beta - 1.0) * (-x).ln_1p() - ln_beta(alpha, beta)
}

/// Regularized incomplete beta function `I_x(α, β)`.
pub fn reg_inc_beta(x: f64, params: BetaParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("reg_inc_beta requires x in [0, 1], got {x}"));
    }
    Ok(inc_beta_unchecked(x, params.alpha, params.beta))
}

fn inc_beta_unchecked(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    if x > a / (a + b) {
        1.0 - inc_beta_lower(1.0 - x, b, a)
    } else {
        inc_beta_lower(x, a, b)
    }
}

/// `I_x(a, b)` via the continued fraction; accurate on the lower side of the mean.
fn inc_beta_lower(x: f64, a: f64, b: f64) -> f64 {
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    (ln_front + continued_fraction(x, a, b).ln() - a.ln()).exp()
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let guard = |v: f64| if v.abs() < CF_TINY { CF_TINY } else { v };

    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let even = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + even * d);
        c = guard(1.0 + even / c);
        h *= d * c;
        let odd = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + odd * d);
        c = guard(1.0 + odd / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Inverse of `I_x(α, β)` in `x`: bisection safeguarded Newton iteration.
pub fn beta_quantile(p: f64, params: BetaParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("beta_quantile requires p in [0, 1], got {p}"));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let BetaParams { alpha: a, beta: b } = params;
    let lnb = ln_beta(a, b);

    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut x = initial_quantile_guess(p, a, b, lnb);
    for _ in 0..QUANTILE_MAX_ITER {
        let f = inc_beta_unchecked(x, a, b) - p;
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let pdf = ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - lnb).exp();
        let newton = x - f / pdf;
        let next = if pdf.is_finite() && pdf > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let scale = next.min(1.0 - next).max(f64::MIN_POSITIVE);
        let step = (next - x).abs();
        x = next;
        if step <= QUANTILE_X_TOL * scale || hi - lo <= f64::EPSILON * scale {
            break;
        }
    }
    Ok(x)
}

fn initial_quantile_guess(p: f64, a: f64, b: f64, lnb: f64) -> f64 {
    let mut candidates = vec![a / (a + b)];
    if a >= 1.0 && b >= 1.0 {
        candidates.push((a - 1.0 / 3.0) / (a + b - 2.0 / 3.0));
    }
    // Tail expansions I_x ≈ x^a / (a B) near 0 and 1 - (1-x)^b / (b B) near 1.
    candidates.push(((p.ln() + a.ln() + lnb) / a).exp());
    candidates.push(1.0 - (((1.0 - p).ln() + b.ln() + lnb) / b).exp());
    candidates
        .into_iter()
        .filter(|x| *x > 0.0 && *x < 1.0)
        .map(|x| (x, (inc_beta_unchecked(x, a, b) - p).abs()))
        .min_by(|u, v| u.1.total_cmp(&v.1))
        .map(|(x, _)| x)
        .unwrap_or(0.5)
}

/// Median `I⁻¹(0.5; α, β)`. Symmetric and unit-parameter cases use their
/// closed forms.
pub fn beta_median(params: BetaParams) -> f64 {
    let BetaParams { alpha: a, beta: b } = params;
    let ln2 = std::f64::consts::LN_2;
    if a == b {
        0.5
    } else if a == 1.0 {
        -(-ln2 / b).exp_m1()
    } else if b == 1.0 {
        (-ln2 / a).exp()
    } else {
        beta_quantile(0.5, params).expect("0.5 is a valid probability")
    }
}

/// `n` seeded draws from `Beta(α, β)`.
pub fn sample_beta(params: BetaParams, rng_seed: u64, n: usize) -> Vec<f64> {
    let dist = Beta::new(params.alpha, params.beta).expect("validated beta parameters");
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..n).map(|_| dist.sample(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bp(a: f64, b: f64) -> BetaParams {
        BetaParams::new(a, b).unwrap()
    }

    fn ln_factorial(n: u32) -> f64 {
        (2..=n).map(|k| f64::from(k).ln()).sum()
    }

    #[test]
    fn log_beta_reference_values() {
        assert!(log_beta_fn(1.0, 1.0).unwrap().abs() < 1e-15);
        assert!((log_beta_fn(2.0, 2.0).unwrap() - (1.0f64 / 6.0).ln()).abs() < 1e-14);
        let pi_ln = std::f64::consts::PI.ln();
        assert!((log_beta_fn(0.5, 0.5).unwrap() - pi_ln).abs() < 1e-14);
    }

    #[test]
    fn log_beta_matches_factorials_to_1e12_relative() {
        // B(m, n) = (m-1)! (n-1)! / (m+n-1)! for positive integers.
        for &(m, n) in &[(3u32, 7u32), (10, 40), (120, 5), (500, 700), (1, 1000)] {
            let exact = ln_factorial(m - 1) + ln_factorial(n - 1) - ln_factorial(m + n - 1);
            let got = log_beta_fn(f64::from(m), f64::from(n)).unwrap();
            assert!(((got - exact) / exact).abs() < 1e-12, "B({m},{n}): {got} vs {exact}");
        }
    }

    #[test]
    fn log_beta_large_and_small_arguments() {
        // ln B(a, b) ~ ln Γ(a) for tiny a: ln Γ(a) ≈ -ln a - γ a.
        let a: f64 = 1e-3;
        let approx = -a.ln() - 0.577_215_664_901_532_9 * a;
        let got = log_beta_fn(a, 1.0).unwrap();
        // B(a, 1) = 1/a exactly.
        assert!((got - (1.0 / a).ln()).abs() / got.abs() < 1e-12);
        assert!((ln_gamma(a) - approx).abs() < 1e-6);
        // Stirling: ln B(n, n) for large n.
        let n: f64 = 1e6;
        let stirling = 0.5 * (2.0 * std::f64::consts::PI).ln() + (2.0 * n - 1.0) * n.ln()
            - (2.0 * n - 0.5) * (2.0 * n).ln()
            + (1.0 / (12.0 * n)) * 2.0
            - 1.0 / (24.0 * n);
        let got = log_beta_fn(n, n).unwrap();
        assert!(((got - stirling) / stirling).abs() < 1e-12);
    }

    #[test]
    fn log_beta_rejects_bad_arguments() {
        assert!(log_beta_fn(0.0, 1.0).is_err());
        assert!(log_beta_fn(1.0, -2.0).is_err());
        assert!(log_beta_fn(f64::NAN, 1.0).is_err());
        assert!(log_beta_fn(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(BetaParams::new(0.0, 1.0).is_err());
        assert!(BetaParams::new(1.0, f64::NAN).is_err());
        assert!(BetaParams::new(1e-20, 1.0).is_err());
        assert!(BetaParams::new(1e20, 1.0).is_err());
        let clamped = BetaParams::from_log(100.0, -100.0, 30.0);
        assert_eq!(clamped.alpha, 30f64.exp());
        assert_eq!(clamped.beta, (-30f64).exp());
        assert!(BetaParams::new(clamped.alpha, clamped.beta).is_ok());
    }

    #[test]
    fn incomplete_beta_reference_values() {
        assert!((reg_inc_beta(0.5, bp(1.0, 1.0)).unwrap() - 0.5).abs() < 1e-15);
        for a in [0.1, 0.7, 3.0, 25.0, 400.0] {
            assert!((reg_inc_beta(0.5, bp(a, a)).unwrap() - 0.5).abs() < 1e-12, "a = {a}");
        }
        // α = 1 closed form 1 - (1-x)^β.
        for &x in &[0.01, 0.2063, 0.5, 0.93] {
            let exact = 1.0 - (1.0f64 - x).powi(3);
            assert!((reg_inc_beta(x, bp(1.0, 3.0)).unwrap() - exact).abs() < 1e-13);
        }
        assert!((reg_inc_beta(0.2063, bp(1.0, 3.0)).unwrap() - 0.5).abs() < 1e-3);
        assert_eq!(reg_inc_beta(0.0, bp(2.0, 3.0)).unwrap(), 0.0);
        assert_eq!(reg_inc_beta(1.0, bp(2.0, 3.0)).unwrap(), 1.0);
        assert!(reg_inc_beta(-0.1, bp(2.0, 3.0)).is_err());
        assert!(reg_inc_beta(1.1, bp(2.0, 3.0)).is_err());
    }

    #[test]
    fn incomplete_beta_matches_binomial_tail() {
        // For integer a, b: I_x(a, b) = P(Binomial(a+b-1, x) >= a).
        for &(a, b) in &[(2u32, 3u32), (5, 5), (1, 9), (12, 4), (30, 70)] {
            let n = a + b - 1;
            for &x in &[0.05, 0.3, 0.5, 0.77, 0.98] {
                let tail: f64 = (a..=n)
                    .map(|k| {
                        let ln_choose = ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k);
                        (ln_choose
                            + f64::from(k) * f64::ln(x)
                            + f64::from(n - k) * f64::ln(1.0 - x))
                        .exp()
                    })
                    .sum();
                let got = reg_inc_beta(x, bp(f64::from(a), f64::from(b))).unwrap();
                assert!((got - tail).abs() < 1e-10, "({a},{b},{x}): {got} vs {tail}");
            }
        }
    }

    #[test]
    fn median_reference_values() {
        assert!((beta_median(bp(1.0, 1.0)) - 0.5).abs() < 1e-12);
        let m = beta_median(bp(1.0, 3.0));
        assert!((m - (1.0 - 0.5f64.powf(1.0 / 3.0))).abs() < 1e-12);
        let normal = beta_median(bp(4.75, 14.25));
        assert!(normal > 0.2 && normal < 0.25, "{normal}");
    }

    #[test]
    fn median_extreme_shapes() {
        for &(a, b) in &[(1e-3, 1.0), (0.05, 50.0), (50.0, 0.05), (1e4, 3e4), (1.0 / 12.0, 0.25)] {
            let p = bp(a, b);
            let m = beta_median(p);
            assert!(m > 0.0 && m < 1.0, "({a},{b}) -> {m}");
            assert!((reg_inc_beta(m, p).unwrap() - 0.5).abs() < 1e-9, "({a},{b})");
        }
    }

    #[test]
    fn median_monotone_in_shapes() {
        let mut prev = 1.0;
        for b in [0.3, 0.9, 1.0, 2.0, 5.5, 40.0] {
            let m = beta_median(bp(2.0, b));
            assert!(m < prev);
            prev = m;
        }
        let mut prev = 0.0;
        for a in [0.3, 0.9, 1.0, 2.0, 5.5, 40.0] {
            let m = beta_median(bp(a, 2.0));
            assert!(m > prev);
            prev = m;
        }
    }

    #[test]
    fn sampling_moments_and_determinism() {
        let draws = sample_beta(bp(1.0, 1.0), 17, 1_000_000);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.5).abs() < 0.002);

        let draws = sample_beta(bp(2.0, 2.0), 18, 1_000_000);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / draws.len() as f64;
        assert!((var - 0.05).abs() < 0.001);

        assert_eq!(sample_beta(bp(0.5, 3.0), 99, 100), sample_beta(bp(0.5, 3.0), 99, 100));
        assert!(draws.iter().all(|x| *x > 0.0 && *x < 1.0));
    }

    proptest! {
        #[test]
        fn median_inverts_cdf(a in 0.05f64..60.0, b in 0.05f64..60.0) {
            let p = bp(a, b);
            let m = beta_median(p);
            prop_assert!((reg_inc_beta(m, p).unwrap() - 0.5).abs() < 1e-9);
        }

        #[test]
        fn incomplete_beta_reflection(x in 0.0f64..=1.0, a in 0.05f64..80.0, b in 0.05f64..80.0) {
            let lhs = reg_inc_beta(x, bp(a, b)).unwrap();
            let rhs = 1.0 - reg_inc_beta(1.0 - x, bp(b, a)).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn log_beta_symmetric(a in 1e-3f64..1e6, b in 1e-3f64..1e6) {
            prop_assert_eq!(log_beta_fn(a, b).unwrap(), log_beta_fn(b, a).unwrap());
        }

        #[test]
        fn incomplete_beta_monotone(x in 0.0f64..0.99, dx in 0.0f64..0.01, a in 0.1f64..30.0, b in 0.1f64..30.0) {
            let p = bp(a, b);
            prop_assert!(reg_inc_beta(x + dx, p).unwrap() >= reg_inc_beta(x, p).unwrap() - 1e-14);
        }
    }
}

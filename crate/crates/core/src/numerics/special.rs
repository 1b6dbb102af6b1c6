//! Gamma-family special functions on the positive real axis.
//!
//! `log_gamma` and `digamma` shift small arguments upward with the
//! recurrences `Γ(x+1) = xΓ(x)` and `ψ(x+1) = ψ(x) + 1/x`, then evaluate the
//! asymptotic (Stirling) series, which is accurate to a few ulps past the
//! shift point.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LOG_GAMMA_SHIFT: f64 = 15.0;
const DIGAMMA_SHIFT: f64 = 10.0;
const HARMONIC_DIRECT_LIMIT: u64 = 1 << 20;

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} requires a positive finite argument, got {x}"
        )))
    }
}

fn stirling_log_gamma(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli terms B_{2k} / (2k(2k−1) x^{2k−1}), k = 1..7
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2
                                * (-1.0 / 1680.0
                                    + inv2
                                        * (1.0 / 1188.0
                                            + inv2 * (-691.0 / 360_360.0 + inv2 / 156.0))))));
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + series
}

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_positive("log_gamma", x)?;
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    if x >= LOG_GAMMA_SHIFT {
        return Ok(stirling_log_gamma(x));
    }
    let mut shifted = x;
    let mut prod = 1.0;
    while shifted < LOG_GAMMA_SHIFT {
        prod *= shifted;
        shifted += 1.0;
    }
    Ok(stirling_log_gamma(shifted) - prod.ln())
}

/// `Γ(x)` for `x > 0`.
pub fn gamma(x: f64) -> Result<f64> {
    log_gamma(x).map(f64::exp)
}

/// Digamma `ψ(x) = d/dx ln Γ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive("digamma", x)?;
    let mut acc = 0.0;
    let mut y = x;
    while y < DIGAMMA_SHIFT {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let inv2 = 1.0 / (y * y);
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32_760.0 - inv2 / 12.0))))));
    Ok(acc + y.ln() - 0.5 / y - series)
}

/// `ln β(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    Ok(log_gamma(a)? + log_gamma(b)? - log_gamma(a + b)?)
}

/// Beta function `β(a, b) = Γ(a)Γ(b)/Γ(a+b)`, evaluated in log space.
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    ln_beta(a, b).map(f64::exp)
}

/// Regularized incomplete beta `I_x(a, b)` for integer shapes, as the
/// finite binomial tail `Σ_{m=a}^{a+b−1} C(a+b−1, m) x^m (1−x)^{a+b−1−m}`.
pub fn regularized_incomplete_beta(x: f64, a: u32, b: u32) -> Result<f64> {
    if a == 0 || b == 0 {
        return Err(Error::domain("incomplete beta shapes must be >= 1"));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!(
            "incomplete beta needs x in [0, 1], got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let n = a + b - 1;
    let (lx, l1x) = (x.ln(), (-x).ln_1p());
    let ln_n_fact = log_gamma(f64::from(n) + 1.0)?;
    let mut total = 0.0;
    for m in a..=n {
        let ln_binom =
            ln_n_fact - log_gamma(f64::from(m) + 1.0)? - log_gamma(f64::from(n - m) + 1.0)?;
        total += (ln_binom + f64::from(m) * lx + f64::from(n - m) * l1x).exp();
    }
    Ok(total.min(1.0))
}

/// Harmonic number `H_n = Σ_{l=1}^n 1/l`.
///
/// Summed directly (smallest terms first) up to 2^20; beyond that the
/// asymptotic expansion is exact to double precision.
pub fn harmonic(n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if n <= HARMONIC_DIRECT_LIMIT {
        return (1..=n).rev().map(|l| 1.0 / l as f64).sum();
    }
    let x = n as f64;
    let inv2 = 1.0 / (x * x);
    x.ln() + EULER_GAMMA + 0.5 / x - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        if b == 0.0 {
            a.abs()
        } else {
            ((a - b) / b).abs()
        }
    }

    #[test]
    fn known_values() {
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-14);
        assert!((beta_fn(1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((log_gamma(0.5).unwrap() - PI.sqrt().ln()).abs() < 1e-14);
        // ln(10!) = ln 3628800
        assert!(rel(log_gamma(11.0).unwrap(), 3_628_800f64.ln()) < 1e-14);
        assert!(rel(gamma(5.0).unwrap(), 24.0) < 1e-13);
    }

    #[test]
    fn digamma_harmonic_identity() {
        // ψ(n) − ψ(1) = H_{n−1}
        let d = digamma(3.0).unwrap() - digamma(1.0).unwrap();
        assert!((d - 1.5).abs() < 1e-13);
        for n in 2..40u64 {
            let d = digamma(n as f64).unwrap() - digamma(1.0).unwrap();
            assert!((d - harmonic(n - 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn agrees_with_statrs_reference() {
        let mut x: f64 = 1e-3;
        while x < 1e6 {
            // avoid the zeros of ln Γ at 1 and 2, where relative error is meaningless
            if (x - 1.0).abs() > 0.05 && (x - 2.0).abs() > 0.05 {
                let ours = log_gamma(x).unwrap();
                let reference = statrs::function::gamma::ln_gamma(x);
                assert!(
                    rel(ours, reference) < 1e-10,
                    "lgamma({x}): {ours} vs {reference}"
                );
            }
            let ours = digamma(x).unwrap();
            let reference = statrs::function::gamma::digamma(x);
            assert!(
                rel(ours, reference) < 1e-10,
                "digamma({x}): {ours} vs {reference}"
            );
            x *= 1.37;
        }
    }

    #[test]
    fn beta_matches_product_formula() {
        // β(n, a) = (n−1)! / (a (a+1) ⋯ (a+n−1)) for integer n
        for n in [1u32, 2, 5, 30] {
            for a in [0.25, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0] {
                let mut prod = 1.0 / a;
                for j in 1..n {
                    prod *= f64::from(j) / (a + f64::from(j));
                }
                assert!(rel(beta_fn(f64::from(n), a).unwrap(), prod) < 1e-12);
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
        assert!(digamma(f64::NAN).is_err());
        assert!(beta_fn(1.0, 0.0).is_err());
        assert!(regularized_incomplete_beta(1.5, 1, 1).is_err());
        assert!(regularized_incomplete_beta(-0.1, 1, 1).is_err());
        assert!(regularized_incomplete_beta(0.5, 0, 1).is_err());
    }

    #[test]
    fn incomplete_beta_examples() {
        for x in [0.0, 0.1, 0.37, 0.9, 1.0] {
            assert!((regularized_incomplete_beta(x, 1, 1).unwrap() - x).abs() < 1e-15);
        }
        assert!((regularized_incomplete_beta(0.5, 1, 2).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(regularized_incomplete_beta(1.0, 3, 7).unwrap(), 1.0);
        assert_eq!(regularized_incomplete_beta(0.0, 3, 7).unwrap(), 0.0);
    }

    /// Composite Simpson integral of the Beta(a, b) density over [0, x].
    fn beta_cdf_by_quadrature(x: f64, a: u32, b: u32) -> f64 {
        let norm = beta_fn(f64::from(a), f64::from(b)).unwrap();
        let f = |t: f64| t.powi(a as i32 - 1) * (1.0 - t).powi(b as i32 - 1) / norm;
        let n = 4000;
        let h = x / n as f64;
        let mut s = f(0.0) + f(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn incomplete_beta_matches_quadrature() {
        for a in 1..=6 {
            for b in 1..=6 {
                let mut prev = 0.0;
                for i in 0..=20 {
                    let x = i as f64 / 20.0;
                    let ours = regularized_incomplete_beta(x, a, b).unwrap();
                    let oracle = beta_cdf_by_quadrature(x, a, b);
                    assert!(
                        (ours - oracle).abs() < 1e-8,
                        "I_{x}({a},{b}): {ours} vs {oracle}"
                    );
                    assert!(ours + 1e-15 >= prev);
                    prev = ours;
                }
            }
        }
    }

    #[test]
    fn harmonic_values() {
        assert_eq!(harmonic(1), 1.0);
        assert_eq!(harmonic(2), 1.5);
        let direct: f64 = (1..=16).map(|l| 1.0 / l as f64).sum();
        assert!((harmonic(16) - direct).abs() < 1e-15);
        assert!((harmonic(16) - 3.380_728_993_228_993).abs() < 1e-12);
        // continuity across the switch to the asymptotic form
        let at = HARMONIC_DIRECT_LIMIT;
        let next = harmonic(at) + 1.0 / (at + 1) as f64;
        assert!((harmonic(at + 1) - next).abs() < 1e-12);
    }
}

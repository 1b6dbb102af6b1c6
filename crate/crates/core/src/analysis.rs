//! Closed-form statistics, rate bounds and feedback-scaling rules.
//!
//! All rates are in bits per user. `n = 2^B` is the codebook size.

use std::f64::consts::LOG2_E;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numerics::special::gamma;
use crate::numerics::{beta_fn, ln_beta};

const LOG2_10_OVER_10: f64 = std::f64::consts::LOG2_10 / 10.0;

/// System dimensions and operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub n_t: usize,
    pub k: usize,
    /// Constellation size.
    pub m: usize,
    /// Feedback bits per user.
    pub bits: u32,
    /// Linear transmit power `P`.
    pub p: f64,
}

impl SystemParams {
    pub fn new(n_t: usize, k: usize, m: usize, bits: u32, p_db: f64) -> Result<Self> {
        let s = SystemParams {
            n_t,
            k,
            m,
            bits,
            p: db_to_linear(p_db),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n_t {
            return Err(Error::domain(format!(
                "need 1 <= K <= n_T, got K={}, n_T={}",
                self.k, self.n_t
            )));
        }
        if self.n_t < 2 {
            return Err(Error::domain("need n_T >= 2"));
        }
        let side = (self.m as f64).sqrt().round() as usize;
        if self.m < 4 || side * side != self.m {
            return Err(Error::domain(format!(
                "M must be a square >= 4, got {}",
                self.m
            )));
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::domain(format!("P must be positive, got {}", self.p)));
        }
        Ok(())
    }

    pub fn p_db(&self) -> f64 {
        10.0 * self.p.log10()
    }

    /// `κ = (M/(M−1))·K`.
    pub fn kappa(&self) -> f64 {
        self.m as f64 / (self.m as f64 - 1.0) * self.k as f64
    }

    /// `c = (K−1)·n_T/(κ·(n_T−1))`.
    pub fn c(&self) -> f64 {
        (self.k as f64 - 1.0) * self.n_t as f64 / (self.kappa() * (self.n_t as f64 - 1.0))
    }

    /// Codebook size `2^B` as a float.
    pub fn codebook_size(&self) -> f64 {
        2f64.powi(self.bits as i32)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Density of `ε_k ~ Beta(K−1, n_T−K)` at `x ∈ (0, 1)`.
pub fn interference_pdf(x: f64, n_t: usize, k: usize) -> Result<f64> {
    if k <= 1 || k >= n_t {
        return Err(Error::domain(format!(
            "interference density is degenerate for K={k}, n_T={n_t}: eps is 0 for K = 1 and 1 for K = n_T"
        )));
    }
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::domain(format!("x must lie in (0, 1), got {x}")));
    }
    let (a, b) = ((k - 1) as f64, (n_t - k) as f64);
    Ok(((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)?).exp())
}

/// `E[−log2 ε_k]` as the finite double sum over `m ∈ [K−1, n_T−2]`,
/// `l ∈ [0, n_T−m−2]` of `(n_T−2)!/(m! l! (n_T−m−2−l)!)·(−1)^l/(m+l)`.
///
/// The alternating sum is accumulated in exact rational arithmetic. Returns 0
/// for `K = n_T` (`ε ≡ 1`); `K = 1` has `ε ≡ 0` and is an error.
pub fn expected_neg_log2_interference(n_t: usize, k: usize) -> Result<f64> {
    if k == 0 || k > n_t {
        return Err(Error::domain(format!(
            "need 1 <= K <= n_T, got K={k}, n_T={n_t}"
        )));
    }
    if k == 1 {
        return Err(Error::domain(
            "K = 1 has no interference term; its logarithm is unbounded",
        ));
    }
    if k == n_t {
        return Ok(0.0);
    }
    let fact = factorials(n_t - 2);
    let mut total = BigRational::zero();
    for m in (k - 1)..=(n_t - 2) {
        for l in 0..=(n_t - m - 2) {
            let coef = &fact[n_t - 2] / (&fact[m] * &fact[l] * &fact[n_t - m - 2 - l]);
            let term = BigRational::new(coef, BigInt::from(m + l));
            if l % 2 == 0 {
                total += term;
            } else {
                total -= term;
            }
        }
    }
    Ok(LOG2_E * to_f64(&total)?)
}

fn factorials(n: usize) -> Vec<BigInt> {
    let mut f = Vec::with_capacity(n + 1);
    f.push(BigInt::one());
    for i in 1..=n {
        let next = &f[i - 1] * BigInt::from(i);
        f.push(next);
    }
    f
}

fn to_f64(r: &BigRational) -> Result<f64> {
    r.to_f64()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::domain("rational value not representable as f64"))
}

fn check_codebook(n_t: usize, n: f64) -> Result<()> {
    if n_t < 2 {
        return Err(Error::domain(format!("need n_T >= 2, got {n_t}")));
    }
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::domain(format!(
            "codebook size must be >= 1, got {n}"
        )));
    }
    Ok(())
}

/// `Σ_{i=1}^{n_T−1} β(n, i/(n_T−1))`, each term in log-gamma space.
pub fn beta_sum(n_t: usize, n: f64) -> Result<f64> {
    check_codebook(n_t, n)?;
    let d = (n_t - 1) as f64;
    (1..n_t).map(|i| beta_fn(n, i as f64 / d)).sum()
}

/// `E[log2 cos²θ] = −(log2 e/(n_T−1))·Σ_{i=1}^{n_T−1} β(n, i/(n_T−1))` under RVQ.
pub fn expected_log2_cos2(n_t: usize, n: f64) -> Result<f64> {
    Ok(-LOG2_E / (n_t as f64 - 1.0) * beta_sum(n_t, n)?)
}

/// The alternating-binomial form `log2 e·Σ_{i=1}^n C(n,i)(−1)^i H_{i(n_T−1)}`,
/// evaluated exactly in rational arithmetic. Cost grows quickly with `n`.
pub fn expected_log2_cos2_binomial(n_t: usize, n: u64) -> Result<f64> {
    check_codebook(n_t, n as f64)?;
    let d = (n_t - 1) as u64;
    let mut harmonic = BigRational::zero();
    let mut upto = 0u64;
    let mut binom = BigInt::one();
    let mut total = BigRational::zero();
    for i in 1..=n {
        // C(n, i) = C(n, i−1)·(n−i+1)/i
        binom = binom * BigInt::from(n - i + 1) / BigInt::from(i);
        while upto < i * d {
            upto += 1;
            harmonic += BigRational::new(BigInt::one(), BigInt::from(upto));
        }
        let term = &harmonic * BigRational::from_integer(binom.clone());
        if i % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    Ok(LOG2_E * to_f64(&total)?)
}

/// Upper bound on the mean per-user rate loss of quantized-CSI TH precoding:
/// `log2(1 + c·P·2^{−B/(n_T−1)}) + (log2 e/(n_T−1))·Σ β(n, i/(n_T−1))`.
pub fn rate_loss_upper_bound(params: &SystemParams) -> Result<f64> {
    params.validate()?;
    let d = params.n_t as f64 - 1.0;
    let first = (params.c() * params.p * 2f64.powf(-(params.bits as f64) / d)).ln_1p() * LOG2_E;
    Ok(first - expected_log2_cos2(params.n_t, params.codebook_size())?)
}

/// Upper bound on the mean per-user rate loss of quantized-CSI ZF precoding:
/// `log2(1 + P·2^{−B/(n_T−1)})`.
pub fn zf_rate_loss_upper_bound(n_t: usize, bits: u32, p: f64) -> Result<f64> {
    if n_t < 2 || !(p > 0.0) {
        return Err(Error::domain("need n_T >= 2 and P > 0"));
    }
    Ok((p * 2f64.powf(-(bits as f64) / (n_t as f64 - 1.0))).ln_1p() * LOG2_E)
}

/// Interference-limited ceiling on the per-user rate of quantized-CSI TH:
/// `log2 e·(Σ_{m,l} … + H_n/(n_T−1))`, the double sum being 0 for `K = n_T`.
pub fn sum_rate_upper_bound(n_t: usize, k: usize, bits: u32) -> Result<f64> {
    if bits > 63 {
        return Err(Error::domain(format!(
            "B = {bits} is too large for an exact harmonic sum"
        )));
    }
    let interference = expected_neg_log2_interference(n_t, k)?;
    let h = crate::numerics::harmonic(1u64 << bits);
    Ok(interference + LOG2_E * h / (n_t as f64 - 1.0))
}

/// Feedback bits that keep the ZF rate loss within `log2 b`:
/// `(n_T−1)(log2 10/10)P_dB − (n_T−1)·log2(b−1)`.
pub fn feedback_scaling_zf(n_t: usize, p_db: f64, b: f64) -> Result<f64> {
    if !(b > 1.0) {
        return Err(Error::domain(format!("gap base b must exceed 1, got {b}")));
    }
    let d = n_t as f64 - 1.0;
    Ok(d * LOG2_10_OVER_10 * p_db - d * (b - 1.0).log2())
}

/// Feedback bits for TH precoding with allowable gap `log2 b`:
/// `(n_T−1)(log2 10/10)P_dB − log2(b − 2^eps − 1) + log2 c`.
pub fn feedback_scaling_th(params: &SystemParams, p_db: f64, b: f64, eps: f64) -> Result<f64> {
    params.validate()?;
    let slack = b - 2f64.powf(eps) - 1.0;
    if !(slack > 0.0) {
        return Err(Error::domain(format!(
            "infeasible gap: b − 2^eps − 1 = {slack} for b={b}, eps={eps}"
        )));
    }
    let c = params.c();
    if !(c > 0.0) {
        return Err(Error::domain("scaling rule needs K > 1 (c > 0)"));
    }
    let d = params.n_t as f64 - 1.0;
    Ok(d * LOG2_10_OVER_10 * p_db - slack.log2() + c.log2())
}

/// Feedback bits at which `log2(1 + cP·2^{−B/(n_T−1)}) + eps = log2 b` holds
/// exactly: `(n_T−1)·log2(cP) − (n_T−1)·log2(b·2^{−eps} − 1)`.
pub fn feedback_scaling_th_inverted(
    params: &SystemParams,
    p_db: f64,
    b: f64,
    eps: f64,
) -> Result<f64> {
    params.validate()?;
    let slack = b * 2f64.powf(-eps) - 1.0;
    if !(slack > 0.0) {
        return Err(Error::domain(format!(
            "infeasible gap: b·2^−eps − 1 = {slack} for b={b}, eps={eps}"
        )));
    }
    let c = params.c();
    if !(c > 0.0) {
        return Err(Error::domain("scaling rule needs K > 1 (c > 0)"));
    }
    let d = params.n_t as f64 - 1.0;
    Ok(d * (c.log2() + LOG2_10_OVER_10 * p_db) - d * slack.log2())
}

/// `Σ_{i=1}^{n_T−1} Γ(i/(n_T−1))·(n − 1/2)^{−i/(n_T−1)}`, a decreasing bound
/// on [`beta_sum`].
pub fn kershaw_j_bound(n_t: usize, n: f64) -> Result<f64> {
    check_codebook(n_t, n)?;
    let d = (n_t - 1) as f64;
    (1..n_t)
        .map(|i| {
            let s = i as f64 / d;
            Ok(gamma(s)? * (n - 0.5).powf(-s))
        })
        .sum()
}

/// `log2(1 + x)` componentwise.
pub fn instantaneous_rates(sinr: &[f64]) -> Vec<f64> {
    sinr.iter().map(|&x| x.ln_1p() * LOG2_E).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{digamma, harmonic};

    /// `β(n, a) = (n−1)!/(a(a+1)⋯(a+n−1))`, accumulated as a running product.
    fn beta_product(n: u64, a: f64) -> f64 {
        let mut v = 1.0 / a;
        for j in 1..n {
            v *= j as f64 / (a + j as f64);
        }
        v
    }

    #[test]
    fn pdf_examples() {
        assert!((interference_pdf(0.5, 4, 2).unwrap() - 1.0).abs() < 1e-14);
        assert!((interference_pdf(0.2, 4, 2).unwrap() - 1.6).abs() < 1e-14);
        assert!(interference_pdf(0.5, 4, 1).is_err());
        assert!(interference_pdf(0.5, 4, 4).is_err());
        assert!(interference_pdf(1.5, 4, 2).is_err());
    }

    #[test]
    fn pdf_normalization_and_mean() {
        for (n_t, k) in [(4, 2), (4, 3), (6, 4), (8, 2)] {
            let n = 200_000;
            let h = 1.0 / n as f64;
            let (mut mass, mut mean) = (0.0, 0.0);
            for i in 0..n {
                let x = (i as f64 + 0.5) * h;
                let f = interference_pdf(x, n_t, k).unwrap();
                mass += f * h;
                mean += x * f * h;
            }
            assert!((mass - 1.0).abs() < 1e-8, "({n_t},{k}) mass {mass}");
            let expect = (k - 1) as f64 / (n_t - 1) as f64;
            assert!((mean - expect).abs() < 1e-8);
        }
    }

    #[test]
    fn interference_log_matches_digamma() {
        let ln2 = std::f64::consts::LN_2;
        assert!(
            (expected_neg_log2_interference(4, 2).unwrap() - 2.164_042_561_333_445).abs() < 1e-12
        );
        assert!((expected_neg_log2_interference(4, 3).unwrap() - 0.5 / ln2).abs() < 1e-12);
        assert_eq!(expected_neg_log2_interference(4, 4).unwrap(), 0.0);
        assert!(expected_neg_log2_interference(4, 1).is_err());
        for n_t in 3..=30 {
            for k in 2..n_t {
                let oracle =
                    (digamma((n_t - 1) as f64).unwrap() - digamma((k - 1) as f64).unwrap()) / ln2;
                let v = expected_neg_log2_interference(n_t, k).unwrap();
                assert!(
                    (v - oracle).abs() < 1e-10 * oracle.max(1.0),
                    "({n_t},{k}): {v} vs {oracle}"
                );
            }
        }
    }

    #[test]
    fn cos2_single_codeword() {
        let v = expected_log2_cos2(4, 1.0).unwrap();
        assert!((v + LOG2_E * harmonic(3)).abs() < 1e-12);
        assert!((v + 2.644_9).abs() < 1e-4);
    }

    #[test]
    fn cos2_two_forms_agree() {
        for n_t in [2, 3, 4, 6] {
            for n in 1..=64u64 {
                let a = expected_log2_cos2(n_t, n as f64).unwrap();
                let b = expected_log2_cos2_binomial(n_t, n).unwrap();
                assert!((a - b).abs() < 1e-8, "n_T={n_t} n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn beta_sum_matches_product_oracle() {
        for n_t in [2, 4, 6] {
            let d = (n_t - 1) as f64;
            for n in [1u64, 2, 16, 1024, 1 << 16] {
                let oracle: f64 = (1..n_t).map(|i| beta_product(n, i as f64 / d)).sum();
                let v = beta_sum(n_t, n as f64).unwrap();
                assert!(((v - oracle) / oracle).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cos2_magnitude_decreases() {
        let mut prev = f64::INFINITY;
        for b in 0..40 {
            let v = expected_log2_cos2(4, 2f64.powi(b)).unwrap().abs();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn system_constants() {
        let s = SystemParams::new(4, 4, 4, 10, 25.0).unwrap();
        assert!((s.kappa() - 16.0 / 3.0).abs() < 1e-15);
        assert!((s.c() - 0.75).abs() < 1e-15);
        assert_eq!(SystemParams::new(4, 1, 4, 1, 0.0).unwrap().c(), 0.0);
        assert!(SystemParams::new(4, 5, 4, 1, 0.0).is_err());
        assert!(SystemParams::new(4, 2, 8, 1, 0.0).is_err());
    }

    #[test]
    fn rate_loss_bound_values() {
        let s = SystemParams::new(4, 1, 4, 6, 20.0).unwrap();
        let v = rate_loss_upper_bound(&s).unwrap();
        assert!((v + expected_log2_cos2(4, 64.0).unwrap()).abs() < 1e-15);

        // independent evaluation: product-form beta and direct powers
        let s = SystemParams::new(4, 4, 4, 10, 25.0).unwrap();
        let p = 10f64.powf(2.5);
        let first = (1.0 + 0.75 * p * 2f64.powf(-10.0 / 3.0)).log2();
        let second: f64 = (1..4)
            .map(|i| beta_product(1024, i as f64 / 3.0))
            .sum::<f64>()
            * LOG2_E
            / 3.0;
        assert!((rate_loss_upper_bound(&s).unwrap() - (first + second)).abs() < 1e-6);
    }

    #[test]
    fn sum_rate_bound_values() {
        let v = sum_rate_upper_bound(4, 4, 4).unwrap();
        assert!((v - LOG2_E * 3.380_728_993_228_993 / 3.0).abs() < 1e-12);
        assert!((v - 1.6258).abs() < 1e-4);
        let v2 = sum_rate_upper_bound(4, 2, 4).unwrap();
        assert!((v2 - v - 2.164_04).abs() < 1e-5);
        for b in 0..20 {
            assert!(
                sum_rate_upper_bound(4, 4, b + 1).unwrap() > sum_rate_upper_bound(4, 4, b).unwrap()
            );
        }
        assert!(sum_rate_upper_bound(4, 1, 4).is_err());
    }

    #[test]
    fn scaling_rules() {
        let slope = std::f64::consts::LOG2_10 / 10.0;
        assert!((feedback_scaling_zf(4, 20.0, 2.0).unwrap() - 3.0 * 20.0 * slope).abs() < 1e-12);
        assert!((feedback_scaling_zf(4, 20.0, 3.0).unwrap() - 16.931_568_569_324_174).abs() < 1e-9);
        assert!(feedback_scaling_zf(4, 20.0, 1.0).is_err());
        let d =
            feedback_scaling_zf(4, 21.0, 2.0).unwrap() - feedback_scaling_zf(4, 20.0, 2.0).unwrap();
        assert!((d - 3.0 * slope).abs() < 1e-12);

        let s = SystemParams::new(4, 4, 4, 0, 20.0).unwrap();
        let b3 = feedback_scaling_th(&s, 20.0, 3.0, 0.0).unwrap();
        assert!((b3 - (3.0 * 20.0 * slope + 0.75f64.log2())).abs() < 1e-12);
        assert!((b3 - 19.5165).abs() < 1e-4);
        assert!(feedback_scaling_th(&s, 20.0, 2.0, 0.0).is_err());
        assert!(feedback_scaling_th(&s, 20.0, 4.0, 0.0).unwrap() < b3);
    }

    #[test]
    fn inverted_scaling_hits_target_gap() {
        let s = SystemParams::new(4, 4, 4, 0, 20.0).unwrap();
        for (p_db, b, eps) in [(20.0, 3.0, 0.0), (35.0, 4.0, 0.25), (10.0, 2.0, 0.5)] {
            let bits = feedback_scaling_th_inverted(&s, p_db, b, eps).unwrap();
            let first = (1.0 + 0.75 * db_to_linear(p_db) * 2f64.powf(-bits / 3.0)).log2();
            assert!((first + eps - b.log2()).abs() < 1e-12);
        }
        assert!(feedback_scaling_th_inverted(&s, 20.0, 1.0, 0.0).is_err());
        assert!(
            feedback_scaling_th_inverted(&s, 20.0, 3.0, 0.0).unwrap()
                < feedback_scaling_th(&s, 20.0, 3.0, 0.0).unwrap()
        );
    }

    #[test]
    fn kershaw_dominates_and_decreases() {
        let mut prev = f64::INFINITY;
        for n in 1..=1024 {
            let k = kershaw_j_bound(4, n as f64).unwrap();
            assert!(k >= beta_sum(4, n as f64).unwrap());
            assert!(k < prev);
            prev = k;
        }
        let expect = gamma(1.0 / 3.0).unwrap() * 15.5f64.powf(-1.0 / 3.0)
            + gamma(2.0 / 3.0).unwrap() * 15.5f64.powf(-2.0 / 3.0)
            + 1.0 / 15.5;
        assert!((kershaw_j_bound(4, 16.0).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn rates() {
        assert_eq!(instantaneous_rates(&[0.0, 1.0, 3.0]), vec![0.0, 1.0, 2.0]);
    }
}

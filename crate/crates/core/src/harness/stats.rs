//! Kolmogorov-Smirnov statistics and Monte Carlo summaries.

use crate::error::{Error, Result};

/// Asymptotic KS coefficient `c(α)` at `α = 0.01`.
pub const KS_C_01: f64 = 1.628;

/// Smallest sample accepted by the KS routines.
pub const MIN_KS_SAMPLES: usize = 50;

fn check_len(n: usize) -> Result<()> {
    if n < MIN_KS_SAMPLES {
        Err(Error::TooFewSamples {
            required: MIN_KS_SAMPLES,
            got: n,
        })
    } else {
        Ok(())
    }
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::domain("KS samples contain NaN"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// One-sample statistic `sup_x |F_n(x) − F(x)|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    check_len(samples.len())?;
    let s = sorted(samples)?;
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Two-sample statistic `sup_x |F_a(x) − F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a.len())?;
    check_len(b.len())?;
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample critical value at the 1% level: `1.628/√n`.
pub fn ks_critical(n: usize) -> f64 {
    KS_C_01 / (n as f64).sqrt()
}

/// Two-sample critical value at the 1% level: `1.628·√((n+m)/(n·m))`.
pub fn ks_critical_two(n: usize, m: usize) -> f64 {
    KS_C_01 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Running mean and standard error, accumulated in call order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    count: usize,
    sum: f64,
    sum_sq: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Sample standard deviation over `√count`.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

impl FromIterator<f64> for Accumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut a = Accumulator::default();
        for x in iter {
            a.push(x);
        }
        a
    }
}

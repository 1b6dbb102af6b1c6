//! Self-validation suite: Monte Carlo checks of every closed-form result.
//!
//! Each check yields one report line `check_name,statistic,threshold,verdict`.
//! A check passes when `statistic <= threshold` unless noted otherwise in its
//! name (`*_min` checks pass when `statistic >= threshold`).

use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use super::config::{ExperimentConfig, Scaling, ScalingRule, Scheme};
use super::stats::{ks_critical, ks_critical_two, ks_statistic, ks_two_sample, Accumulator};
use super::sweep::{
    channel_rng, db_gap, paired_difference, quantizer_rng, run_scaled_feedback, run_sweep,
    stream_rng,
};
use crate::analysis::{
    beta_sum, db_to_linear, expected_log2_cos2, expected_log2_cos2_binomial,
    expected_neg_log2_interference, kershaw_j_bound, rate_loss_upper_bound, sum_rate_upper_bound,
    zf_rate_loss_upper_bound, SystemParams,
};
use crate::channel::draw_channels;
use crate::error::Result;
use crate::numerics::{lq_decompose, regularized_incomplete_beta};
use crate::precoding::{
    build_perfect, detect, interference_factors, th_encode, transmit_receive, transmit_signal,
    Constellation,
};
use crate::quantization::{CodebookMode, QuantizedCsi, RvqMethod, RvqScheme};

const TAG_LOOPBACK: u64 = 0x6c6f_6f70;
const TAG_EPS: u64 = 0x6570_7331;
const TAG_RHO: u64 = 0x7268_6f32;
const TAG_POWER: u64 = 0x706f_7733;
const POWER_FRAMES: u64 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `statistic <= threshold`.
    pub fn at_most(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            statistic,
            threshold,
            pass: statistic <= threshold,
        }
    }

    /// Passes when `statistic >= threshold`.
    pub fn at_least(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            statistic,
            threshold,
            pass: statistic >= threshold,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.name,
            self.statistic,
            self.threshold,
            if self.pass { "pass" } else { "fail" }
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut s = String::from("check_name,statistic,threshold,verdict\n");
        for c in &self.checks {
            s.push_str(&c.to_string());
            s.push('\n');
        }
        s
    }
}

/// Sample sizes of the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// A few seconds; small samples.
    Quick,
    /// Sample sizes of the published acceptance checks.
    Full,
}

#[derive(Debug, Clone, Copy)]
struct Sizes {
    loopback: usize,
    ks: usize,
    moments: usize,
    rates: usize,
    fig2: usize,
}

impl Scale {
    fn sizes(self) -> Sizes {
        match self {
            Scale::Quick => Sizes {
                loopback: 1_000,
                ks: 2_000,
                moments: 50_000,
                rates: 1_000,
                fig2: 500,
            },
            Scale::Full => Sizes {
                loopback: 10_000,
                ks: 20_000,
                moments: 100_000,
                rates: 10_000,
                fig2: 10_000,
            },
        }
    }
}

/// Noise-free perfect-CSI loopback; returns the largest pre-slicer residual
/// `|y − v|` and the number of symbol errors.
pub fn loopback(seed: u64, n_t: usize, k: usize, m: usize, trials: usize) -> Result<(f64, usize)> {
    let con = Constellation::new(m)?;
    let zero = vec![Complex64::new(0.0, 0.0); k];
    let mut worst: f64 = 0.0;
    let mut errors = 0;
    for t in 0..trials as u64 {
        let mut rng = stream_rng(seed, TAG_LOOPBACK + (n_t * 16 + k) as u64, t);
        let ch = draw_channels(&mut rng, n_t, k)?;
        let p = db_to_linear(rng.random_range(-10.0..40.0));
        let pre = build_perfect(&ch, &con, p)?;
        let s = con.random_symbols(&mut rng, k);
        let (x, v) = th_encode(&s, &pre, &con)?;
        let y = transmit_receive(&ch, &pre, &x, &zero)?;
        worst = y
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).norm())
            .fold(worst, f64::max);
        errors += detect(&y, &con)
            .iter()
            .zip(&s)
            .filter(|(a, b)| a != b)
            .count();
    }
    Ok((worst, errors))
}

/// Interference factors `ε` of all users for `trials` independent draws, with
/// `B`-bit per-user RVQ feedback. When `perm` is given, `Ĥ`'s rows are
/// reordered before factorization and `ε` is reported in the new order.
pub fn eps_samples(
    seed: u64,
    n_t: usize,
    k: usize,
    bits: u32,
    trials: usize,
    perm: Option<&[usize]>,
) -> Result<Vec<Vec<f64>>> {
    let scheme = RvqScheme {
        bits,
        mode: CodebookMode::PerUser,
        method: RvqMethod::DEFAULT_AUTO,
    };
    (0..trials as u64)
        .map(|t| {
            let mut rng = stream_rng(seed, TAG_EPS + (n_t * 16 + k) as u64, t);
            let ch = draw_channels(&mut rng, n_t, k)?;
            let mut q = scheme.quantize(&mut rng, &ch)?;
            if let Some(p) = perm {
                q = QuantizedCsi {
                    entries: p.iter().map(|&i| q.entries[i].clone()).collect(),
                };
            }
            let f = lq_decompose(&q.hhat_matrix())?;
            Ok(interference_factors(&q, &f))
        })
        .collect()
}

/// One `ε` per trial, taken from user `t mod K`, so the samples are independent.
pub fn rotating_eps(samples: &[Vec<f64>]) -> Vec<f64> {
    samples
        .iter()
        .enumerate()
        .map(|(t, e)| e[t % e.len()])
        .collect()
}

fn eps_law_checks(seed: u64, n: usize, out: &mut Vec<Check>) -> Result<()> {
    for (n_t, k) in [(4, 2), (4, 3), (6, 4)] {
        let s = eps_samples(seed, n_t, k, 4, n, None)?;
        let xs = rotating_eps(&s);
        let (a, b) = ((k - 1) as u32, (n_t - k) as u32);
        let d = ks_statistic(&xs, |x| {
            regularized_incomplete_beta(x.clamp(0.0, 1.0), a, b).unwrap_or(f64::NAN)
        })?;
        out.push(Check::at_most(
            format!("eps_beta_ks_nt{n_t}_k{k}"),
            d,
            ks_critical(xs.len()),
        ));
        let half = n / 2;
        let first: Vec<f64> = s[..half].iter().map(|e| e[0]).collect();
        let last: Vec<f64> = s[half..].iter().map(|e| e[k - 1]).collect();
        let d2 = ks_two_sample(&first, &last)?;
        out.push(Check::at_most(
            format!("eps_same_law_nt{n_t}_k{k}"),
            d2,
            ks_critical_two(first.len(), last.len()),
        ));
    }
    let full = eps_samples(seed, 4, 4, 4, n / 10, None)?;
    let dev = full
        .iter()
        .flatten()
        .map(|e| (e - 1.0).abs())
        .fold(0.0, f64::max);
    out.push(Check::at_most("full_load_eps_is_one", dev, 0.0));

    // permutation invariance: ε of the first row before and after reversing Ĥ
    let (n_t, k) = (4, 3);
    let half = n / 2;
    let rev: Vec<usize> = (0..k).rev().collect();
    let plain = eps_samples(seed, n_t, k, 4, half, None)?;
    let permuted = eps_samples(seed ^ 0x5a5a, n_t, k, 4, half, Some(&rev))?;
    let a: Vec<f64> = plain.iter().map(|e| e[0]).collect();
    let b: Vec<f64> = permuted.iter().map(|e| e[0]).collect();
    out.push(Check::at_most(
        "eps_permutation_invariance",
        ks_two_sample(&a, &b)?,
        ks_critical_two(a.len(), b.len()),
    ));
    Ok(())
}

fn eps_moment_checks(seed: u64, n: usize, out: &mut Vec<Check>) -> Result<()> {
    for (n_t, k) in [(4, 2), (4, 3), (6, 4)] {
        let xs = rotating_eps(&eps_samples(seed ^ 0x1111, n_t, k, 4, n, None)?);
        let mc: Accumulator = xs.iter().map(|e| -e.log2()).collect();
        let exact = expected_neg_log2_interference(n_t, k)?;
        out.push(Check::at_most(
            format!("neg_log2_eps_rel_err_nt{n_t}_k{k}"),
            ((mc.mean() - exact) / exact).abs(),
            0.01,
        ));
    }
    Ok(())
}

fn cos2_checks(seed: u64, n: usize, out: &mut Vec<Check>) -> Result<()> {
    let mut worst: f64 = 0.0;
    for n_t in [2, 3, 4, 6] {
        for cb in 1..=64u64 {
            let a = expected_log2_cos2(n_t, cb as f64)?;
            let b = expected_log2_cos2_binomial(n_t, cb)?;
            worst = worst.max((a - b).abs());
        }
    }
    out.push(Check::at_most("cos2_two_forms_max_diff", worst, 1e-8));
    for bits in [2, 4, 6] {
        let scheme = RvqScheme {
            bits,
            mode: CodebookMode::PerUser,
            method: RvqMethod::Explicit,
        };
        let mut acc = Accumulator::default();
        for t in 0..n as u64 {
            let ch = draw_channels(&mut channel_rng(seed ^ 0x2222, t), 4, 1)?;
            let q = scheme.quantize(&mut quantizer_rng(seed ^ 0x2222, bits, t), &ch)?;
            acc.push(q.entries[0].cos2.log2());
        }
        let exact = expected_log2_cos2(4, 2f64.powi(bits as i32))?;
        out.push(Check::at_most(
            format!("rvq_log2_cos2_rel_err_b{bits}"),
            ((acc.mean() - exact) / exact).abs(),
            0.02,
        ));
    }
    Ok(())
}

fn channel_checks(seed: u64, n: usize, out: &mut Vec<Check>) -> Result<()> {
    let n_t = 4;
    let mut rho2 = Vec::with_capacity(n);
    for t in 0..n as u64 {
        rho2.push(draw_channels(&mut stream_rng(seed, TAG_RHO, t), n_t, 1)?.rho[0].powi(2));
    }
    // ρ² ~ Gamma(n_T, 1): F(x) = 1 − e^{−x} Σ_{j<n_T} x^j/j!
    let cdf = |x: f64| {
        let (mut term, mut sum) = (1.0, 1.0);
        for j in 1..n_t {
            term *= x / j as f64;
            sum += term;
        }
        1.0 - (-x).exp() * sum
    };
    out.push(Check::at_most(
        "rho2_gamma_ks",
        ks_statistic(&rho2, cdf)?,
        ks_critical(n),
    ));

    let con = Constellation::new(64)?;
    let p = 10.0;
    let mut acc = Accumulator::default();
    for t in 0..POWER_FRAMES {
        let mut rng = stream_rng(seed, TAG_POWER, t);
        let ch = draw_channels(&mut rng, 4, 4)?;
        let pre = build_perfect(&ch, &con, p)?;
        let (x, _) = th_encode(&con.random_symbols(&mut rng, 4), &pre, &con)?;
        acc.push(
            transmit_signal(&pre, &x)?
                .iter()
                .map(|z| z.norm_sqr())
                .sum(),
        );
    }
    out.push(Check::at_most(
        "transmit_power_rel_err_m64",
        (acc.mean() / p - 1.0).abs(),
        0.02,
    ));
    Ok(())
}

fn base_config(seed: u64, trials: usize) -> ExperimentConfig {
    ExperimentConfig {
        seed,
        trials,
        ..ExperimentConfig::default()
    }
}

fn th_rate_checks(seed: u64, n: usize, out: &mut Vec<Check>) -> Result<()> {
    let mut cfg = base_config(seed, n);
    cfg.snr_db = vec![15.0, 25.0];
    cfg.bits = vec![4, 8, 10, 12, 14];
    cfg.schemes = vec![Scheme::ThPerfect, Scheme::ThQuantized];
    let r = run_sweep(&cfg)?;
    let mut gaps = Vec::new();
    for &p_db in &cfg.snr_db {
        for &bits in &cfg.bits {
            let loss = paired_difference(
                r.cell(Scheme::ThPerfect, p_db, None).expect("cell"),
                r.cell(Scheme::ThQuantized, p_db, Some(bits)).expect("cell"),
            )?;
            let bound = rate_loss_upper_bound(&SystemParams::new(4, 4, 4, bits, p_db)?)?;
            if [4, 8, 12].contains(&bits) {
                out.push(Check::at_most(
                    format!("th_loss_vs_bound_p{p_db}_b{bits}"),
                    loss.mean() - 3.0 * loss.stderr(),
                    bound,
                ));
            }
            if p_db == 25.0 && bits >= 8 {
                gaps.push(bound - loss.mean());
            }
        }
    }
    let worst_step = gaps
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    out.push(Check::at_most("th_bound_gap_max_step", worst_step, 0.0));

    let mut cfg = base_config(seed, n);
    cfg.snr_db = vec![30.0, 40.0];
    cfg.bits = vec![4];
    cfg.schemes = vec![Scheme::ThQuantized];
    let r = run_sweep(&cfg)?;
    let at40 = r.cell(Scheme::ThQuantized, 40.0, Some(4)).expect("cell");
    let at30 = r.cell(Scheme::ThQuantized, 30.0, Some(4)).expect("cell");
    out.push(Check::at_most(
        "th_rate_ceiling_p40_b4",
        at40.mean() - 3.0 * at40.stderr(),
        sum_rate_upper_bound(4, 4, 4)?,
    ));
    out.push(Check::at_most(
        "th_saturation_30_to_40",
        at40.mean() - at30.mean(),
        0.15,
    ));
    Ok(())
}

fn zf_checks(seed: u64, n: usize, out: &mut Vec<Check>) -> Result<()> {
    let mut cfg = base_config(seed, n);
    cfg.snr_db = vec![25.0];
    cfg.bits = (2..=16).collect();
    let r = run_sweep(&cfg)?;
    let p = db_to_linear(25.0);
    for bits in 2..=16 {
        let zf = paired_difference(
            r.cell(Scheme::ZfPerfect, 25.0, None).expect("cell"),
            r.cell(Scheme::ZfQuantized, 25.0, Some(bits)).expect("cell"),
        )?;
        out.push(Check::at_most(
            format!("zf_loss_bound_b{bits}"),
            zf.mean() - 3.0 * zf.stderr(),
            zf_rate_loss_upper_bound(4, bits, p)?,
        ));
        if bits <= 12 {
            let th = paired_difference(
                r.cell(Scheme::ThPerfect, 25.0, None).expect("cell"),
                r.cell(Scheme::ThQuantized, 25.0, Some(bits)).expect("cell"),
            )?;
            out.push(Check::at_least(
                format!("th_minus_zf_loss_min_b{bits}"),
                th.mean() - zf.mean(),
                0.0,
            ));
        }
    }
    Ok(())
}

/// High-SNR horizontal gap (mean over `P_dB >= 30`) and the largest
/// `rate gap − 3σ` over the grid, for scaled feedback.
pub fn fig2_gap(
    seed: u64,
    trials: usize,
    scaling: Scaling,
    workers: Option<usize>,
) -> Result<(f64, f64)> {
    let mut cfg = base_config(seed, trials);
    cfg.scaling = Some(scaling);
    cfg.workers = workers;
    let r = run_scaled_feedback(&cfg)?;
    let curves = r.curves()?;
    let perfect: Vec<(f64, f64)> = curves.iter().map(|c| (c.0, c.1)).collect();
    let gaps: Vec<f64> = curves
        .iter()
        .filter(|c| c.0 >= 30.0)
        .filter_map(|c| db_gap(&perfect, c.0, c.2))
        .collect();
    let db = if gaps.is_empty() {
        f64::NAN
    } else {
        gaps.iter().sum::<f64>() / gaps.len() as f64
    };
    let worst = curves
        .iter()
        .map(|c| c.3.mean() - 3.0 * c.3.stderr())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((db, worst))
}

fn fig2_checks(seed: u64, n: usize, out: &mut Vec<Check>) -> Result<()> {
    for (rule, prefix) in [
        (ScalingRule::Printed, "fig2"),
        (ScalingRule::Inverted, "fig2_inverted"),
    ] {
        for (b, target) in [(3.0, 4.0), (4.0, 5.5)] {
            let scaling = Scaling {
                rule,
                ..Scaling::new(b, 0.0)
            };
            let (db, worst) = fig2_gap(seed, n, scaling, None)?;
            out.push(Check::at_most(
                format!("{prefix}_db_gap_dev_b{b}"),
                (db - target).abs(),
                1.5,
            ));
            out.push(Check::at_most(
                format!("{prefix}_rate_gap_b{b}"),
                worst,
                f64::log2(b),
            ));
        }
    }
    Ok(())
}

fn kershaw_checks(out: &mut Vec<Check>) -> Result<()> {
    let mut margin = f64::INFINITY;
    let mut step = f64::NEG_INFINITY;
    let mut prev = f64::INFINITY;
    for cb in 1..=1024 {
        let k = kershaw_j_bound(4, cb as f64)?;
        margin = margin.min(k - beta_sum(4, cb as f64)?);
        step = step.max(k - prev);
        prev = k;
    }
    out.push(Check::at_least("kershaw_dominance_min_margin", margin, 0.0));
    out.push(Check::at_most("kershaw_max_step", step, 0.0));
    Ok(())
}

/// Runs every check at the given scale.
pub fn run_validation(seed: u64, scale: Scale) -> Result<ValidationReport> {
    let n = scale.sizes();
    let mut checks = Vec::new();
    for (n_t, k) in [(2, 1), (2, 2), (4, 2), (4, 3), (4, 4)] {
        let (res, errs) = loopback(seed, n_t, k, 4, n.loopback)?;
        checks.push(Check::at_most(
            format!("loopback_residual_nt{n_t}_k{k}"),
            res,
            1e-9,
        ));
        checks.push(Check::at_most(
            format!("loopback_symbol_errors_nt{n_t}_k{k}"),
            errs as f64,
            0.0,
        ));
    }
    eps_law_checks(seed, n.ks, &mut checks)?;
    eps_moment_checks(seed, n.moments, &mut checks)?;
    cos2_checks(seed, n.moments, &mut checks)?;
    channel_checks(seed, n.ks, &mut checks)?;
    th_rate_checks(seed, n.rates, &mut checks)?;
    zf_checks(seed, n.rates, &mut checks)?;
    fig2_checks(seed, n.fig2, &mut checks)?;
    kershaw_checks(&mut checks)?;
    Ok(ValidationReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_format() {
        let r = ValidationReport {
            checks: vec![
                Check::at_most("a", 0.5, 1.0),
                Check::at_least("b_min", -1.0, 0.0),
            ],
        };
        assert_eq!(
            r.render(),
            "check_name,statistic,threshold,verdict\na,0.5,1,pass\nb_min,-1,0,fail\n"
        );
        assert!(!r.passed());
    }

    #[test]
    fn loopback_small() {
        let (res, errs) = loopback(1, 4, 3, 16, 200).unwrap();
        assert!(res < 1e-9);
        assert_eq!(errs, 0);
    }

    #[test]
    fn full_load_eps() {
        let s = eps_samples(1, 4, 4, 3, 20, None).unwrap();
        assert!(s.iter().flatten().all(|&e| e == 1.0));
    }

    #[test]
    fn kershaw_suite_passes() {
        let mut v = Vec::new();
        kershaw_checks(&mut v).unwrap();
        assert!(v.iter().all(|c| c.pass));
    }
}

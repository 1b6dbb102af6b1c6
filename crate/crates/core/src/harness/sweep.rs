//! The Monte Carlo engine.
//!
//! Each trial draws one channel realization shared by every scheme, codebook
//! size and SNR point (common random numbers). Trial `t` reads its channel from
//! stream `t` of a generator keyed by the seed, and the quantizer for `B` bits
//! from stream `t` of a generator keyed by the seed and `B`, so a cell's result
//! does not depend on which other cells are simulated or on the worker count.
//! Trials may run in parallel; their results are reduced in trial order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, Scaling, ScalingRule, Scheme};
use super::csv::RateRecord;
use super::stats::Accumulator;
use crate::analysis::{
    db_to_linear, feedback_scaling_th, feedback_scaling_th_inverted, instantaneous_rates,
    SystemParams,
};
use crate::channel::{draw_channels, ChannelSet};
use crate::error::{Error, Result};
use crate::numerics::{lq_decompose, LqFactors};
use crate::precoding::{
    build_zf, perfect_terms, quantized_terms, zf_terms, Constellation, SinrTerms,
};
use crate::quantization::{QuantizedCsi, RvqScheme};

const TAG_CHANNEL: u64 = 0x6368_616e;
const TAG_QUANT: u64 = 0x7175_616e;
/// Consecutive rank failures tolerated before a trial is abandoned.
const MAX_RESAMPLES: usize = 1_000;

/// SplitMix64 finalizer, used to derive independent generator keys.
pub fn mix(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for trial `trial` of the stream family `(seed, tag)`.
pub fn stream_rng(seed: u64, tag: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, tag));
    rng.set_stream(trial);
    rng
}

/// Channel generator for one trial.
pub fn channel_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    stream_rng(seed, TAG_CHANNEL, trial)
}

/// Quantizer generator for one trial and codebook size.
pub fn quantizer_rng(seed: u64, bits: u32, trial: u64) -> ChaCha8Rng {
    stream_rng(seed, TAG_QUANT.wrapping_add(u64::from(bits) << 32), trial)
}

/// Runs `f` on a pool of `workers` threads (all cores when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w);
    }
    let pool = b
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Aggregated rates of one (scheme, SNR, B) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub scheme: Scheme,
    pub p_db: f64,
    /// `None` for perfect-CSI schemes.
    pub bits: Option<u32>,
    pub users: Vec<Accumulator>,
    /// Across-user mean rate, per trial.
    pub aggregate: Accumulator,
    pub trial_means: Vec<f64>,
    /// Trials whose quantized channel was redrawn at least once because `Ĥ` was rank deficient.
    pub resampled: usize,
}

impl CellResult {
    pub fn mean(&self) -> f64 {
        self.aggregate.mean()
    }

    pub fn stderr(&self) -> f64 {
        self.aggregate.stderr()
    }

    /// CSV rows: one per user, then the across-user aggregate.
    pub fn records(&self) -> Vec<RateRecord> {
        let base = |user_index: Option<usize>, acc: &Accumulator| RateRecord {
            scheme: self.scheme,
            p_db: self.p_db,
            bits: self.bits,
            user_index,
            mean_rate_bits: acc.mean(),
            stderr: acc.stderr(),
            trials: acc.count(),
            resampled: self.resampled,
        };
        let mut v: Vec<RateRecord> = self
            .users
            .iter()
            .enumerate()
            .map(|(k, a)| base(Some(k), a))
            .collect();
        v.push(base(None, &self.aggregate));
        v
    }
}

/// Paired per-trial difference `a − b` of across-user mean rates.
pub fn paired_difference(a: &CellResult, b: &CellResult) -> Result<Accumulator> {
    if a.trial_means.len() != b.trial_means.len() {
        return Err(Error::dim("cells were simulated over different trials"));
    }
    Ok(a.trial_means
        .iter()
        .zip(&b.trial_means)
        .map(|(x, y)| x - y)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub trials: usize,
    pub cells: Vec<CellResult>,
}

impl SweepResult {
    pub fn cell(&self, scheme: Scheme, p_db: f64, bits: Option<u32>) -> Option<&CellResult> {
        self.cells.iter().find(|c| {
            c.scheme == scheme && c.p_db == p_db && (!scheme.is_quantized() || c.bits == bits)
        })
    }

    pub fn records(&self) -> Vec<RateRecord> {
        self.cells.iter().flat_map(CellResult::records).collect()
    }

    /// Total trials redrawn for codebook `bits`.
    pub fn resampled(&self, bits: u32) -> usize {
        self.cells
            .iter()
            .find(|c| c.bits == Some(bits))
            .map_or(0, |c| c.resampled)
    }
}

/// Which cells to simulate: every perfect scheme at every SNR, and each
/// quantized codebook size at a subset of the SNR points.
#[derive(Debug, Clone)]
struct Plan {
    snr_db: Vec<f64>,
    perfect: Vec<Scheme>,
    quantized: Vec<Scheme>,
    /// `(B, indices into snr_db)`.
    codebooks: Vec<(u32, Vec<usize>)>,
}

struct TrialOut {
    /// `[scheme][snr][user]`.
    perfect: Vec<Vec<Vec<f64>>>,
    /// `[codebook][scheme][snr in plan][user]` and the resample count per codebook.
    quantized: Vec<(Vec<Vec<Vec<f64>>>, usize)>,
}

fn rates_on(terms: &SinrTerms, snr_db: &[f64], idx: impl Iterator<Item = usize>) -> Vec<Vec<f64>> {
    idx.map(|i| instantaneous_rates(&terms.at(db_to_linear(snr_db[i]))))
        .collect()
}

fn factor_channel(rng: &mut ChaCha8Rng, cfg: &ExperimentConfig) -> Result<(ChannelSet, LqFactors)> {
    loop {
        let ch = draw_channels(rng, cfg.n_t, cfg.k)?;
        match lq_decompose(&ch.h) {
            Ok(f) => return Ok((ch, f)),
            Err(Error::DegenerateChannel { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Quantizes until `Ĥ` has full rank; returns the CSI, its factors and the
/// number of rejected draws.
pub fn quantize_full_rank(
    rng: &mut ChaCha8Rng,
    scheme: &RvqScheme,
    channels: &ChannelSet,
) -> Result<(QuantizedCsi, LqFactors, usize)> {
    let mut rejected = 0;
    loop {
        let q = scheme.quantize(rng, channels)?;
        match lq_decompose(&q.hhat_matrix()) {
            Ok(f) => return Ok((q, f, rejected)),
            Err(Error::DegenerateChannel { .. }) if rejected < MAX_RESAMPLES => rejected += 1,
            Err(e) => return Err(e),
        }
    }
}

fn run_trial(cfg: &ExperimentConfig, plan: &Plan, kappa: f64, trial: u64) -> Result<TrialOut> {
    let (ch, factors) = factor_channel(&mut channel_rng(cfg.seed, trial), cfg)?;
    let all = 0..plan.snr_db.len();
    let perfect = plan
        .perfect
        .iter()
        .map(|s| {
            let terms = match s {
                Scheme::ThPerfect => perfect_terms(&factors, kappa),
                _ => zf_terms(&ch, &build_zf(&ch.h)?)?,
            };
            Ok(rates_on(&terms, &plan.snr_db, all.clone()))
        })
        .collect::<Result<_>>()?;

    let mut quantized = Vec::with_capacity(plan.codebooks.len());
    for (bits, idx) in &plan.codebooks {
        let scheme = RvqScheme {
            bits: *bits,
            mode: cfg.codebook,
            method: cfg.rvq,
        };
        let mut rng = quantizer_rng(cfg.seed, *bits, trial);
        let (q, qf, rejected) = quantize_full_rank(&mut rng, &scheme, &ch)?;
        let per_scheme = plan
            .quantized
            .iter()
            .map(|s| {
                let terms = match s {
                    Scheme::ThQuantized => quantized_terms(&ch, &q, &qf, kappa).terms,
                    _ => zf_terms(&ch, &build_zf(&q.hhat_matrix())?)?,
                };
                Ok(rates_on(&terms, &plan.snr_db, idx.iter().copied()))
            })
            .collect::<Result<_>>()?;
        quantized.push((per_scheme, rejected));
    }
    Ok(TrialOut { perfect, quantized })
}

fn new_cell(scheme: Scheme, p_db: f64, bits: Option<u32>, k: usize, trials: usize) -> CellResult {
    CellResult {
        scheme,
        p_db,
        bits,
        users: vec![Accumulator::default(); k],
        aggregate: Accumulator::default(),
        trial_means: Vec::with_capacity(trials),
        resampled: 0,
    }
}

fn push(cell: &mut CellResult, rates: &[f64]) {
    for (acc, &r) in cell.users.iter_mut().zip(rates) {
        acc.push(r);
    }
    let m = rates.iter().sum::<f64>() / rates.len() as f64;
    cell.aggregate.push(m);
    cell.trial_means.push(m);
}

fn execute(cfg: &ExperimentConfig, plan: &Plan) -> Result<SweepResult> {
    cfg.validate()?;
    let kappa = Constellation::new(cfg.m)?.kappa(cfg.k);
    let outs: Vec<TrialOut> = with_workers(cfg.workers, || {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(cfg, plan, kappa, t))
            .collect::<Result<Vec<_>>>()
    })??;

    let mut perfect: Vec<Vec<CellResult>> = plan
        .perfect
        .iter()
        .map(|&s| {
            plan.snr_db
                .iter()
                .map(|&p| new_cell(s, p, None, cfg.k, cfg.trials))
                .collect()
        })
        .collect();
    let mut quantized: Vec<Vec<Vec<CellResult>>> = plan
        .codebooks
        .iter()
        .map(|(bits, idx)| {
            plan.quantized
                .iter()
                .map(|&s| {
                    idx.iter()
                        .map(|&i| new_cell(s, plan.snr_db[i], Some(*bits), cfg.k, cfg.trials))
                        .collect()
                })
                .collect()
        })
        .collect();

    for out in &outs {
        for (cells, rates) in perfect.iter_mut().zip(&out.perfect) {
            for (cell, r) in cells.iter_mut().zip(rates) {
                push(cell, r);
            }
        }
        for (per_cb, (rates_cb, rejected)) in quantized.iter_mut().zip(&out.quantized) {
            for (cells, rates) in per_cb.iter_mut().zip(rates_cb) {
                for (cell, r) in cells.iter_mut().zip(rates) {
                    push(cell, r);
                    cell.resampled += usize::from(*rejected > 0);
                }
            }
        }
    }

    // output order follows the configured scheme order
    let mut cells = Vec::new();
    for &s in &cfg.schemes {
        if let Some(i) = plan.perfect.iter().position(|&x| x == s) {
            cells.append(&mut perfect[i]);
        }
        if let Some(i) = plan.quantized.iter().position(|&x| x == s) {
            for per_cb in quantized.iter_mut() {
                cells.append(&mut per_cb[i]);
            }
        }
    }
    Ok(SweepResult {
        trials: cfg.trials,
        cells,
    })
}

fn split_schemes(schemes: &[Scheme]) -> (Vec<Scheme>, Vec<Scheme>) {
    schemes.iter().partition(|s| !s.is_quantized())
}

/// Simulates every configured scheme at every SNR point and, for quantized
/// schemes, every codebook size.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let (perfect, quantized) = split_schemes(&cfg.schemes);
    let codebooks = if quantized.is_empty() {
        Vec::new()
    } else {
        cfg.bits
            .iter()
            .map(|&b| (b, (0..cfg.snr_db.len()).collect()))
            .collect()
    };
    execute(
        cfg,
        &Plan {
            snr_db: cfg.snr_db.clone(),
            perfect,
            quantized,
            codebooks,
        },
    )
}

/// Result of a sweep in which the feedback size follows the SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledResult {
    pub sweep: SweepResult,
    /// Feedback bits used at each SNR point.
    pub bits: Vec<u32>,
}

impl ScaledResult {
    /// `(P_dB, perfect rate, quantized rate, paired rate gap)` per SNR point.
    pub fn curves(&self) -> Result<Vec<(f64, f64, f64, Accumulator)>> {
        let mut v = Vec::new();
        for (p, b) in self
            .sweep
            .cells
            .iter()
            .filter(|c| c.scheme == Scheme::ThPerfect)
            .map(|c| c.p_db)
            .zip(&self.bits)
        {
            let perf = self
                .sweep
                .cell(Scheme::ThPerfect, p, None)
                .expect("perfect cell");
            let quant = self
                .sweep
                .cell(Scheme::ThQuantized, p, Some(*b))
                .expect("quantized cell");
            v.push((
                p,
                perf.mean(),
                quant.mean(),
                paired_difference(perf, quant)?,
            ));
        }
        Ok(v)
    }
}

/// Feedback bits prescribed at `p_db`: the scaling rule rounded up, at least 0.
pub fn scaled_bits(cfg: &ExperimentConfig, p_db: f64, s: Scaling) -> Result<u32> {
    let params = SystemParams::new(cfg.n_t, cfg.k, cfg.m, 0, p_db)?;
    let raw = match s.rule {
        ScalingRule::Printed => feedback_scaling_th(&params, p_db, s.b, s.eps)?,
        ScalingRule::Inverted => feedback_scaling_th_inverted(&params, p_db, s.b, s.eps)?,
    };
    Ok(raw.ceil().max(0.0) as u32)
}

/// TH with perfect CSI against TH with feedback bits scaled with the SNR.
pub fn run_scaled_feedback(cfg: &ExperimentConfig) -> Result<ScaledResult> {
    let s = cfg
        .scaling
        .ok_or_else(|| Error::config("scaled feedback needs b (and optionally eps)"))?;
    let bits: Vec<u32> = cfg
        .snr_db
        .iter()
        .map(|&p| scaled_bits(cfg, p, s))
        .collect::<Result<_>>()?;
    let mut codebooks: Vec<(u32, Vec<usize>)> = Vec::new();
    for (i, &b) in bits.iter().enumerate() {
        match codebooks.iter_mut().find(|(x, _)| *x == b) {
            Some((_, idx)) => idx.push(i),
            None => codebooks.push((b, vec![i])),
        }
    }
    let mut run_cfg = cfg.clone();
    run_cfg.schemes = vec![Scheme::ThPerfect, Scheme::ThQuantized];
    run_cfg.bits = bits.clone();
    let mut sweep = execute(
        &run_cfg,
        &Plan {
            snr_db: cfg.snr_db.clone(),
            perfect: vec![Scheme::ThPerfect],
            quantized: vec![Scheme::ThQuantized],
            codebooks,
        },
    )?;
    // quantized cells in SNR order
    sweep.cells.sort_by(|a, b| {
        (a.scheme, a.p_db)
            .partial_cmp(&(b.scheme, b.p_db))
            .expect("finite SNR")
    });
    Ok(ScaledResult { sweep, bits })
}

/// Horizontal distance in dB from the point `(p_db, rate)` back to a rising
/// curve `(P_dB, rate)`, interpolated linearly; `None` when `rate` is outside
/// the curve's range.
pub fn db_gap(curve: &[(f64, f64)], p_db: f64, rate: f64) -> Option<f64> {
    curve.windows(2).find_map(|w| {
        let ((p0, r0), (p1, r1)) = (w[0], w[1]);
        if r0 <= rate && rate <= r1 && r1 > r0 {
            Some(p_db - (p0 + (rate - r0) / (r1 - r0) * (p1 - p0)))
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantization::{CodebookMode, RvqMethod};

    fn small(trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            trials,
            snr_db: vec![10.0, 30.0],
            bits: vec![3, 6],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn shapes_and_order() {
        let r = run_sweep(&small(50)).unwrap();
        assert_eq!(r.cells.len(), 2 + 4 + 2 + 4);
        assert_eq!(r.cells[0].scheme, Scheme::ThPerfect);
        assert_eq!(r.cells[2].bits, Some(3));
        assert!(r
            .records()
            .iter()
            .all(|x| x.mean_rate_bits >= 0.0 && x.trials == 50));
        assert_eq!(r.records().len(), r.cells.len() * 5);
    }

    #[test]
    fn independent_of_workers_and_grid() {
        let mut a = small(40);
        a.workers = Some(1);
        let mut b = small(40);
        b.workers = Some(3);
        let ra = run_sweep(&a).unwrap();
        assert_eq!(ra, run_sweep(&b).unwrap());
        let mut c = small(40);
        c.bits = vec![6];
        c.schemes = vec![Scheme::ThQuantized];
        let rc = run_sweep(&c).unwrap();
        let x = ra.cell(Scheme::ThQuantized, 30.0, Some(6)).unwrap();
        let y = rc.cell(Scheme::ThQuantized, 30.0, Some(6)).unwrap();
        assert_eq!(x.trial_means, y.trial_means);
    }

    #[test]
    fn perfect_beats_quantized_on_average() {
        let r = run_sweep(&small(400)).unwrap();
        let p = r.cell(Scheme::ThPerfect, 30.0, None).unwrap();
        let q = r.cell(Scheme::ThQuantized, 30.0, Some(3)).unwrap();
        assert!(paired_difference(p, q).unwrap().mean() > 0.0);
    }

    #[test]
    fn shared_codebook_collisions_are_resampled() {
        let mut c = small(200);
        c.codebook = CodebookMode::Shared;
        c.rvq = RvqMethod::Explicit;
        c.bits = vec![3];
        c.schemes = vec![Scheme::ThQuantized];
        let r = run_sweep(&c).unwrap();
        assert!(r.resampled(3) > 0);
        assert_eq!(r.cells[0].aggregate.count(), 200);
    }

    #[test]
    fn gap_interpolation() {
        let curve = [(0.0, 1.0), (10.0, 2.0), (20.0, 4.0)];
        assert_eq!(db_gap(&curve, 20.0, 3.0), Some(5.0));
        assert_eq!(db_gap(&curve, 12.0, 1.5), Some(7.0));
        assert_eq!(db_gap(&curve, 12.0, 0.5), None);
    }

    #[test]
    fn scaled_bits_follow_rule() {
        let cfg = ExperimentConfig::default();
        assert_eq!(scaled_bits(&cfg, 20.0, Scaling::new(3.0, 0.0)).unwrap(), 20);
        assert_eq!(scaled_bits(&cfg, 0.0, Scaling::new(3.0, 0.0)).unwrap(), 0);
        assert!(scaled_bits(&cfg, 20.0, Scaling::new(2.0, 0.0)).is_err());
        let inverted = Scaling {
            rule: ScalingRule::Inverted,
            ..Scaling::new(3.0, 0.0)
        };
        assert_eq!(scaled_bits(&cfg, 20.0, inverted).unwrap(), 16);
    }
}

//! Random vector quantization (RVQ) of channel directions.
//!
//! Each user picks the codeword maximizing `|h̄ w^H|²` and the true direction
//! is split as `h̄ = c·ĥ + sinθ·h̃` with `|c|² = cos²θ` and `h̃ ⟂ ĥ`.
//!
//! Two ways of producing the quantized direction are offered:
//!
//! - [`RvqMethod::Explicit`] draws the codewords and searches them.
//! - [`RvqMethod::Sampled`] draws the winning codeword directly from its exact
//!   law for a fresh per-user codebook of `n` isotropic vectors: `sin²θ` is the
//!   minimum of `n` i.i.d. `Beta(n_T−1, 1)` variables, and given the angle the
//!   winner is uniform over the vectors at that angle from `h̄`. This makes
//!   codebooks of 2^40 entries cheap to simulate.

use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::numerics::{
    inner, norm, sample_complex_normal, sample_unit_phase, sample_unit_sphere, CMatrix,
};

/// Default cap on explicit codebook size (`n = 2^bits` vectors).
pub const MAX_CODEBOOK_BITS: u32 = 24;

/// Residual norms at or below this mark an exact quantization.
pub const EXACT_TOL: f64 = 1e-10;

/// Largest codebook the sampled method accepts; beyond this `2^B` is no
/// longer a meaningful double.
pub const MAX_SAMPLED_BITS: u32 = 1000;

/// An RVQ codebook of unit-norm row vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    vectors: CMatrix,
}

impl Codebook {
    /// Wraps caller-provided unit vectors (one per row).
    pub fn from_vectors(vectors: CMatrix) -> Result<Self> {
        if vectors.rows() == 0 {
            return Err(Error::EmptyCodebook);
        }
        for i in 0..vectors.rows() {
            let n = norm(vectors.row(i));
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::domain(format!(
                    "codeword {i} has norm {n}, expected 1"
                )));
            }
        }
        Ok(Codebook { vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.rows() == 0
    }

    /// Vector dimension `n_T`.
    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    /// `log2(len)` when the size is a power of two.
    pub fn bits(&self) -> Option<u32> {
        let n = self.len();
        n.is_power_of_two().then(|| n.trailing_zeros())
    }

    pub fn vector(&self, i: usize) -> &[Complex64] {
        self.vectors.row(i)
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }
}

/// Draws `2^bits` isotropic unit vectors in `C^{n_T}`.
pub fn generate_rvq<R: Rng + ?Sized>(rng: &mut R, bits: u32, n_t: usize) -> Result<Codebook> {
    generate_rvq_with_limit(rng, bits, n_t, MAX_CODEBOOK_BITS)
}

/// [`generate_rvq`] with an explicit memory guard.
pub fn generate_rvq_with_limit<R: Rng + ?Sized>(
    rng: &mut R,
    bits: u32,
    n_t: usize,
    limit_bits: u32,
) -> Result<Codebook> {
    if n_t < 2 {
        return Err(Error::dim(format!("RVQ needs n_T >= 2, got {n_t}")));
    }
    if bits > limit_bits {
        return Err(Error::CodebookTooLarge {
            bits,
            limit: limit_bits,
        });
    }
    let n = 1usize << bits;
    let mut data = Vec::with_capacity(n * n_t);
    for _ in 0..n {
        data.extend(sample_unit_sphere(rng, n_t));
    }
    Ok(Codebook {
        vectors: CMatrix::from_vec(n, n_t, data)?,
    })
}

/// Index of the codeword maximizing `|h̄ w_i^H|²`; ties go to the lowest index.
pub fn quantize(hbar: &[Complex64], codebook: &Codebook) -> Result<usize> {
    if codebook.is_empty() {
        return Err(Error::EmptyCodebook);
    }
    if hbar.len() != codebook.dim() {
        return Err(Error::dim(format!(
            "direction of length {} against codebook of dimension {}",
            hbar.len(),
            codebook.dim()
        )));
    }
    let mut best = 0;
    let mut best_gain = f64::NEG_INFINITY;
    for i in 0..codebook.len() {
        let g = inner(hbar, codebook.vector(i)).norm_sqr();
        if g > best_gain {
            best_gain = g;
            best = i;
        }
    }
    Ok(best)
}

/// One user's quantized direction and the exact split of the true direction.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDirection {
    /// Codebook index, when an explicit codebook was searched.
    pub index: Option<usize>,
    /// Selected unit vector `ĥ`.
    pub hhat: Vec<Complex64>,
    /// Complex projection `c = h̄·ĥ^H`; `|c|² = cos²θ`.
    pub coeff: Complex64,
    pub cos2: f64,
    /// `1 − cos2`.
    pub sin2: f64,
    /// Unit residual direction `h̃`; `None` flags an exact quantization.
    pub htilde: Option<Vec<Complex64>>,
}

impl QuantizedDirection {
    pub fn is_exact(&self) -> bool {
        self.htilde.is_none()
    }

    /// `‖c·ĥ + sinθ·h̃ − h̄‖`.
    pub fn reconstruction_error(&self, hbar: &[Complex64]) -> f64 {
        let s = self.sin2.sqrt();
        let err: Vec<Complex64> = (0..hbar.len())
            .map(|j| {
                let resid = self
                    .htilde
                    .as_ref()
                    .map_or(Complex64::new(0.0, 0.0), |t| t[j] * s);
                self.coeff * self.hhat[j] + resid - hbar[j]
            })
            .collect();
        norm(&err)
    }
}

/// Splits `h̄` into its component along `ĥ` and a unit residual direction.
pub fn decompose(hbar: &[Complex64], hhat: &[Complex64]) -> QuantizedDirection {
    let coeff = inner(hbar, hhat);
    let cos2 = coeff.norm_sqr().min(1.0);
    let sin2 = 1.0 - cos2;
    let resid: Vec<Complex64> = hbar.iter().zip(hhat).map(|(h, q)| h - coeff * q).collect();
    let rn = norm(&resid);
    let htilde = (rn > EXACT_TOL).then(|| resid.into_iter().map(|z| z / rn).collect());
    QuantizedDirection {
        index: None,
        hhat: hhat.to_vec(),
        coeff,
        cos2,
        sin2,
        htilde,
    }
}

/// Quantizes `h̄` against a fresh codebook of `2^bits` vectors drawn one at a
/// time. Consumes the RNG exactly as [`generate_rvq`] would, so the result
/// equals `quantize` on the generated codebook.
fn quantize_streaming<R: Rng + ?Sized>(
    rng: &mut R,
    hbar: &[Complex64],
    bits: u32,
) -> QuantizedDirection {
    let n = 1u64 << bits;
    let mut best_gain = f64::NEG_INFINITY;
    let mut best = (0, Vec::new());
    for i in 0..n {
        let w = sample_unit_sphere(rng, hbar.len());
        let g = inner(hbar, &w).norm_sqr();
        if g > best_gain {
            best_gain = g;
            best = (i as usize, w);
        }
    }
    let mut q = decompose(hbar, &best.1);
    q.index = Some(best.0);
    q
}

/// Draws the winning codeword of a fresh `2^bits`-entry RVQ codebook directly.
pub fn sample_rvq_direction<R: Rng + ?Sized>(
    rng: &mut R,
    hbar: &[Complex64],
    bits: u32,
) -> Result<QuantizedDirection> {
    let n_t = hbar.len();
    if n_t < 2 {
        return Err(Error::dim(format!("RVQ needs n_T >= 2, got {n_t}")));
    }
    if bits > MAX_SAMPLED_BITS {
        return Err(Error::CodebookTooLarge {
            bits,
            limit: MAX_SAMPLED_BITS,
        });
    }
    let n = 2f64.powi(bits as i32);
    // P(sin²θ ≤ s) = 1 − (1 − s^{n_T−1})^n, inverted with V = 1 − U ∈ (0, 1].
    let v = 1.0 - rng.random::<f64>();
    let tail = -(v.ln() / n).exp_m1();
    let sin2 = tail.powf(1.0 / (n_t - 1) as f64).clamp(0.0, 1.0);
    let cos2 = 1.0 - sin2;

    // isotropic unit vector orthogonal to h̄
    let u = loop {
        let g: Vec<Complex64> = (0..n_t).map(|_| sample_complex_normal(rng)).collect();
        let p = inner(&g, hbar);
        let r: Vec<Complex64> = g.iter().zip(hbar).map(|(gi, hi)| gi - p * hi).collect();
        let rn = norm(&r);
        if rn > 1e-8 {
            break r.into_iter().map(|z| z / rn).collect::<Vec<_>>();
        }
    };
    let phase = sample_unit_phase(rng) * cos2.sqrt();
    let s = sin2.sqrt();
    let mut hhat: Vec<Complex64> = hbar
        .iter()
        .zip(&u)
        .map(|(h, ui)| phase * h + s * ui)
        .collect();
    let hn = norm(&hhat);
    for z in hhat.iter_mut() {
        *z /= hn;
    }
    Ok(decompose(hbar, &hhat))
}

/// How codebooks are shared among users.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodebookMode {
    /// One codebook per trial, used by every user.
    Shared,
    /// An independent codebook per user and trial.
    PerUser,
}

impl FromStr for CodebookMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "shared" => Ok(CodebookMode::Shared),
            "per_user" | "per-user" => Ok(CodebookMode::PerUser),
            other => Err(Error::config(format!("unknown codebook mode '{other}'"))),
        }
    }
}

/// How the quantized direction is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RvqMethod {
    /// Draw and search the codebook.
    Explicit,
    /// Draw the winner from its exact distribution (per-user codebooks only).
    Sampled,
    /// Explicit up to `explicit_max_bits`, sampled beyond.
    Auto { explicit_max_bits: u32 },
}

impl RvqMethod {
    pub const DEFAULT_AUTO: RvqMethod = RvqMethod::Auto {
        explicit_max_bits: 10,
    };
}

impl FromStr for RvqMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "explicit" => Ok(RvqMethod::Explicit),
            "sampled" => Ok(RvqMethod::Sampled),
            "auto" => Ok(RvqMethod::DEFAULT_AUTO),
            other => Err(Error::config(format!("unknown RVQ method '{other}'"))),
        }
    }
}

/// All users' quantized directions for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedCsi {
    pub entries: Vec<QuantizedDirection>,
}

impl QuantizedCsi {
    /// Stacks the quantized directions as the rows of `Ĥ`.
    pub fn hhat_matrix(&self) -> CMatrix {
        let rows: Vec<&[Complex64]> = self.entries.iter().map(|e| e.hhat.as_slice()).collect();
        CMatrix::from_rows(&rows).expect("quantized directions share one dimension")
    }

    /// Perfect quantization: every user's codeword is its true direction.
    pub fn exact(channels: &ChannelSet) -> Self {
        let entries = (0..channels.users())
            .map(|k| decompose(channels.direction(k), channels.direction(k)))
            .collect();
        QuantizedCsi { entries }
    }

    /// Quantizes every user against one shared codebook.
    pub fn from_codebook(channels: &ChannelSet, codebook: &Codebook) -> Result<Self> {
        let entries = (0..channels.users())
            .map(|k| {
                let hbar = channels.direction(k);
                let i = quantize(hbar, codebook)?;
                let mut q = decompose(hbar, codebook.vector(i));
                q.index = Some(i);
                Ok(q)
            })
            .collect::<Result<_>>()?;
        Ok(QuantizedCsi { entries })
    }

    /// Quantizes user `k` against `codebooks[k]`.
    pub fn from_codebooks(channels: &ChannelSet, codebooks: &[Codebook]) -> Result<Self> {
        if codebooks.len() != channels.users() {
            return Err(Error::dim(format!(
                "{} codebooks for {} users",
                codebooks.len(),
                channels.users()
            )));
        }
        let entries = codebooks
            .iter()
            .enumerate()
            .map(|(k, cb)| {
                let hbar = channels.direction(k);
                let i = quantize(hbar, cb)?;
                let mut q = decompose(hbar, cb.vector(i));
                q.index = Some(i);
                Ok(q)
            })
            .collect::<Result<_>>()?;
        Ok(QuantizedCsi { entries })
    }
}

/// A complete RVQ feedback scheme: codebook size, sharing and method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RvqScheme {
    pub bits: u32,
    pub mode: CodebookMode,
    pub method: RvqMethod,
}

impl RvqScheme {
    fn explicit(&self) -> bool {
        match self.method {
            RvqMethod::Explicit => true,
            RvqMethod::Sampled => false,
            RvqMethod::Auto { explicit_max_bits } => {
                self.mode == CodebookMode::Shared || self.bits <= explicit_max_bits
            }
        }
    }

    /// Draws this trial's codebook(s) and quantizes every user.
    pub fn quantize<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        channels: &ChannelSet,
    ) -> Result<QuantizedCsi> {
        let n_t = channels.antennas();
        if n_t < 2 {
            return Err(Error::dim(format!("RVQ needs n_T >= 2, got {n_t}")));
        }
        let explicit = self.explicit();
        if explicit && self.bits > MAX_CODEBOOK_BITS {
            return Err(Error::CodebookTooLarge {
                bits: self.bits,
                limit: MAX_CODEBOOK_BITS,
            });
        }
        match (self.mode, explicit) {
            (CodebookMode::Shared, true) => {
                let cb = generate_rvq(rng, self.bits, n_t)?;
                QuantizedCsi::from_codebook(channels, &cb)
            }
            (CodebookMode::Shared, false) => Err(Error::config(
                "the sampled RVQ method requires per-user codebooks",
            )),
            (CodebookMode::PerUser, true) => Ok(QuantizedCsi {
                entries: (0..channels.users())
                    .map(|k| quantize_streaming(rng, channels.direction(k), self.bits))
                    .collect(),
            }),
            (CodebookMode::PerUser, false) => Ok(QuantizedCsi {
                entries: (0..channels.users())
                    .map(|k| sample_rvq_direction(rng, channels.direction(k), self.bits))
                    .collect::<Result<_>>()?,
            }),
        }
    }
}

/// Monte Carlo mean and standard error of a scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMean {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl SampleMean {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return SampleMean {
                mean: f64::NAN,
                stderr: f64::NAN,
                count: 0,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        SampleMean {
            mean,
            stderr: (var / n as f64).sqrt(),
            count: n,
        }
    }
}

/// Empirical `E[sin²θ]` under genuine RVQ: a fresh isotropic direction and a
/// fresh `2^bits` codebook per trial.
pub fn quantization_error_stats<R: Rng + ?Sized>(
    n_t: usize,
    bits: u32,
    trials: usize,
    rng: &mut R,
) -> Result<SampleMean> {
    if trials == 0 {
        return Err(Error::domain("need at least one trial"));
    }
    if n_t < 2 {
        return Err(Error::dim(format!("RVQ needs n_T >= 2, got {n_t}")));
    }
    if bits > MAX_CODEBOOK_BITS {
        return Err(Error::CodebookTooLarge {
            bits,
            limit: MAX_CODEBOOK_BITS,
        });
    }
    let samples: Vec<f64> = (0..trials)
        .map(|_| {
            let hbar = sample_unit_sphere(rng, n_t);
            quantize_streaming(rng, &hbar, bits).sin2
        })
        .collect();
    Ok(SampleMean::from_samples(&samples))
}

//! TH precoder construction, recursive encoding and the transmit/receive chain.

use num_complex::Complex64;

use super::constellation::{detect, mod_tau, Constellation};
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::numerics::{inner, lq_decompose, CMatrix, LqFactors};
use crate::quantization::QuantizedCsi;

/// Which channel knowledge the precoder was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiMode {
    Perfect,
    Quantized,
}

/// A complete TH precoder for one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    /// `F`, `n_T×K`.
    pub feedforward: CMatrix,
    /// `B`, `K×K`, strictly lower triangular.
    pub feedback: CMatrix,
    /// Per-receiver scaling `g_k`.
    pub scaling: Vec<Complex64>,
    /// `κ = (M/(M−1))·K`.
    pub kappa: f64,
    /// Total transmit power `P` (linear).
    pub power: f64,
    pub mode: CsiMode,
    /// LQ factors of `H` (perfect) or `Ĥ` (quantized).
    pub factors: LqFactors,
}

impl PrecoderSet {
    pub fn users(&self) -> usize {
        self.feedback.rows()
    }

    /// `C = B + I`.
    pub fn c_matrix(&self) -> CMatrix {
        let mut c = self.feedback.clone();
        for k in 0..c.rows() {
            c[(k, k)] += Complex64::new(1.0, 0.0);
        }
        c
    }

    /// Amplitude `√(P/κ)` applied before the feedforward filter.
    pub fn amplitude(&self) -> f64 {
        (self.power / self.kappa).sqrt()
    }

    /// `(P/κ)·(M/(M−1))·Tr{F F^H}`; equals `P` by construction.
    pub fn nominal_power(&self, constellation: &Constellation) -> f64 {
        let f = &self.feedforward;
        let tr: f64 = f.as_slice().iter().map(|z| z.norm_sqr()).sum();
        self.power / self.kappa * constellation.energy_ratio() * tr
    }
}

fn check_power(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "transmit power must be positive, got {p}"
        )))
    }
}

/// `diag(R)^{-1}·R − I`.
fn feedback_from(r: &CMatrix) -> CMatrix {
    CMatrix::from_fn(r.rows(), r.cols(), |i, j| {
        if j < i {
            r[(i, j)] / r[(i, i)].re
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Perfect-CSI precoder from `H = R·Q`: `F = Q^H`, `B = diag(R)^{-1}R − I`,
/// `g_k = √(κ/P)/r_kk`.
pub fn build_perfect(
    channels: &ChannelSet,
    constellation: &Constellation,
    p: f64,
) -> Result<PrecoderSet> {
    check_power(p)?;
    let factors = lq_decompose(&channels.h)?;
    let kappa = constellation.kappa(channels.users());
    let g = (kappa / p).sqrt();
    let scaling = factors
        .diag()
        .iter()
        .map(|&r| Complex64::new(g / r, 0.0))
        .collect();
    Ok(PrecoderSet {
        feedforward: factors.q.conj_transpose(),
        feedback: feedback_from(&factors.r),
        scaling,
        kappa,
        power: p,
        mode: CsiMode::Perfect,
        factors,
    })
}

/// Quantized-CSI precoder from `Ĥ = R̂·Q̂`, with receiver scaling
/// `g_k = √(κ/P)/(ρ_k·c_k·r̂_kk)` so that the useful signal arrives with unit gain.
///
/// Two users selecting the same codeword make `Ĥ` rank deficient and yield
/// [`Error::DegenerateChannel`].
pub fn build_quantized(
    channels: &ChannelSet,
    qcsi: &QuantizedCsi,
    constellation: &Constellation,
    p: f64,
) -> Result<PrecoderSet> {
    check_power(p)?;
    if qcsi.entries.len() != channels.users() {
        return Err(Error::dim(
            "quantized CSI and channel disagree on the user count",
        ));
    }
    let factors = lq_decompose(&qcsi.hhat_matrix())?;
    let kappa = constellation.kappa(channels.users());
    let g = (kappa / p).sqrt();
    let rdiag = factors.diag();
    let scaling = qcsi
        .entries
        .iter()
        .enumerate()
        .map(|(k, e)| {
            if e.coeff.norm() == 0.0 {
                return Err(Error::DegenerateChannel {
                    index: k,
                    magnitude: 0.0,
                    tolerance: 0.0,
                });
            }
            Ok(Complex64::new(g, 0.0) / (e.coeff * channels.rho[k] * rdiag[k]))
        })
        .collect::<Result<_>>()?;
    Ok(PrecoderSet {
        feedforward: factors.q.conj_transpose(),
        feedback: feedback_from(&factors.r),
        scaling,
        kappa,
        power: p,
        mode: CsiMode::Quantized,
        factors,
    })
}

/// Recursive TH encoding: `x_k = mod_τ(s_k − Σ_{l<k} B_{kl} x_l)`, and the
/// effective symbols `v = C·x`.
pub fn th_encode(
    s: &[Complex64],
    precoder: &PrecoderSet,
    constellation: &Constellation,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let k_users = precoder.users();
    if s.len() != k_users {
        return Err(Error::dim(format!(
            "{} symbols for {k_users} users",
            s.len()
        )));
    }
    let tau = constellation.tau();
    let b = &precoder.feedback;
    let mut x: Vec<Complex64> = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let pre: Complex64 = (0..k).map(|l| b[(k, l)] * x[l]).sum();
        x.push(mod_tau(s[k] - pre, tau));
    }
    let v = precoder.c_matrix().mul_vec(&x)?;
    Ok((x, v))
}

/// Channel symbols `√(P/κ)·F·x` radiated by the antennas.
pub fn transmit_signal(precoder: &PrecoderSet, x: &[Complex64]) -> Result<Vec<Complex64>> {
    let a = precoder.amplitude();
    Ok(precoder
        .feedforward
        .mul_vec(x)?
        .into_iter()
        .map(|z| z * a)
        .collect())
}

/// `y_k = g_k·(√(P/κ)·h_k·F·x + n_k)` for every receiver.
pub fn transmit_receive(
    channels: &ChannelSet,
    precoder: &PrecoderSet,
    x: &[Complex64],
    noise: &[Complex64],
) -> Result<Vec<Complex64>> {
    if noise.len() != channels.users() || precoder.users() != channels.users() {
        return Err(Error::dim(
            "noise, precoder and channel disagree on the user count",
        ));
    }
    let t = transmit_signal(precoder, x)?;
    let r = channels.h.mul_vec(&t)?;
    Ok(r.iter()
        .zip(noise)
        .zip(&precoder.scaling)
        .map(|((ri, ni), gi)| gi * (ri + ni))
        .collect())
}

/// Residual quantization leakage seen by each receiver after scaling:
/// `√(sin²θ_k)·(h̃_k Q̂^H x)/(c_k·r̂_kk)`.
pub fn leakage_term(
    qcsi: &QuantizedCsi,
    precoder: &PrecoderSet,
    x: &[Complex64],
) -> Vec<Complex64> {
    let q = &precoder.factors.q;
    let rdiag = precoder.factors.diag();
    qcsi.entries
        .iter()
        .enumerate()
        .map(|(k, e)| match &e.htilde {
            None => Complex64::new(0.0, 0.0),
            Some(t) => {
                let proj: Complex64 = (0..q.rows()).map(|l| inner(t, q.row(l)) * x[l]).sum();
                proj * e.sin2.sqrt() / (e.coeff * rdiag[k])
            }
        })
        .collect()
}

/// One pass of symbols through the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct TxFrame {
    pub s: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub shat: Vec<Complex64>,
}

impl TxFrame {
    /// Encodes `s`, sends it over `channels` with additive `noise` and detects.
    pub fn run(
        channels: &ChannelSet,
        precoder: &PrecoderSet,
        constellation: &Constellation,
        s: &[Complex64],
        noise: &[Complex64],
    ) -> Result<TxFrame> {
        let (x, v) = th_encode(s, precoder, constellation)?;
        let y = transmit_receive(channels, precoder, &x, noise)?;
        let shat = detect(&y, constellation);
        Ok(TxFrame {
            s: s.to_vec(),
            v,
            x,
            y,
            shat,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_channels;
    use crate::numerics::sample_complex_normal;
    use crate::quantization::{CodebookMode, RvqMethod, RvqScheme};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero(k: usize) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); k]
    }

    #[test]
    fn identity_channel() {
        let ch = ChannelSet::from_matrix(CMatrix::identity(4)).unwrap();
        let m4 = Constellation::new(4).unwrap();
        let p = 10.0;
        let pre = build_perfect(&ch, &m4, p).unwrap();
        assert!(
            pre.feedforward
                .sub(&CMatrix::identity(4))
                .unwrap()
                .frobenius_norm()
                < 1e-15
        );
        assert!(pre.feedback.frobenius_norm() < 1e-15);
        assert!((pre.kappa - 16.0 / 3.0).abs() < 1e-15);
        for g in &pre.scaling {
            assert!((g.re - (pre.kappa / p).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn feedback_entry_and_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m4 = Constellation::new(4).unwrap();
        let ch = draw_channels(&mut rng, 2, 2).unwrap();
        let pre = build_perfect(&ch, &m4, 3.0).unwrap();
        let r = &pre.factors.r;
        assert!((pre.feedback[(1, 0)] - r[(1, 0)] / r[(1, 1)]).norm() < 1e-10);
        let f = &pre.feedforward;
        let ftf = &f.conj_transpose() * f;
        assert!(ftf.sub(&CMatrix::identity(2)).unwrap().frobenius_norm() < 1e-10);
        assert!((pre.nominal_power(&m4) - 3.0).abs() < 1e-9);
        for i in 0..2 {
            for j in i..2 {
                assert_eq!(pre.feedback[(i, j)], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn encode_without_feedback_is_identity() {
        let ch = ChannelSet::from_matrix(CMatrix::identity(2)).unwrap();
        let m4 = Constellation::new(4).unwrap();
        let pre = build_perfect(&ch, &m4, 1.0).unwrap();
        let s = vec![m4.symbol(1), m4.symbol(2)];
        let (x, v) = th_encode(&s, &pre, &m4).unwrap();
        assert_eq!(x, s);
        assert_eq!(v, s);
    }

    #[test]
    fn encode_small_feedback() {
        let ch = ChannelSet::from_matrix(CMatrix::identity(2)).unwrap();
        let m4 = Constellation::new(4).unwrap();
        let mut pre = build_perfect(&ch, &m4, 1.0).unwrap();
        pre.feedback[(1, 0)] = Complex64::new(0.1, 0.0);
        let s = vec![m4.symbol(0), m4.symbol(3)];
        let (x, v) = th_encode(&s, &pre, &m4).unwrap();
        assert!((x[1] - (s[1] - s[0] * 0.1)).norm() < 1e-15);
        assert!((v[1] - s[1]).norm() < 1e-15);
    }

    #[test]
    fn perfect_chain_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m16 = Constellation::new(16).unwrap();
        for _ in 0..200 {
            let ch = draw_channels(&mut rng, 4, 3).unwrap();
            let pre = build_perfect(&ch, &m16, 20.0).unwrap();
            let s = m16.random_symbols(&mut rng, 3);
            let (x, v) = th_encode(&s, &pre, &m16).unwrap();
            let tau = m16.tau();
            assert!(x
                .iter()
                .all(|z| (-tau..tau).contains(&z.re) && (-tau..tau).contains(&z.im)));
            let y = transmit_receive(&ch, &pre, &x, &zero(3)).unwrap();
            for k in 0..3 {
                assert!((y[k] - v[k]).norm() < 1e-9);
            }
            assert_eq!(detect(&y, &m16), s);
            let n: Vec<Complex64> = (0..3).map(|_| sample_complex_normal(&mut rng)).collect();
            let yn = transmit_receive(&ch, &pre, &x, &n).unwrap();
            for k in 0..3 {
                assert!((yn[k] - v[k] - pre.scaling[k] * n[k]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn quantized_chain_splits_into_signal_and_leakage() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m4 = Constellation::new(4).unwrap();
        let scheme = RvqScheme {
            bits: 4,
            mode: CodebookMode::PerUser,
            method: RvqMethod::Explicit,
        };
        for _ in 0..200 {
            let ch = draw_channels(&mut rng, 4, 3).unwrap();
            let q = scheme.quantize(&mut rng, &ch).unwrap();
            let pre = build_quantized(&ch, &q, &m4, 50.0).unwrap();
            let s = m4.random_symbols(&mut rng, 3);
            let (x, v) = th_encode(&s, &pre, &m4).unwrap();
            let y = transmit_receive(&ch, &pre, &x, &zero(3)).unwrap();
            let leak = leakage_term(&q, &pre, &x);
            for k in 0..3 {
                assert!((y[k] - v[k] - leak[k]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn exact_quantization_matches_perfect() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m4 = Constellation::new(4).unwrap();
        let ch = draw_channels(&mut rng, 4, 4).unwrap();
        let q = QuantizedCsi::exact(&ch);
        let pq = build_quantized(&ch, &q, &m4, 5.0).unwrap();
        let pp = build_perfect(&ch, &m4, 5.0).unwrap();
        assert!(pq.feedback.sub(&pp.feedback).unwrap().frobenius_norm() < 1e-10);
        for k in 0..4 {
            assert!((pq.scaling[k] - pp.scaling[k]).norm() < 1e-10 * pp.scaling[k].norm());
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let ch = ChannelSet::from_matrix(CMatrix::identity(2)).unwrap();
        let m4 = Constellation::new(4).unwrap();
        assert!(build_perfect(&ch, &m4, 0.0).is_err());
        let pre = build_perfect(&ch, &m4, 1.0).unwrap();
        assert!(th_encode(&[m4.symbol(0)], &pre, &m4).is_err());
        assert!(transmit_receive(&ch, &pre, &zero(2), &zero(1)).is_err());
    }
}

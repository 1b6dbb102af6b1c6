//! Per-user SNR/SINR.
//!
//! Every SINR here has the shape `P·a/(P·b + 1)` with `a`, `b` independent of
//! the transmit power, so one channel draw serves a whole SNR grid.

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::numerics::{inner, lq_decompose, norm_sqr, LqFactors};
use crate::quantization::QuantizedCsi;

use super::th::PrecoderSet;

/// Power-independent SINR coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrTerms {
    /// Useful-signal gain per unit of `P`.
    pub signal: Vec<f64>,
    /// Leakage gain per unit of `P`.
    pub leakage: Vec<f64>,
}

impl SinrTerms {
    /// SINR of every user at linear power `p`.
    pub fn at(&self, p: f64) -> Vec<f64> {
        self.signal
            .iter()
            .zip(&self.leakage)
            .map(|(a, b)| p * a / (p * b + 1.0))
            .collect()
    }
}

/// `ξ_k/P = |r_kk|²/κ`.
pub fn perfect_terms(factors: &LqFactors, kappa: f64) -> SinrTerms {
    let signal: Vec<f64> = factors.diag().iter().map(|r| r * r / kappa).collect();
    let leakage = vec![0.0; signal.len()];
    SinrTerms { signal, leakage }
}

/// Quantized-CSI SINR coefficients and the interference factors `ε_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedTerms {
    pub terms: SinrTerms,
    /// `ε_k = ‖h̃_k Q̂^H‖²`, exactly 1 when `K = n_T`.
    pub eps: Vec<f64>,
}

/// `ε_k` for every user given the factors of `Ĥ`.
///
/// Exactly quantized users carry no residual direction and report 0.
pub fn interference_factors(qcsi: &QuantizedCsi, factors: &LqFactors) -> Vec<f64> {
    let q = &factors.q;
    let square = q.rows() == q.cols();
    qcsi.entries
        .iter()
        .map(|e| match &e.htilde {
            None => 0.0,
            Some(_) if square => 1.0,
            Some(t) => {
                let proj: Vec<_> = (0..q.rows()).map(|l| inner(t, q.row(l))).collect();
                norm_sqr(&proj).min(1.0)
            }
        })
        .collect()
}

/// `γ_k = (P/κ)ρ_k²r̂_kk²cos²θ_k / ((P/κ)ρ_k²ε_k sin²θ_k + 1)`, as coefficients.
pub fn quantized_terms(
    channels: &ChannelSet,
    qcsi: &QuantizedCsi,
    factors: &LqFactors,
    kappa: f64,
) -> QuantizedTerms {
    let eps = interference_factors(qcsi, factors);
    let rdiag = factors.diag();
    let (signal, leakage) = qcsi
        .entries
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let rho2 = channels.rho[k] * channels.rho[k];
            (
                rho2 * rdiag[k] * rdiag[k] * e.cos2 / kappa,
                rho2 * eps[k] * e.sin2 / kappa,
            )
        })
        .unzip();
    QuantizedTerms {
        terms: SinrTerms { signal, leakage },
        eps,
    }
}

/// Factors `Ĥ` and evaluates [`quantized_terms`].
pub fn quantized_terms_for(
    channels: &ChannelSet,
    qcsi: &QuantizedCsi,
    kappa: f64,
) -> Result<QuantizedTerms> {
    let factors = lq_decompose(&qcsi.hhat_matrix())?;
    Ok(quantized_terms(channels, qcsi, &factors, kappa))
}

/// Per-user SNR `ξ_k` under perfect CSI.
pub fn sinr_perfect(precoder: &PrecoderSet) -> Vec<f64> {
    perfect_terms(&precoder.factors, precoder.kappa).at(precoder.power)
}

/// Per-user SINR `γ_k` under quantized CSI, together with `ε_k`.
pub fn sinr_quantized(
    channels: &ChannelSet,
    qcsi: &QuantizedCsi,
    precoder: &PrecoderSet,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if qcsi.entries.len() != channels.users() || precoder.users() != channels.users() {
        return Err(Error::dim(
            "quantized CSI, precoder and channel disagree on the user count",
        ));
    }
    let t = quantized_terms(channels, qcsi, &precoder.factors, precoder.kappa);
    Ok((t.terms.at(precoder.power), t.eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_channels;
    use crate::numerics::CMatrix;
    use crate::precoding::constellation::Constellation;
    use crate::precoding::th::{build_perfect, build_quantized, transmit_signal};
    use crate::quantization::{CodebookMode, RvqMethod, RvqScheme};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_snr() {
        let ch = ChannelSet::from_matrix(CMatrix::identity(4)).unwrap();
        let m4 = Constellation::new(4).unwrap();
        let pre = build_perfect(&ch, &m4, 16.0 / 3.0).unwrap();
        for xi in sinr_perfect(&pre) {
            assert!((xi - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_user_snr() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = draw_channels(&mut rng, 4, 1).unwrap();
        let m4 = Constellation::new(4).unwrap();
        let pre = build_perfect(&ch, &m4, 7.0).unwrap();
        let expect = 7.0 / pre.kappa * ch.rho[0].powi(2);
        assert!((sinr_perfect(&pre)[0] - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn snr_matches_received_signal_power() {
        // a unit impulse on user k arrives with gain √(P/κ)·r_kk
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m4 = Constellation::new(4).unwrap();
        for _ in 0..50 {
            let ch = draw_channels(&mut rng, 4, 3).unwrap();
            let pre = build_perfect(&ch, &m4, 12.0).unwrap();
            let xi = sinr_perfect(&pre);
            for k in 0..3 {
                let mut x = vec![Complex64::new(0.0, 0.0); 3];
                x[k] = Complex64::new(1.0, 0.0);
                let t = transmit_signal(&pre, &x).unwrap();
                let rx: Complex64 = ch.h.row(k).iter().zip(&t).map(|(a, b)| a * b).sum();
                assert!((rx.norm_sqr() - xi[k]).abs() < 1e-9 * xi[k]);
            }
        }
    }

    #[test]
    fn zero_error_gives_perfect_snr() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m4 = Constellation::new(4).unwrap();
        for _ in 0..50 {
            let ch = draw_channels(&mut rng, 4, 3).unwrap();
            let q = QuantizedCsi::exact(&ch);
            let pq = build_quantized(&ch, &q, &m4, 30.0).unwrap();
            let pp = build_perfect(&ch, &m4, 30.0).unwrap();
            let (g, _) = sinr_quantized(&ch, &q, &pq).unwrap();
            let xi = sinr_perfect(&pp);
            for k in 0..3 {
                assert!((g[k] - xi[k]).abs() < 1e-9 * xi[k]);
            }
        }
    }

    #[test]
    fn eps_range_and_full_load() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let scheme = RvqScheme {
            bits: 3,
            mode: CodebookMode::PerUser,
            method: RvqMethod::Explicit,
        };
        for (n_t, k) in [(4, 1), (4, 2), (4, 4), (6, 4)] {
            for _ in 0..50 {
                let ch = draw_channels(&mut rng, n_t, k).unwrap();
                let q = scheme.quantize(&mut rng, &ch).unwrap();
                let t = quantized_terms_for(&ch, &q, 1.0).unwrap();
                for &e in &t.eps {
                    assert!((0.0..=1.0).contains(&e));
                    if k == n_t {
                        assert_eq!(e, 1.0);
                    }
                }
                if k == 1 {
                    // a single user has nobody to leak into
                    assert!(t.eps[0] < 1e-20);
                }
            }
        }
    }

    #[test]
    fn signal_coefficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m4 = Constellation::new(4).unwrap();
        let scheme = RvqScheme {
            bits: 5,
            mode: CodebookMode::PerUser,
            method: RvqMethod::Explicit,
        };
        let ch = draw_channels(&mut rng, 4, 2).unwrap();
        let q = scheme.quantize(&mut rng, &ch).unwrap();
        let pre = build_quantized(&ch, &q, &m4, 1.0).unwrap();
        let t = quantized_terms(&ch, &q, &pre.factors, pre.kappa);
        for k in 0..2 {
            let e = &q.entries[k];
            let direct = ch.rho[k].powi(2) * pre.factors.diag()[k].powi(2) * e.cos2 / pre.kappa;
            assert!((t.terms.signal[k] - direct).abs() < 1e-12 * direct);
        }
    }
}

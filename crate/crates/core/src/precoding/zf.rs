//! Linear zero-forcing baseline with equal power per user.

use num_complex::Complex64;

use super::sinr::SinrTerms;
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::numerics::{lq_decompose, norm, CMatrix};

/// Unit-norm ZF beamformers: the normalized columns of `Ĥ^H(ĤĤ^H)^{-1}`.
///
/// `hhat` is the channel (or channel-direction) estimate available at the
/// transmitter; row scaling does not change the result.
pub fn build_zf(hhat: &CMatrix) -> Result<CMatrix> {
    let f = lq_decompose(hhat)?;
    let k = hhat.rows();
    // pseudo-inverse = Q^H R^{-1}; invert the lower-triangular R column by column
    let mut rinv = CMatrix::zeros(k, k);
    for j in 0..k {
        for i in j..k {
            let mut acc = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            for l in j..i {
                acc -= f.r[(i, l)] * rinv[(l, j)];
            }
            rinv[(i, j)] = acc / f.r[(i, i)].re;
        }
    }
    let mut w = f.q.conj_transpose().matmul(&rinv)?;
    for j in 0..k {
        let col = w.column(j);
        let n = norm(&col);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateChannel {
                index: j,
                magnitude: n,
                tolerance: 0.0,
            });
        }
        for i in 0..w.rows() {
            w[(i, j)] /= n;
        }
    }
    Ok(w)
}

/// SINR coefficients of beamformers `w` over the true channel with power
/// `P/K` per user: `|h_k w_k|²/K` against `Σ_{j≠k}|h_k w_j|²/K`.
pub fn zf_terms(channels: &ChannelSet, w: &CMatrix) -> Result<SinrTerms> {
    let k_users = channels.users();
    if w.rows() != channels.antennas() || w.cols() != k_users {
        return Err(Error::dim("beamformer shape does not match the channel"));
    }
    let gains = channels.h.matmul(w)?;
    let kf = k_users as f64;
    let mut signal = Vec::with_capacity(k_users);
    let mut leakage = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let row = gains.row(k);
        signal.push(row[k].norm_sqr() / kf);
        let other: f64 = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, g)| g.norm_sqr())
            .sum();
        leakage.push(other / kf);
    }
    Ok(SinrTerms { signal, leakage })
}

/// Equal-power ZF SINR at linear power `p`.
pub fn zf_sinr(channels: &ChannelSet, w: &CMatrix, p: f64) -> Result<Vec<f64>> {
    Ok(zf_terms(channels, w)?.at(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_channels;
    use crate::quantization::QuantizedCsi;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_csi_nulls_interference() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (n_t, k) in [(4, 4), (4, 2), (2, 2)] {
            let ch = draw_channels(&mut rng, n_t, k).unwrap();
            let w = build_zf(&ch.h).unwrap();
            for j in 0..k {
                assert!((norm(&w.column(j)) - 1.0).abs() < 1e-12);
            }
            let t = zf_terms(&ch, &w).unwrap();
            let scale = t.signal.iter().cloned().fold(0.0, f64::max);
            assert!(t.leakage.iter().all(|&l| l <= 1e-20 * scale.max(1.0)));
        }
    }

    #[test]
    fn exact_quantization_equals_perfect() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = draw_channels(&mut rng, 4, 3).unwrap();
        let wp = build_zf(&ch.h).unwrap();
        let wq = build_zf(&QuantizedCsi::exact(&ch).hhat_matrix()).unwrap();
        let a = zf_sinr(&ch, &wp, 100.0).unwrap();
        let b = zf_sinr(&ch, &wq, 100.0).unwrap();
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-9 * a[k]);
        }
    }

    #[test]
    fn single_user_is_matched_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ch = draw_channels(&mut rng, 4, 1).unwrap();
        let w = build_zf(&ch.h).unwrap();
        let snr = zf_sinr(&ch, &w, 2.0).unwrap()[0];
        assert!((snr - 2.0 * ch.rho[0].powi(2)).abs() < 1e-10 * snr);
    }
}

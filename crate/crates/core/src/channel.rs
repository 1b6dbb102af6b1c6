//! i.i.d. Rayleigh multiuser channels.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{norm, sample_complex_gaussian, CMatrix};

/// Norms below this are treated as a degenerate draw and redrawn.
const MIN_NORM: f64 = 1e-12;

/// One realization of all users' channels, `H = diag(ρ)·H̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `K×n_T`, row `k` is user `k`'s channel `h_k`.
    pub h: CMatrix,
    /// `ρ_k = ‖h_k‖`.
    pub rho: Vec<f64>,
    /// `K×n_T`, unit-norm channel directions `h̄_k = h_k/ρ_k`.
    pub hbar: CMatrix,
}

impl ChannelSet {
    /// Splits a given channel matrix into norms and directions.
    pub fn from_matrix(h: CMatrix) -> Result<Self> {
        if h.rows() == 0 || h.rows() > h.cols() {
            return Err(Error::dim(format!(
                "need 1 <= K <= n_T, got {}x{}",
                h.rows(),
                h.cols()
            )));
        }
        let rho: Vec<f64> = (0..h.rows()).map(|k| norm(h.row(k))).collect();
        if let Some(k) = rho.iter().position(|&r| !(r > MIN_NORM) || !r.is_finite()) {
            return Err(Error::domain(format!(
                "user {k} has a degenerate channel norm {}",
                rho[k]
            )));
        }
        let hbar = CMatrix::from_fn(h.rows(), h.cols(), |i, j| h[(i, j)] / rho[i]);
        Ok(ChannelSet { h, rho, hbar })
    }

    #[inline]
    pub fn users(&self) -> usize {
        self.h.rows()
    }

    #[inline]
    pub fn antennas(&self) -> usize {
        self.h.cols()
    }

    /// `‖H − diag(ρ)·H̄‖_F`, zero up to rounding.
    pub fn reconstruction_error(&self) -> f64 {
        let rebuilt = CMatrix::from_fn(self.users(), self.antennas(), |i, j| {
            self.hbar[(i, j)] * self.rho[i]
        });
        rebuilt
            .sub(&self.h)
            .map_or(f64::INFINITY, |d| d.frobenius_norm())
    }

    /// The channel with users reordered; row `i` becomes old row `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Ok(ChannelSet {
            h: self.h.permute_rows(perm)?,
            rho: perm.iter().map(|&p| self.rho[p]).collect(),
            hbar: self.hbar.permute_rows(perm)?,
        })
    }

    pub fn direction(&self, k: usize) -> &[Complex64] {
        self.hbar.row(k)
    }
}

/// Draws `K` i.i.d. Rayleigh channels over `n_T` antennas, unit variance per entry.
/// Users stay in draw order.
pub fn draw_channels<R: Rng + ?Sized>(rng: &mut R, n_t: usize, k: usize) -> Result<ChannelSet> {
    if k == 0 || k > n_t {
        return Err(Error::dim(format!(
            "need 1 <= K <= n_T, got K={k}, n_T={n_t}"
        )));
    }
    loop {
        let h = sample_complex_gaussian(rng, k, n_t);
        match ChannelSet::from_matrix(h) {
            Ok(c) => return Ok(c),
            Err(Error::Domain(_)) => continue,
            Err(e) => return Err(e),
        }
    }
}

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::cmatrix::{norm, CMatrix};

/// One circularly-symmetric complex Gaussian draw with `E|z|² = 1`.
#[inline]
pub fn sample_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// `rows×cols` matrix of i.i.d. unit-variance circularly-symmetric complex
/// Gaussian entries, drawn in row-major order.
pub fn sample_complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| sample_complex_normal(rng))
}

/// Isotropic unit-norm row vector in `C^n` (a normalized complex Gaussian).
pub fn sample_unit_sphere<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    assert!(n >= 1, "unit sphere needs dimension >= 1");
    loop {
        let v: Vec<Complex64> = (0..n).map(|_| sample_complex_normal(rng)).collect();
        let len = norm(&v);
        if len > 0.0 {
            return v.into_iter().map(|z| z / len).collect();
        }
    }
}

/// Uniform phase factor `e^{jφ}`.
pub fn sample_unit_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let phi: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    Complex64::from_polar(1.0, phi)
}

//! LQ factorization `H = R·Q` of a wide complex matrix, with `R` lower
//! triangular and `Q` having orthonormal rows.
//!
//! The factorization is made unique by forcing the diagonal of `R` to be real
//! and strictly positive. Two independent routes are provided: Householder
//! reflections applied to `H^H` (the production path) and row-wise modified
//! Gram-Schmidt with one reorthogonalization pass.

use num_complex::Complex64;

use super::cmatrix::{inner, norm, CMatrix};
use crate::error::{Error, Result};

/// Relative pivot tolerance: a pivot below `RANK_TOL · ‖H‖_F` is degenerate.
pub const RANK_TOL: f64 = 1e-10;

/// Factors of `H = R·Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct LqFactors {
    /// `K×K` lower triangular, real positive diagonal.
    pub r: CMatrix,
    /// `K×n_T` with `Q·Q^H = I_K`.
    pub q: CMatrix,
}

impl LqFactors {
    /// Real diagonal entries `r_{k,k}`.
    pub fn diag(&self) -> Vec<f64> {
        (0..self.r.rows()).map(|k| self.r[(k, k)].re).collect()
    }

    /// `‖R·Q − H‖_F`.
    pub fn reconstruction_error(&self, h: &CMatrix) -> f64 {
        (&self.r * &self.q)
            .sub(h)
            .map_or(f64::INFINITY, |d| d.frobenius_norm())
    }

    /// `‖Q·Q^H − I‖_F`.
    pub fn orthogonality_error(&self) -> f64 {
        let g = &self.q * &self.q.conj_transpose();
        g.sub(&CMatrix::identity(g.rows()))
            .map_or(f64::INFINITY, |d| d.frobenius_norm())
    }
}

fn check_shape(h: &CMatrix) -> Result<()> {
    if h.rows() == 0 {
        return Err(Error::dim("cannot factor a matrix with no rows"));
    }
    if h.rows() > h.cols() {
        return Err(Error::dim(format!(
            "LQ needs rows <= cols, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    if !h.is_finite() {
        return Err(Error::domain("matrix has non-finite entries"));
    }
    Ok(())
}

fn pivot_check(index: usize, magnitude: f64, tolerance: f64) -> Result<()> {
    if magnitude < tolerance || magnitude == 0.0 {
        Err(Error::DegenerateChannel {
            index,
            magnitude,
            tolerance,
        })
    } else {
        Ok(())
    }
}

#[inline]
fn unit_phase(z: Complex64) -> Complex64 {
    let a = z.norm();
    if a == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        z / a
    }
}

/// Householder LQ factorization with positive real diagonal.
///
/// Requires `K ≤ n_T` and full row rank; a pivot smaller than
/// `RANK_TOL·‖H‖_F` yields [`Error::DegenerateChannel`].
pub fn lq_decompose(h: &CMatrix) -> Result<LqFactors> {
    check_shape(h)?;
    let k_users = h.rows();
    let n_t = h.cols();
    let tol = RANK_TOL * h.frobenius_norm();

    // Thin QR of A = H^H (n_T × K), stored column-major for cache-friendly reflections.
    let mut cols: Vec<Vec<Complex64>> = (0..k_users)
        .map(|j| h.row(j).iter().map(|z| z.conj()).collect())
        .collect();
    let mut reflectors: Vec<Vec<Complex64>> = Vec::with_capacity(k_users);
    let mut diag = Vec::with_capacity(k_users);

    for k in 0..k_users {
        let x = &cols[k][k..];
        let xnorm = norm(x);
        pivot_check(k, xnorm, tol)?;
        let alpha = -unit_phase(x[0]) * xnorm;
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 > 0.0 {
            for col in cols.iter_mut().skip(k) {
                let seg = &mut col[k..];
                let s: Complex64 = v
                    .iter()
                    .zip(seg.iter())
                    .map(|(vi, ai)| vi.conj() * ai)
                    .sum();
                let f = s * (2.0 / vnorm2);
                for (ai, vi) in seg.iter_mut().zip(&v) {
                    *ai -= f * vi;
                }
            }
        }
        diag.push(alpha);
        reflectors.push(v);
    }

    // Q1 = H_0 ⋯ H_{K−1} [I_K; 0], accumulated right to left.
    let mut q1: Vec<Vec<Complex64>> = (0..k_users)
        .map(|j| {
            let mut e = vec![Complex64::new(0.0, 0.0); n_t];
            e[j] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();
    for (k, v) in reflectors.iter().enumerate().rev() {
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for col in q1.iter_mut() {
            let seg = &mut col[k..];
            let s: Complex64 = v
                .iter()
                .zip(seg.iter())
                .map(|(vi, ai)| vi.conj() * ai)
                .sum();
            let f = s * (2.0 / vnorm2);
            for (ai, vi) in seg.iter_mut().zip(v) {
                *ai -= f * vi;
            }
        }
    }

    // H = R1^H Q1^H; absorb the diagonal phases so that diag(R) > 0.
    let phases: Vec<Complex64> = diag.iter().map(|a| unit_phase(a.conj())).collect();
    let mut r = CMatrix::zeros(k_users, k_users);
    for i in 0..k_users {
        for j in 0..i {
            // R[i][j] = conj(R1[j][i]) = conj(cols[i][j])
            r[(i, j)] = cols[i][j].conj() * phases[j].conj();
        }
        r[(i, i)] = Complex64::new(diag[i].norm(), 0.0);
    }
    let mut q = CMatrix::zeros(k_users, n_t);
    for i in 0..k_users {
        for (dst, src) in q.row_mut(i).iter_mut().zip(&q1[i]) {
            *dst = src.conj() * phases[i];
        }
    }
    Ok(LqFactors { r, q })
}

/// Row-wise modified Gram-Schmidt LQ with one reorthogonalization pass.
///
/// Produces the same unique factors as [`lq_decompose`] and serves as an
/// independent cross-check.
pub fn lq_decompose_gram_schmidt(h: &CMatrix) -> Result<LqFactors> {
    check_shape(h)?;
    let k_users = h.rows();
    let n_t = h.cols();
    let tol = RANK_TOL * h.frobenius_norm();
    let mut r = CMatrix::zeros(k_users, k_users);
    let mut q = CMatrix::zeros(k_users, n_t);
    for k in 0..k_users {
        let mut w = h.row(k).to_vec();
        for _pass in 0..2 {
            for l in 0..k {
                let c = inner(&w, q.row(l));
                r[(k, l)] += c;
                for (wi, ql) in w.iter_mut().zip(q.row(l)) {
                    *wi -= c * ql;
                }
            }
        }
        let wn = norm(&w);
        pivot_check(k, wn, tol)?;
        r[(k, k)] = Complex64::new(wn, 0.0);
        for (dst, wi) in q.row_mut(k).iter_mut().zip(&w) {
            *dst = wi / wn;
        }
    }
    Ok(LqFactors { r, q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::sampling::sample_complex_gaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn check_invariants(h: &CMatrix, f: &LqFactors) {
        let scale = h.frobenius_norm();
        assert!(f.reconstruction_error(h) <= 1e-10 * scale.max(1.0));
        assert!(f.orthogonality_error() <= 1e-10);
        for i in 0..f.r.rows() {
            assert!(f.r[(i, i)].im == 0.0 && f.r[(i, i)].re > 0.0);
            for j in i + 1..f.r.cols() {
                assert_eq!(f.r[(i, j)], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn identity_factors_to_identity() {
        let h = CMatrix::identity(4);
        let f = lq_decompose(&h).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((f.r[(i, j)] - expect).norm() < 1e-15);
                assert!((f.q[(i, j)] - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn single_row_gives_norm_and_direction() {
        let h = CMatrix::from_rows(&[vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]])
            .unwrap();
        let f = lq_decompose(&h).unwrap();
        assert!((f.r[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((f.q[(0, 1)] - Complex64::new(0.0, 0.8)).norm() < 1e-15);

        let h3 = h.scale(Complex64::new(0.0, 3.0));
        let f3 = lq_decompose(&h3).unwrap();
        assert!((f3.r[(0, 0)].re - 3.0).abs() < 1e-14);
    }

    #[test]
    fn random_wide_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = sample_complex_gaussian(&mut rng, 3, 4);
        let f = lq_decompose(&h).unwrap();
        check_invariants(&h, &f);
    }

    #[test]
    fn two_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (k, n) in [(1, 1), (2, 2), (2, 4), (3, 4), (4, 4), (4, 6)] {
            let h = sample_complex_gaussian(&mut rng, k, n);
            let a = lq_decompose(&h).unwrap();
            let b = lq_decompose_gram_schmidt(&h).unwrap();
            check_invariants(&h, &b);
            assert!(a.r.sub(&b.r).unwrap().frobenius_norm() < 1e-8);
            assert!(a.q.sub(&b.q).unwrap().frobenius_norm() < 1e-8);
        }
    }

    #[test]
    fn rank_deficient_is_rejected() {
        let row = vec![
            Complex64::new(1.0, 0.5),
            Complex64::new(-0.3, 0.2),
            Complex64::new(0.0, 1.0),
        ];
        let h = CMatrix::from_rows(&[row.clone(), row]).unwrap();
        assert!(matches!(
            lq_decompose(&h),
            Err(Error::DegenerateChannel { index: 1, .. })
        ));
        assert!(matches!(
            lq_decompose_gram_schmidt(&h),
            Err(Error::DegenerateChannel { index: 1, .. })
        ));
        assert!(lq_decompose(&CMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn tall_matrix_is_rejected() {
        assert!(matches!(
            lq_decompose(&CMatrix::zeros(3, 2)),
            Err(Error::Dimension(_))
        ));
    }
}

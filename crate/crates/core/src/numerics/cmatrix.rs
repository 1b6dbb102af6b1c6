use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Builds a matrix from a row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "buffer of length {} cannot form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    /// Stacks equally long row vectors.
    pub fn from_rows<R: AsRef<[Complex64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dim(format!(
                    "row {i} has length {}, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(CMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &d) in entries.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == ZERO {
                    continue;
                }
                let src = rhs.row(l);
                for (o, &b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn sub(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::dim(format!(
                "cannot subtract {}x{} from {}x{}",
                rhs.rows, rhs.cols, self.rows, self.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        self.diagonal().into_iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Returns the matrix with its rows reordered so that row `i` of the
    /// result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<CMatrix> {
        if perm.len() != self.rows {
            return Err(Error::dim("permutation length differs from row count"));
        }
        let mut seen = vec![false; self.rows];
        for &p in perm {
            if p >= self.rows || std::mem::replace(&mut seen[p], true) {
                return Err(Error::dim("not a permutation"));
            }
        }
        let mut data = Vec::with_capacity(self.data.len());
        for &p in perm {
            data.extend_from_slice(self.row(p));
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    /// Panics on a shape mismatch; use [`CMatrix::matmul`] for the fallible form.
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("matrix shapes must agree")
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.6}{:+.6}j  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Bilinear product `Σ a_i b_i` (no conjugation).
#[inline]
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inner product `a·b^H = Σ a_i conj(b_i)` of two row vectors.
#[inline]
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

#[inline]
pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

#[inline]
pub fn norm(v: &[Complex64]) -> f64 {
    norm_sqr(v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn matmul_small() {
        let a = CMatrix::from_rows(&[vec![c(1.0, 1.0), c(0.0, 2.0)]]).unwrap();
        let b = CMatrix::from_rows(&[vec![c(2.0, 0.0)], vec![c(1.0, -1.0)]]).unwrap();
        let p = &a * &b;
        assert_eq!(p.rows(), 1);
        assert_eq!(p.cols(), 1);
        // (1+j)·2 + 2j·(1−j) = 2+2j + 2j+2 = 4+4j
        assert_eq!(p[(0, 0)], c(4.0, 4.0));
    }

    #[test]
    fn shape_errors() {
        let a = CMatrix::zeros(2, 3);
        assert!(a.matmul(&CMatrix::zeros(2, 3)).is_err());
        assert!(a.mul_vec(&[ZERO; 2]).is_err());
        assert!(CMatrix::from_rows(&[vec![ZERO; 2], vec![ZERO; 3]]).is_err());
        assert!(CMatrix::from_vec(2, 2, vec![ZERO; 3]).is_err());
    }

    #[test]
    fn conj_transpose_and_inner() {
        let a = CMatrix::from_rows(&[vec![c(1.0, 2.0), c(3.0, -1.0)]]).unwrap();
        let ah = a.conj_transpose();
        assert_eq!(ah[(1, 0)], c(3.0, 1.0));
        let n2 = inner(a.row(0), a.row(0));
        assert_eq!(n2, c(15.0, 0.0));
        assert_eq!(norm_sqr(a.row(0)), 15.0);
    }

    #[test]
    fn permute_rows_rejects_non_permutations() {
        let a = CMatrix::identity(3);
        assert!(a.permute_rows(&[0, 0, 1]).is_err());
        assert!(a.permute_rows(&[0, 1]).is_err());
        let p = a.permute_rows(&[2, 0, 1]).unwrap();
        assert_eq!(p[(0, 2)], ONE);
        assert_eq!(p[(1, 0)], ONE);
    }
}

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Square M-QAM with unit average energy and its modulo boundary `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    m: usize,
    side: usize,
    /// Half the spacing between neighbouring levels.
    a: f64,
    tau: f64,
}

impl Constellation {
    /// `m` must be a perfect square, at least 4.
    pub fn new(m: usize) -> Result<Self> {
        let side = (m as f64).sqrt().round() as usize;
        if m < 4 || side * side != m {
            return Err(Error::domain(format!(
                "constellation size must be a square >= 4, got {m}"
            )));
        }
        let a = (3.0 / (2.0 * (m as f64 - 1.0))).sqrt();
        Ok(Constellation {
            m,
            side,
            a,
            tau: side as f64 * a,
        })
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `M/(M−1)`: the per-symbol energy of a uniform point in the modulo square.
    pub fn energy_ratio(&self) -> f64 {
        self.m as f64 / (self.m as f64 - 1.0)
    }

    /// `κ = (M/(M−1))·K`.
    pub fn kappa(&self, users: usize) -> f64 {
        self.energy_ratio() * users as f64
    }

    fn level(&self, i: usize) -> f64 {
        (2.0 * i as f64 - (self.side as f64 - 1.0)) * self.a
    }

    /// Symbol with index `i = i_re·√M + i_im`.
    pub fn symbol(&self, i: usize) -> Complex64 {
        Complex64::new(self.level(i / self.side), self.level(i % self.side))
    }

    pub fn symbols(&self) -> Vec<Complex64> {
        (0..self.m).map(|i| self.symbol(i)).collect()
    }

    // nearest level per axis; exact midpoints go to the lower index
    fn axis_index(&self, x: f64) -> usize {
        let t = (x / self.a + (self.side as f64 - 1.0)) / 2.0;
        let i = (t - 0.5).ceil();
        i.clamp(0.0, (self.side - 1) as f64) as usize
    }

    /// Index of the symbol nearest to `z`.
    pub fn nearest_index(&self, z: Complex64) -> usize {
        self.axis_index(z.re) * self.side + self.axis_index(z.im)
    }

    pub fn nearest(&self, z: Complex64) -> Complex64 {
        self.symbol(self.nearest_index(z))
    }

    /// `K` i.i.d. uniformly chosen symbols.
    pub fn random_symbols<R: Rng + ?Sized>(&self, rng: &mut R, k: usize) -> Vec<Complex64> {
        (0..k)
            .map(|_| self.symbol(rng.random_range(0..self.m)))
            .collect()
    }
}

fn fold(x: f64, tau: f64) -> f64 {
    let period = 2.0 * tau;
    let mut out = x - period * ((x + tau) / period).floor();
    // guard the half-open boundary against rounding
    if out >= tau {
        out -= period;
    } else if out < -tau {
        out += period;
    }
    out
}

/// Reduces the real and imaginary parts of `z` into `[−τ, τ)`.
pub fn mod_tau(z: Complex64, tau: f64) -> Complex64 {
    Complex64::new(fold(z.re, tau), fold(z.im, tau))
}

/// Modulo-reduces each received value and slices to the nearest symbol.
pub fn detect(y: &[Complex64], constellation: &Constellation) -> Vec<Complex64> {
    let tau = constellation.tau();
    y.iter()
        .map(|&z| constellation.nearest(mod_tau(z, tau)))
        .collect()
}

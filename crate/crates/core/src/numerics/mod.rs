//! Complex linear algebra, random sampling and special functions.

pub mod cmatrix;
pub mod lq;
pub mod sampling;
pub mod special;

pub use cmatrix::{dot, inner, norm, norm_sqr, CMatrix};
pub use lq::{lq_decompose, lq_decompose_gram_schmidt, LqFactors, RANK_TOL};
pub use sampling::{
    sample_complex_gaussian, sample_complex_normal, sample_unit_phase, sample_unit_sphere,
};
pub use special::{
    beta_fn, digamma, harmonic, ln_beta, log_gamma, regularized_incomplete_beta, EULER_GAMMA,
};

//! Tomlinson-Harashima (TH) precoding for the multiuser MIMO downlink with
//! quantized channel direction feedback.
//!
//! The crate is organized bottom-up:
//!
//! - [`numerics`]: complex matrices, the positive-diagonal LQ factorization,
//!   random sampling and special functions.
//! - [`channel`]: i.i.d. Rayleigh channel realizations split into norm and direction.
//! - [`quantization`]: random vector quantization (RVQ) codebooks and the
//!   decomposition of a channel direction into quantized part plus residual.
//! - [`precoding`]: the modulo operator, TH precoder construction under perfect
//!   and quantized CSI, the transmit/receive chain, the zero-forcing baseline and
//!   per-user SNR/SINR.
//! - [`analysis`]: closed-form densities, expectations, rate bounds and
//!   feedback-scaling rules.
//! - [`harness`]: the Monte Carlo engine, statistical tests, configuration,
//!   CSV output and figure reproduction.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod precoding;
pub mod quantization;

pub use error::{Error, Result};
pub use num_complex::Complex64;

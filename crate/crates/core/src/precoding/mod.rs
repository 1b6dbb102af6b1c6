//! TH precoding: modulo arithmetic, precoder construction, the transmit and
//! receive chain, the zero-forcing baseline and per-user SINR.

pub mod constellation;
pub mod sinr;
pub mod th;
pub mod zf;

pub use constellation::{detect, mod_tau, Constellation};
pub use sinr::{
    interference_factors, perfect_terms, quantized_terms, quantized_terms_for, sinr_perfect,
    sinr_quantized, QuantizedTerms, SinrTerms,
};
pub use th::{
    build_perfect, build_quantized, leakage_term, th_encode, transmit_receive, transmit_signal,
    CsiMode, PrecoderSet, TxFrame,
};
pub use zf::{build_zf, zf_sinr, zf_terms};

//! Monte Carlo engine, statistical tests, configuration, CSV output,
//! validation suite and figure reproduction.

pub mod config;
pub mod csv;
pub mod reproduce;
pub mod stats;
pub mod sweep;
pub mod validation;

pub use config::{
    parse_bits_list, parse_schemes, parse_snr_grid, ConfigOverrides, ExperimentConfig, Scaling,
    ScalingRule, Scheme,
};
pub use csv::{parse_rate_csv, rate_csv_string, write_rate_csv, RateRecord, RATE_HEADER};
pub use reproduce::{reproduce, Figure, Reproduction};
pub use stats::{ks_critical, ks_critical_two, ks_statistic, ks_two_sample, Accumulator};
pub use sweep::{run_scaled_feedback, run_sweep, ScaledResult, SweepResult};
pub use validation::{run_validation, Scale, ValidationReport};

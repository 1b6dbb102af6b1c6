//! Rate tables as CSV.
//!
//! Header: `scheme,P_dB,B,user_index,mean_rate_bits,stderr,trials,resampled`.
//! Aggregate rows carry `user_index = -1`; perfect-CSI rows carry `B = -1`.

use std::fmt::Write as _;
use std::io::Write;

use super::config::Scheme;
use crate::error::{Error, Result};

pub const RATE_HEADER: &str = "scheme,P_dB,B,user_index,mean_rate_bits,stderr,trials,resampled";

#[derive(Debug, Clone, PartialEq)]
pub struct RateRecord {
    pub scheme: Scheme,
    pub p_db: f64,
    pub bits: Option<u32>,
    /// `None` for the across-user mean.
    pub user_index: Option<usize>,
    pub mean_rate_bits: f64,
    pub stderr: f64,
    pub trials: usize,
    pub resampled: usize,
}

fn signed<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-1".to_string(), |x| x.to_string())
}

/// Renders records under [`RATE_HEADER`].
pub fn rate_csv_string(records: &[RateRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(RATE_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.scheme,
            r.p_db,
            signed(r.bits),
            signed(r.user_index),
            r.mean_rate_bits,
            r.stderr,
            r.trials,
            r.resampled
        );
    }
    s
}

pub fn write_rate_csv<W: Write>(mut w: W, records: &[RateRecord]) -> Result<()> {
    w.write_all(rate_csv_string(records).as_bytes())?;
    Ok(())
}

fn optional(field: &str, line: usize, name: &str) -> Result<Option<u64>> {
    match field {
        "-1" => Ok(None),
        f => f
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Error::parse(line, format!("invalid {name} '{f}'"))),
    }
}

fn real(field: &str, line: usize, name: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::parse(line, format!("invalid {name} '{field}'")))
}

fn count(field: &str, line: usize, name: &str) -> Result<usize> {
    field
        .parse::<usize>()
        .map_err(|_| Error::parse(line, format!("invalid {name} '{field}'")))
}

/// Parses a rate table written by [`write_rate_csv`].
pub fn parse_rate_csv(text: &str) -> Result<Vec<RateRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == RATE_HEADER => {}
        Some((_, h)) => return Err(Error::parse(1, format!("unexpected header '{h}'"))),
        None => return Err(Error::parse(1, "missing header")),
    }
    let mut out = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let raw = raw.trim_end();
        if raw.is_empty() {
            continue;
        }
        let f: Vec<&str> = raw.split(',').collect();
        let [scheme, p, b, u, mean, se, trials, resampled] = f.as_slice() else {
            return Err(Error::parse(
                line,
                format!("expected 8 fields, got {}", f.len()),
            ));
        };
        let scheme: Scheme = scheme
            .parse()
            .map_err(|_| Error::parse(line, format!("unknown scheme '{scheme}'")))?;
        let bits = optional(b, line, "B")?
            .map(|x| u32::try_from(x).map_err(|_| Error::parse(line, "B out of range")))
            .transpose()?;
        if scheme.is_quantized() != bits.is_some() {
            return Err(Error::parse(
                line,
                "B must be -1 exactly for perfect-CSI schemes",
            ));
        }
        let user_index = optional(u, line, "user_index")?
            .map(|x| usize::try_from(x).map_err(|_| Error::parse(line, "user_index out of range")))
            .transpose()?;
        let rec = RateRecord {
            scheme,
            p_db: real(p, line, "P_dB")?,
            bits,
            user_index,
            mean_rate_bits: real(mean, line, "mean_rate_bits")?,
            stderr: real(se, line, "stderr")?,
            trials: count(trials, line, "trials")?,
            resampled: count(resampled, line, "resampled")?,
        };
        if rec.mean_rate_bits < 0.0 || rec.stderr < 0.0 {
            return Err(Error::parse(
                line,
                "rates and standard errors must be non-negative",
            ));
        }
        out.push(rec);
    }
    Ok(out)
}

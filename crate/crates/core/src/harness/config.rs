//! Experiment configuration and its plain-text `key = value` format.
//!
//! ```text
//! # 4x4 system, three codebook sizes
//! nt = 4
//! k = 4
//! bits = 4,8,15
//! snr_db = 0:5:40
//! schemes = th_perfect,th_quantized
//! ```
//!
//! Recognized keys: `nt`, `k`, `m`, `bits`, `snr_db`, `trials`, `seed`,
//! `schemes`, `out`, `b`, `eps`, `codebook`, `rvq`, `workers`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::quantization::{CodebookMode, RvqMethod, MAX_CODEBOOK_BITS, MAX_SAMPLED_BITS};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRIALS: usize = 10_000;
const MAX_GRID_POINTS: usize = 10_000;

/// A simulated transmission scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    ThPerfect,
    ThQuantized,
    ZfPerfect,
    ZfQuantized,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::ThPerfect,
        Scheme::ThQuantized,
        Scheme::ZfPerfect,
        Scheme::ZfQuantized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::ThPerfect => "th_perfect",
            Scheme::ThQuantized => "th_quantized",
            Scheme::ZfPerfect => "zf_perfect",
            Scheme::ZfQuantized => "zf_quantized",
        }
    }

    pub fn is_quantized(self) -> bool {
        matches!(self, Scheme::ThQuantized | Scheme::ZfQuantized)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s.trim())
            .ok_or_else(|| Error::config(format!("unknown scheme '{}'", s.trim())))
    }
}

/// Which closed form turns an allowed gap into feedback bits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ScalingRule {
    /// [`feedback_scaling_th`](crate::analysis::feedback_scaling_th).
    #[default]
    Printed,
    /// [`feedback_scaling_th_inverted`](crate::analysis::feedback_scaling_th_inverted).
    Inverted,
}

impl FromStr for ScalingRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "printed" => Ok(ScalingRule::Printed),
            "inverted" => Ok(ScalingRule::Inverted),
            other => Err(Error::config(format!("unknown scaling rule '{other}'"))),
        }
    }
}

/// Parameters of the feedback-scaling rule: allowed gap `log2 b` and slack `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub b: f64,
    pub eps: f64,
    pub rule: ScalingRule,
}

impl Scaling {
    pub fn new(b: f64, eps: f64) -> Self {
        Scaling {
            b,
            eps,
            rule: ScalingRule::Printed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_t: usize,
    pub k: usize,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub snr_db: Vec<f64>,
    pub bits: Vec<u32>,
    pub schemes: Vec<Scheme>,
    pub scaling: Option<Scaling>,
    pub out: Option<PathBuf>,
    pub codebook: CodebookMode,
    pub rvq: RvqMethod,
    /// Worker threads; `None` uses all cores.
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_t: 4,
            k: 4,
            m: 4,
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            snr_db: (0..=8).map(|i| 5.0 * i as f64).collect(),
            bits: vec![4, 8, 15],
            schemes: Scheme::ALL.to_vec(),
            scaling: None,
            out: None,
            codebook: CodebookMode::PerUser,
            rvq: RvqMethod::DEFAULT_AUTO,
            workers: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n_t {
            return Err(Error::config(format!(
                "need 1 <= k <= nt, got k={}, nt={}",
                self.k, self.n_t
            )));
        }
        if self.n_t < 2 {
            return Err(Error::config("nt must be at least 2"));
        }
        let side = (self.m as f64).sqrt().round() as usize;
        if self.m < 4 || side * side != self.m {
            return Err(Error::config(format!(
                "m must be a square >= 4, got {}",
                self.m
            )));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("snr_db grid must be non-empty and finite"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("at least one scheme is required"));
        }
        if self.schemes.iter().any(|s| s.is_quantized())
            && self.scaling.is_none()
            && self.bits.is_empty()
        {
            return Err(Error::config(
                "quantized schemes need a non-empty bits grid",
            ));
        }
        let explicit_limit = match (self.codebook, self.rvq) {
            (CodebookMode::Shared, _) | (_, RvqMethod::Explicit) => MAX_CODEBOOK_BITS,
            _ => MAX_SAMPLED_BITS,
        };
        if let Some(&b) = self.bits.iter().find(|&&b| b > explicit_limit) {
            return Err(Error::config(format!(
                "bits={b} exceeds the limit of {explicit_limit} for this codebook mode"
            )));
        }
        if self.codebook == CodebookMode::Shared && self.rvq == RvqMethod::Sampled {
            return Err(Error::config("rvq=sampled requires codebook=per_user"));
        }
        if self.codebook == CodebookMode::Shared {
            if let Some(&b) = self
                .bits
                .iter()
                .find(|&&b| b < 64 && (1u64 << b) < self.k as u64)
            {
                return Err(Error::config(format!(
                    "a shared codebook with bits={b} has fewer than k={} codewords",
                    self.k
                )));
            }
        }
        if let Some(s) = self.scaling {
            if !(s.b > 1.0 && s.b.is_finite()) || !(s.eps >= 0.0 && s.eps.is_finite()) {
                return Err(Error::config(format!(
                    "invalid scaling parameters b={}, eps={}",
                    s.b, s.eps
                )));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers must be at least 1"));
        }
        Ok(())
    }

    /// Applies every field set in `o`.
    pub fn apply(&mut self, o: &ConfigOverrides) {
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = &o.$f { self.$f = v.clone(); })*};
        }
        set!(n_t, k, m, trials, seed, snr_db, bits, schemes, codebook, rvq);
        if let Some(p) = &o.out {
            self.out = Some(p.clone());
        }
        if let Some(w) = o.workers {
            self.workers = Some(w);
        }
        if o.b.is_some() || o.eps.is_some() || o.scaling_rule.is_some() {
            let cur = self.scaling.unwrap_or(Scaling::new(3.0, 0.0));
            self.scaling = Some(Scaling {
                b: o.b.unwrap_or(cur.b),
                eps: o.eps.unwrap_or(cur.eps),
                rule: o.scaling_rule.unwrap_or(cur.rule),
            });
        }
    }
}

/// A partial configuration, as read from a file or the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub n_t: Option<usize>,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub snr_db: Option<Vec<f64>>,
    pub bits: Option<Vec<u32>>,
    pub schemes: Option<Vec<Scheme>>,
    pub out: Option<PathBuf>,
    pub b: Option<f64>,
    pub eps: Option<f64>,
    pub scaling_rule: Option<ScalingRule>,
    pub codebook: Option<CodebookMode>,
    pub rvq: Option<RvqMethod>,
    pub workers: Option<usize>,
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(format!("invalid value '{v}' for {key}")))
}

impl ConfigOverrides {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut o = ConfigOverrides::default();
        let mut seen: Vec<String> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(line_no, format!("expected key = value, got '{line}'"))
            })?;
            let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
            if seen.contains(&key) {
                return Err(Error::parse(line_no, format!("duplicate key '{key}'")));
            }
            o.set(&key, value).map_err(|e| match e {
                Error::Config(m) => Error::parse(line_no, m),
                other => other,
            })?;
            seen.push(key);
        }
        Ok(o)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "nt" | "n_t" => self.n_t = Some(num(key, value)?),
            "k" => self.k = Some(num(key, value)?),
            "m" => self.m = Some(num(key, value)?),
            "trials" => self.trials = Some(num(key, value)?),
            "seed" => self.seed = Some(num(key, value)?),
            "snr_db" => self.snr_db = Some(parse_snr_grid(value)?),
            "bits" => self.bits = Some(parse_bits_list(value)?),
            "schemes" => self.schemes = Some(parse_schemes(value)?),
            "out" => {
                if value.is_empty() {
                    return Err(Error::config("out must not be empty"));
                }
                self.out = Some(PathBuf::from(value))
            }
            "b" => self.b = Some(finite(key, value)?),
            "eps" => self.eps = Some(finite(key, value)?),
            "scaling_rule" => self.scaling_rule = Some(value.parse()?),
            "codebook" => self.codebook = Some(value.parse()?),
            "rvq" => self.rvq = Some(value.parse()?),
            "workers" => self.workers = Some(num(key, value)?),
            other => return Err(Error::config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }
}

fn finite(key: &str, v: &str) -> Result<f64> {
    let x: f64 = num(key, v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::config(format!("{key} must be finite")))
    }
}

/// Parses an SNR grid in dB: `start:step:stop` (inclusive), a comma list, or
/// a single value.
pub fn parse_snr_grid(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, st, b] = parts.as_slice() else {
            return Err(Error::config(format!(
                "expected start:step:stop, got '{s}'"
            )));
        };
        let (start, step, stop) = (
            finite("snr_db", a.trim())?,
            finite("snr_db", st.trim())?,
            finite("snr_db", b.trim())?,
        );
        if !(step > 0.0) || stop < start {
            return Err(Error::config(format!("invalid SNR range '{s}'")));
        }
        let count = ((stop - start) / step + 1e-9).floor() + 1.0;
        if count > MAX_GRID_POINTS as f64 {
            return Err(Error::config(format!(
                "SNR range '{s}' has too many points"
            )));
        }
        return Ok((0..count as usize)
            .map(|i| start + step * i as f64)
            .collect());
    }
    let v: Vec<f64> = s
        .split(',')
        .map(|t| finite("snr_db", t.trim()))
        .collect::<Result<_>>()?;
    if v.len() > MAX_GRID_POINTS {
        return Err(Error::config("SNR list has too many points"));
    }
    Ok(v)
}

/// Parses feedback bits: a comma list, `start:stop`, or `start:step:stop`.
pub fn parse_bits_list(s: &str) -> Result<Vec<u32>> {
    let s = s.trim();
    if s.contains(':') {
        let parts: Vec<u32> = s
            .split(':')
            .map(|t| num("bits", t.trim()))
            .collect::<Result<_>>()?;
        let (start, step, stop) = match parts.as_slice() {
            [a, b] => (*a, 1, *b),
            [a, st, b] => (*a, *st, *b),
            _ => return Err(Error::config(format!("invalid bits range '{s}'"))),
        };
        if step == 0 || stop < start || stop > MAX_SAMPLED_BITS {
            return Err(Error::config(format!("invalid bits range '{s}'")));
        }
        return Ok((start..=stop).step_by(step as usize).collect());
    }
    let v: Vec<u32> = s
        .split(',')
        .map(|t| num("bits", t.trim()))
        .collect::<Result<_>>()?;
    if let Some(b) = v.iter().find(|&&b| b > MAX_SAMPLED_BITS) {
        return Err(Error::config(format!("bits={b} is out of range")));
    }
    if v.len() > MAX_GRID_POINTS {
        return Err(Error::config("bits list has too many entries"));
    }
    Ok(v)
}

/// Parses a comma-separated scheme list or `all`; duplicates are dropped.
pub fn parse_schemes(s: &str) -> Result<Vec<Scheme>> {
    if s.trim() == "all" {
        return Ok(Scheme::ALL.to_vec());
    }
    let mut v = Vec::new();
    for t in s.split(',') {
        let sc: Scheme = t.parse()?;
        if !v.contains(&sc) {
            v.push(sc);
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_snr_grid("0:5:40").unwrap().len(), 9);
        assert_eq!(parse_snr_grid("0:5:42").unwrap().last(), Some(&40.0));
        assert_eq!(parse_snr_grid("10, 20").unwrap(), vec![10.0, 20.0]);
        assert_eq!(parse_snr_grid("25").unwrap(), vec![25.0]);
        assert!(parse_snr_grid("0:0:10").is_err());
        assert!(parse_snr_grid("10:1:0").is_err());
        assert!(parse_snr_grid("0:5").is_err());
        assert!(parse_snr_grid("x").is_err());
        assert!(parse_snr_grid("0:1e-9:1e9").is_err());
        assert!(parse_snr_grid("nan").is_err());

        assert_eq!(
            parse_bits_list("2:16").unwrap(),
            (2..=16).collect::<Vec<_>>()
        );
        assert_eq!(parse_bits_list("4,8,15").unwrap(), vec![4, 8, 15]);
        assert_eq!(parse_bits_list("8:2:14").unwrap(), vec![8, 10, 12, 14]);
        assert!(parse_bits_list("-1").is_err());
        assert!(parse_bits_list("4:2").is_err());
    }

    #[test]
    fn schemes() {
        assert_eq!(parse_schemes("all").unwrap(), Scheme::ALL.to_vec());
        assert_eq!(
            parse_schemes("zf_perfect,th_perfect,zf_perfect").unwrap(),
            vec![Scheme::ZfPerfect, Scheme::ThPerfect]
        );
        assert!(parse_schemes("dpc").is_err());
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
    }

    #[test]
    fn config_file() {
        let text = "# comment\nnt = 4\nk=2 # inline\n\nbits = 4,8\nsnr_db = 0:10:40\nschemes = th_quantized\nb = 3\ncodebook = shared\nrvq = explicit\n";
        let o = ConfigOverrides::parse(text).unwrap();
        let mut c = ExperimentConfig::default();
        c.apply(&o);
        assert_eq!(c.k, 2);
        assert_eq!(c.bits, vec![4, 8]);
        assert_eq!(c.snr_db.len(), 5);
        assert_eq!(c.schemes, vec![Scheme::ThQuantized]);
        assert_eq!(c.scaling, Some(Scaling::new(3.0, 0.0)));
        assert_eq!(c.codebook, CodebookMode::Shared);
        c.validate().unwrap();
    }

    #[test]
    fn config_errors_carry_line_numbers() {
        assert!(matches!(
            ConfigOverrides::parse("nt = 4\nfoo = 1"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ConfigOverrides::parse("nt 4"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            ConfigOverrides::parse("k=1\nk=2"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ConfigOverrides::parse("trials = -3"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::default();
        c.validate().unwrap();
        c.k = 5;
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            trials: 0,
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig {
            codebook: CodebookMode::Shared,
            bits: vec![30],
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
        c.bits = vec![1];
        assert!(c.validate().is_err());
        c.bits = vec![2];
        c.validate().unwrap();
        let c = ExperimentConfig {
            bits: vec![40],
            ..ExperimentConfig::default()
        };
        c.validate().unwrap();
    }
}

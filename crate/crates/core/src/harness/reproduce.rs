//! Figure reproduction: CSV tables plus a matplotlib script per figure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::config::{ExperimentConfig, Scaling, Scheme};
use super::csv::{rate_csv_string, RateRecord};
use super::sweep::{db_gap, paired_difference, run_scaled_feedback, run_sweep};
use crate::analysis::{
    db_to_linear, rate_loss_upper_bound, zf_rate_loss_upper_bound, SystemParams,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Rate against SNR with feedback bits scaled with the SNR (`b` = 3 and 4).
    Fig2,
    /// Rate against SNR for every scheme and `B` ∈ {4, 8, 15}.
    Fig3,
    /// Rate loss against `B` ∈ {2..16} at 25 dB, with both loss bounds.
    Fig4,
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            other => Err(Error::config(format!("unknown figure '{other}'"))),
        }
    }
}

fn default_snr_grid() -> Vec<f64> {
    (0..=8).map(|i| 5.0 * i as f64).collect()
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    fs::write(&p, contents)?;
    Ok(p)
}

/// One row of the fig2 gap table.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub b: f64,
    pub p_db: f64,
    pub bits: u32,
    pub perfect: f64,
    pub quantized: f64,
    pub rate_gap: f64,
    pub rate_gap_stderr: f64,
    /// Horizontal distance to the perfect-CSI curve; `None` off the curve's range.
    pub db_gap: Option<f64>,
}

/// One row of the fig4 loss table.
#[derive(Debug, Clone, PartialEq)]
pub struct LossRow {
    pub bits: u32,
    pub th_loss: f64,
    pub th_stderr: f64,
    pub zf_loss: f64,
    pub zf_stderr: f64,
    pub th_bound: f64,
    pub zf_bound: f64,
}

/// What a reproduction produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Reproduction {
    pub files: Vec<PathBuf>,
    pub gaps: Vec<GapRow>,
    pub losses: Vec<LossRow>,
}

/// Runs `figure` with the system, trial and seed settings of `base` and writes
/// its tables and plot script into `dir`.
pub fn reproduce(figure: Figure, base: &ExperimentConfig, dir: &Path) -> Result<Reproduction> {
    fs::create_dir_all(dir)?;
    match figure {
        Figure::Fig2 => fig2(base, dir),
        Figure::Fig3 => fig3(base, dir),
        Figure::Fig4 => fig4(base, dir),
    }
}

fn fig2(base: &ExperimentConfig, dir: &Path) -> Result<Reproduction> {
    let mut out = Reproduction::default();
    let base_scaling = base.scaling.unwrap_or(Scaling::new(3.0, 0.0));
    for b in [3.0, 4.0] {
        let cfg = ExperimentConfig {
            snr_db: default_snr_grid(),
            scaling: Some(Scaling { b, ..base_scaling }),
            ..base.clone()
        };
        let r = run_scaled_feedback(&cfg)?;
        out.files.push(write(
            dir,
            &format!("fig2_b{b}.csv"),
            &rate_csv_string(&r.sweep.records()),
        )?);
        let curves = r.curves()?;
        let perfect: Vec<(f64, f64)> = curves.iter().map(|c| (c.0, c.1)).collect();
        for (c, &bits) in curves.iter().zip(&r.bits) {
            out.gaps.push(GapRow {
                b,
                p_db: c.0,
                bits,
                perfect: c.1,
                quantized: c.2,
                rate_gap: c.3.mean(),
                rate_gap_stderr: c.3.stderr(),
                db_gap: db_gap(&perfect, c.0, c.2),
            });
        }
    }
    let mut s =
        String::from("b,P_dB,B,perfect_rate,quantized_rate,rate_gap,rate_gap_stderr,db_gap\n");
    for g in &out.gaps {
        let db = g
            .db_gap
            .map_or_else(|| "nan".to_string(), |x| x.to_string());
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            g.b, g.p_db, g.bits, g.perfect, g.quantized, g.rate_gap, g.rate_gap_stderr, db
        );
    }
    out.files.push(write(dir, "fig2_gap.csv", &s)?);
    out.files.push(write(dir, "fig2_plot.py", FIG2_PLOT)?);
    Ok(out)
}

/// Configuration of the fig3 sweep derived from `base`.
pub fn fig3_config(base: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        snr_db: default_snr_grid(),
        bits: vec![4, 8, 15],
        schemes: Scheme::ALL.to_vec(),
        ..base.clone()
    }
}

fn fig3(base: &ExperimentConfig, dir: &Path) -> Result<Reproduction> {
    let r = run_sweep(&fig3_config(base))?;
    let files = vec![
        write(dir, "fig3.csv", &rate_csv_string(&r.records()))?,
        write(dir, "fig3_plot.py", FIG3_PLOT)?,
    ];
    Ok(Reproduction {
        files,
        ..Reproduction::default()
    })
}

fn fig4(base: &ExperimentConfig, dir: &Path) -> Result<Reproduction> {
    let p_db = 25.0;
    let cfg = ExperimentConfig {
        snr_db: vec![p_db],
        bits: (2..=16).collect(),
        schemes: Scheme::ALL.to_vec(),
        ..base.clone()
    };
    let r = run_sweep(&cfg)?;
    let records: Vec<RateRecord> = r.records();
    let mut out = Reproduction::default();
    out.files
        .push(write(dir, "fig4_rates.csv", &rate_csv_string(&records))?);
    let th_p = r
        .cell(Scheme::ThPerfect, p_db, None)
        .expect("perfect TH cell");
    let zf_p = r
        .cell(Scheme::ZfPerfect, p_db, None)
        .expect("perfect ZF cell");
    for &bits in &cfg.bits {
        let th = paired_difference(
            th_p,
            r.cell(Scheme::ThQuantized, p_db, Some(bits)).expect("cell"),
        )?;
        let zf = paired_difference(
            zf_p,
            r.cell(Scheme::ZfQuantized, p_db, Some(bits)).expect("cell"),
        )?;
        out.losses.push(LossRow {
            bits,
            th_loss: th.mean(),
            th_stderr: th.stderr(),
            zf_loss: zf.mean(),
            zf_stderr: zf.stderr(),
            th_bound: rate_loss_upper_bound(&SystemParams::new(
                cfg.n_t, cfg.k, cfg.m, bits, p_db,
            )?)?,
            zf_bound: zf_rate_loss_upper_bound(cfg.n_t, bits, db_to_linear(p_db))?,
        });
    }
    let mut s = String::from("B,th_loss,th_stderr,zf_loss,zf_stderr,th_bound,zf_bound\n");
    for l in &out.losses {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            l.bits, l.th_loss, l.th_stderr, l.zf_loss, l.zf_stderr, l.th_bound, l.zf_bound
        );
    }
    out.files.push(write(dir, "fig4_loss.csv", &s)?);
    out.files.push(write(dir, "fig4_plot.py", FIG4_PLOT)?);
    Ok(out)
}

const FIG2_PLOT: &str = r#"import csv
import sys

import matplotlib.pyplot as plt

rows = list(csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "fig2_gap.csv")))
for b in sorted({r["b"] for r in rows}):
    sel = [r for r in rows if r["b"] == b]
    p = [float(r["P_dB"]) for r in sel]
    if b == sorted({r["b"] for r in rows})[0]:
        plt.plot(p, [float(r["perfect_rate"]) for r in sel], "k-", label="TH, perfect CSI")
    plt.plot(p, [float(r["quantized_rate"]) for r in sel], "o--", label=f"TH, scaled feedback, b={b}")
plt.xlabel("P (dB)")
plt.ylabel("average rate per user (bits)")
plt.grid(True)
plt.legend()
plt.savefig("fig2.png", dpi=150)
"#;

const FIG3_PLOT: &str = r#"import csv
import sys

import matplotlib.pyplot as plt

rows = [r for r in csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "fig3.csv")) if r["user_index"] == "-1"]
series = {}
for r in rows:
    key = r["scheme"] if r["B"] == "-1" else f'{r["scheme"]} B={r["B"]}'
    series.setdefault(key, []).append((float(r["P_dB"]), float(r["mean_rate_bits"])))
for key, pts in sorted(series.items()):
    pts.sort()
    plt.plot([p for p, _ in pts], [v for _, v in pts], marker="o", label=key)
plt.xlabel("P (dB)")
plt.ylabel("average rate per user (bits)")
plt.grid(True)
plt.legend(fontsize="small")
plt.savefig("fig3.png", dpi=150)
"#;

const FIG4_PLOT: &str = r#"import csv
import sys

import matplotlib.pyplot as plt

rows = list(csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "fig4_loss.csv")))
b = [int(r["B"]) for r in rows]
for col, style, label in [
    ("th_loss", "o-", "TH, simulated"),
    ("th_bound", "--", "TH, upper bound"),
    ("zf_loss", "s-", "ZF, simulated"),
    ("zf_bound", ":", "ZF, upper bound"),
]:
    plt.plot(b, [float(r[col]) for r in rows], style, label=label)
plt.xlabel("feedback bits B")
plt.ylabel("rate loss per user (bits)")
plt.grid(True)
plt.legend()
plt.savefig("fig4.png", dpi=150)
"#;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thp_core::analysis::{
    db_to_linear, expected_log2_cos2, expected_neg_log2_interference, feedback_scaling_th,
    feedback_scaling_th_inverted, feedback_scaling_zf, kershaw_j_bound, rate_loss_upper_bound,
    sum_rate_upper_bound, zf_rate_loss_upper_bound, SystemParams,
};
use thp_core::harness::{
    rate_csv_string, reproduce, run_scaled_feedback, run_sweep, run_validation, ConfigOverrides,
    ExperimentConfig, Figure, Scale, Scaling,
};
use thp_core::Result;

/// Monte Carlo simulator for Tomlinson-Harashima precoding with limited feedback.
#[derive(Parser)]
#[command(name = "thp-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rate sweep over SNR, schemes and feedback bits.
    Simulate(Common),
    /// Rate sweep with feedback bits scaled with the SNR.
    Scaled(Common),
    /// Run the statistical self-checks; exits with 2 on any failure.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Small sample sizes (default).
        #[arg(long, conflicts_with = "full")]
        quick: bool,
        /// Full sample sizes.
        #[arg(long)]
        full: bool,
    },
    /// Regenerate the tables and plot script of one figure.
    Reproduce {
        /// fig2, fig3 or fig4.
        figure: String,
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate the closed-form bounds and expectations.
    Bounds(Common),
}

#[derive(Args)]
struct Common {
    /// key=value configuration file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nt: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    m: Option<String>,
    /// Feedback bits: list (4,8,15) or range (2:16).
    #[arg(long)]
    bits: Option<String>,
    /// SNR grid in dB: start:step:stop, list or single value.
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Comma-separated scheme names or "all".
    #[arg(long)]
    schemes: Option<String>,
    /// Output file (simulate, scaled, validate, bounds) or directory (reproduce).
    #[arg(long)]
    out: Option<String>,
    /// Scaling parameter `b` (> 1).
    #[arg(long)]
    b: Option<String>,
    /// Scaling slack `eps`.
    #[arg(long)]
    eps: Option<String>,
    /// Feedback scaling rule: printed or inverted.
    #[arg(long = "scaling-rule")]
    scaling_rule: Option<String>,
    /// shared or per_user.
    #[arg(long)]
    codebook: Option<String>,
    /// explicit, sampled or auto.
    #[arg(long)]
    rvq: Option<String>,
    #[arg(long)]
    workers: Option<String>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply(&ConfigOverrides::parse(&fs::read_to_string(path)?)?);
        }
        let mut o = ConfigOverrides::default();
        let flags = [
            ("nt", &self.nt),
            ("k", &self.k),
            ("m", &self.m),
            ("bits", &self.bits),
            ("snr_db", &self.snr_db),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("schemes", &self.schemes),
            ("out", &self.out),
            ("b", &self.b),
            ("eps", &self.eps),
            ("scaling_rule", &self.scaling_rule),
            ("codebook", &self.codebook),
            ("rvq", &self.rvq),
            ("workers", &self.workers),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                o.set(key, v)?;
            }
        }
        cfg.apply(&o);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn bounds_table(cfg: &ExperimentConfig) -> Result<String> {
    let mut s = String::from(
        "P_dB,B,E_neg_log2_eps,E_log2_cos2,kershaw_bound,th_loss_bound,zf_loss_bound,sum_rate_bound,B_zf,B_th,B_th_inverted\n",
    );
    let interference = if cfg.k > 1 {
        expected_neg_log2_interference(cfg.n_t, cfg.k)?
    } else {
        f64::NAN
    };
    let scaling = cfg.scaling.unwrap_or(Scaling::new(3.0, 0.0));
    for &p_db in &cfg.snr_db {
        for &bits in &cfg.bits {
            let params = SystemParams::new(cfg.n_t, cfg.k, cfg.m, bits, p_db)?;
            let n = params.codebook_size();
            let sum_rate = if cfg.k > 1 {
                sum_rate_upper_bound(cfg.n_t, cfg.k, bits)?
            } else {
                f64::NAN
            };
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                p_db,
                bits,
                interference,
                expected_log2_cos2(cfg.n_t, n)?,
                kershaw_j_bound(cfg.n_t, n)?,
                rate_loss_upper_bound(&params)?,
                zf_rate_loss_upper_bound(cfg.n_t, bits, db_to_linear(p_db))?,
                sum_rate,
                feedback_scaling_zf(cfg.n_t, p_db, scaling.b)?,
                feedback_scaling_th(&params, p_db, scaling.b, scaling.eps)?,
                feedback_scaling_th_inverted(&params, p_db, scaling.b, scaling.eps)?,
            ));
        }
    }
    Ok(s)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = c.config()?;
            let r = run_sweep(&cfg)?;
            emit(cfg.out.as_deref(), &rate_csv_string(&r.records()))?;
        }
        Command::Scaled(c) => {
            let mut cfg = c.config()?;
            if cfg.scaling.is_none() {
                cfg.scaling = Some(Scaling::new(3.0, 0.0));
            }
            let r = run_scaled_feedback(&cfg)?;
            emit(cfg.out.as_deref(), &rate_csv_string(&r.sweep.records()))?;
        }
        Command::Validate { common, full, .. } => {
            let cfg = common.config()?;
            let scale = if full { Scale::Full } else { Scale::Quick };
            let report = run_validation(cfg.seed, scale)?;
            emit(cfg.out.as_deref(), &report.render())?;
            return Ok(report.passed());
        }
        Command::Reproduce { figure, common } => {
            let figure: Figure = figure.parse()?;
            let cfg = common.config()?;
            let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
            for f in reproduce(figure, &cfg, &dir)?.files {
                println!("{}", f.display());
            }
        }
        Command::Bounds(c) => {
            let cfg = c.config()?;
            emit(cfg.out.as_deref(), &bounds_table(&cfg)?)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

//! `trv`: Monte Carlo tables, CLT diagnostics, expansion checks and daily
//! integrated-variance runs driven by a TOML configuration.

mod commands;
mod config;
mod manifest;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "trv", version, about = "Truncated realized variance experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summary statistics of every estimator for each configured cell.
    McTable(Common),
    /// Normalized estimation errors, their KS distance to N(0,1) and a histogram.
    CltHist(Common),
    /// Residual order of the truncated-moment expansions.
    OracleCheck(OracleArgs),
    /// Per-day estimates with pooled debiasing factors.
    DailyIv(Common),
    /// Raw increments and per-block integrated variance.
    Simulate(Common),
}

#[derive(Args, Clone)]
pub struct Common {
    /// TOML config, or a JSON manifest to replay.
    #[arg(long)]
    config: PathBuf,
    /// Existing output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of paths.
    #[arg(long)]
    paths: Option<usize>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Also write per-path estimates (mc-table only).
    #[arg(long)]
    per_path: bool,
}

#[derive(Args, Clone)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    /// Multiplies the jump coefficient of the predicted expansion.
    #[arg(long, hide = true, default_value_t = 1.0)]
    perturb_coefficient: f64,
}

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Usage = 1,
    Partial = 2,
    Band = 3,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(Status::Usage as u8) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::McTable(a) => {
            commands::run("mc-table", &a, |cfg, cells, out| commands::mc_table(cfg, cells, out, a.per_path))
        }
        Command::CltHist(a) => commands::run("clt-hist", &a, commands::clt_hist),
        Command::OracleCheck(a) => {
            let scale = a.perturb_coefficient;
            commands::run("oracle-check", &a.common, |cfg, _, out| commands::oracle_check(cfg, out, scale))
        }
        Command::DailyIv(a) => commands::run("daily-iv", &a, commands::daily_iv),
        Command::Simulate(a) => commands::run("simulate", &a, commands::simulate),
    };
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Status::Usage as u8)
        }
    }
}

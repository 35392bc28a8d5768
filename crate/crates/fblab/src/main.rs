use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use fblab::commands::{self, Outcome};
use fblab::config::parse_fraction;
use fblab::LabConfig;
use fblab_core::{OperatorKind, OperatorSpec64, SymMatrix};

#[derive(Parser)]
#[command(name = "fblab", version, about = "Free boundary laboratory: solve, diagnose, sweep and compare with oracles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write field, phase, summary and manifest.
    Solve {
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: Option<PathBuf>,
    },
    /// Compute regularity diagnostics for an existing solve result.
    Diagnose {
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
        #[arg(short = 'r', long = "results")]
        results: PathBuf,
    },
    /// Solve and diagnose for a list of spacings such as `1/32,1/64,1/128`.
    Sweep {
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
        #[arg(long = "h", value_name = "LIST")]
        h: String,
        #[arg(short = 'o', long = "out")]
        out: Option<PathBuf>,
    },
    /// Print the half-space coefficient and one-dimensional free boundary positions.
    Oracle {
        #[arg(long = "op")]
        op: String,
        #[arg(long = "lambda", default_value_t = 1.0)]
        lambda: f64,
        #[arg(long = "Lambda", default_value_t = 1.0)]
        big_lambda: f64,
        #[arg(long = "n", default_value_t = 2)]
        n: usize,
        /// Boundary values `b` for the one-dimensional problem.
        #[arg(long = "b", value_delimiter = ',', default_value = "0.125")]
        b: Vec<f64>,
        /// Bellman family as row-major matrices separated by `;`, e.g. `1,0,0,1;2,0,0,1`.
        #[arg(long = "family")]
        family: Option<String>,
        /// Also write the half-space oracle field to this directory.
        #[arg(long = "dump")]
        dump: Option<PathBuf>,
        #[arg(long = "h", default_value = "1/64")]
        h: String,
    },
}

fn output_dir(flag: Option<PathBuf>, cfg: &LabConfig) -> Result<PathBuf> {
    flag.or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| anyhow!("no output directory: pass -o or set output_dir in the config"))
}

fn parse_family(s: &str) -> Result<Vec<SymMatrix<f64>>> {
    s.split(';')
        .map(|m| {
            let rows: Vec<f64> = m.split(',').map(|v| v.trim().parse()).collect::<Result<_, _>>()?;
            let k = (rows.len() as f64).sqrt().round() as usize;
            Ok(SymMatrix::from_row_major(k, &rows)?)
        })
        .collect()
}

fn load(path: &Path) -> Result<LabConfig> {
    LabConfig::load(path)
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Solve { config, out } => {
            let cfg = load(&config)?;
            let dir = output_dir(out, &cfg)?;
            commands::cmd_solve(&cfg, &dir)
        }
        Command::Diagnose { config, results } => {
            let cfg = load(&config)?;
            commands::cmd_diagnose(&cfg, &results)?;
            Ok(Outcome::Converged)
        }
        Command::Sweep { config, h, out } => {
            let cfg = load(&config)?;
            let hs = commands::parse_h_list(&h)?;
            let dir = output_dir(out, &cfg)?;
            let (outcome, rows) = commands::cmd_sweep(&cfg, &hs, &dir)?;
            eprintln!("{} member runs written to {}", rows.len(), dir.display());
            Ok(outcome)
        }
        Command::Oracle { op, lambda, big_lambda, n, b, family, dump, h } => {
            let kind = OperatorKind::parse(&op).ok_or_else(|| anyhow!("unknown operator {op:?}"))?;
            let family = family.as_deref().map(parse_family).transpose()?.unwrap_or_default();
            let spec = OperatorSpec64::new(kind, lambda, big_lambda, family).context("invalid operator")?;
            print!("{}", commands::oracle_report(&spec, n, &b)?);
            if let Some(dir) = dump {
                commands::dump_oracle(&spec, n, parse_fraction(&h)?, &dir)?;
            }
            Ok(Outcome::Converged)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use corridor_cli::commands::default_free_config;
use corridor_cli::config::{digest_bytes, load_config};
use corridor_cli::{cmd_algebra_check, cmd_ensemble, cmd_evolve, cmd_free_propagator, RunReport, UsageError};

#[derive(Parser)]
#[command(name = "corridor", version, about = "Corridor path-integral dynamics: checks, propagation and ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Random seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory.
    #[arg(long, env = "CORRIDOR_OUT", default_value = "corridor-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Random group-law and cocycle trials.
    AlgebraCheck {
        #[command(flatten)]
        common: Common,
        /// Number of random trials.
        #[arg(long, alias = "samples", default_value_t = 10_000)]
        trials: usize,
    },
    /// Free propagator: slicing, closed form, boost integral, composition, covariance.
    FreePropagator {
        #[command(flatten)]
        common: Common,
        /// Scenario config (JSON); a built-in free-packet setup when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Propagate a packet along one corridor.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's corridor source: zeros, sample or file:<path>.
        #[arg(long)]
        corridor: Option<String>,
        /// Also run the Crank-Nicolson oracle and compare.
        #[arg(long)]
        oracle: bool,
    },
    /// Corridor-averaged density matrix: exact, Monte Carlo and master equation.
    Ensemble {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        config: PathBuf,
        /// Monte Carlo corridor samples.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Worker threads (0: one per core).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

fn run(cli: Cli) -> Result<(RunReport, PathBuf)> {
    let (report, out) = match cli.command {
        Command::AlgebraCheck { common, trials } => (cmd_algebra_check(trials, common.seed, &common.out)?, common.out),
        Command::FreePropagator { common, config } => {
            let (cfg, digest) = match config {
                Some(path) => {
                    let loaded = load_config(&path)?;
                    (loaded.config, loaded.digest)
                }
                None => {
                    let cfg = default_free_config();
                    let digest = digest_bytes(&serde_json::to_vec(&cfg)?);
                    (cfg, digest)
                }
            };
            (cmd_free_propagator(&cfg, digest, common.seed, &common.out)?, common.out)
        }
        Command::Evolve { common, config, corridor, oracle } => {
            let loaded = load_config(&config)?;
            (cmd_evolve(&loaded, corridor.as_deref(), oracle, common.seed, &common.out)?, common.out)
        }
        Command::Ensemble { common, config, samples, threads } => {
            let loaded = load_config(&config)?;
            (cmd_ensemble(&loaded, samples, common.seed, threads, &common.out)?, common.out)
        }
    };
    Ok((report, out))
}

fn write_report(report: &mut RunReport, out: &Path) -> Result<()> {
    let path = out.join("report.json");
    report.output(path.clone());
    report.write_json(&path)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok((mut report, out)) => {
            print!("{}", report.summary());
            if let Err(e) = write_report(&mut report, &out) {
                eprintln!("error: {e:#}");
                return ExitCode::from(3);
            }
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) if e.is::<UsageError>() => {
            eprintln!("usage error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

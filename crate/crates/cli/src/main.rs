use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mechsqueeze_cli::commands::{self, CliError};
use mechsqueeze_cli::config::RunConfig;
use mechsqueeze_cli::validate::ValidationLevel;

/// Dissipation-driven two-mode mechanical squeezing: simulation and
/// analytics. All rates are in units of the mechanical frequency.
#[derive(Parser)]
#[command(name = "mechsqueeze", version, about)]
struct Cli {
    /// Output directory (default: $MECHSQUEEZE_OUT, then the working dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every closed-form prediction for a configuration.
    Analytic {
        /// Run configuration file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulate the configured protocol and write the trajectory CSV.
    Simulate {
        /// Run configuration file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-run the configured protocol for each value of a named parameter.
    Sweep {
        /// Run configuration file (the sweep template).
        #[arg(long)]
        config: PathBuf,
        /// Parameter to sweep (n_th, kappa, gamma_m, g, j12, delta, e1, e2,
        /// chi1, chi2).
        #[arg(long)]
        axis: String,
        /// Comma-separated list of values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Worker threads for the sweep rows.
        #[arg(long, default_value_t = 4)]
        jobs: usize,
    },
    /// Run the validation campaign (analytic identities, oracle
    /// cross-checks, property suites).
    Validate {
        /// fast: < 1 minute; full: everything.
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
    },
}

fn out_dir(cli_out: Option<PathBuf>) -> PathBuf {
    cli_out
        .or_else(|| std::env::var_os("MECHSQUEEZE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn load_config(path: &PathBuf) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)?;
    Ok(RunConfig::parse(&text)?)
}

fn run() -> Result<bool, CliError> {
    let cli = Cli::parse();
    let out = out_dir(cli.out);
    let outcome = match cli.command {
        Command::Analytic { config } => {
            let cfg = load_config(&config)?;
            commands::cmd_analytic(&cfg, &out)?
        }
        Command::Simulate { config } => {
            let cfg = load_config(&config)?;
            commands::cmd_simulate(&cfg, &out)?
        }
        Command::Sweep {
            config,
            axis,
            values,
            jobs,
        } => {
            let cfg = load_config(&config)?;
            commands::cmd_sweep(&cfg, &axis, &values, jobs, &out)?
        }
        Command::Validate { level } => {
            let level = match level {
                LevelArg::Fast => ValidationLevel::Fast,
                LevelArg::Full => ValidationLevel::Full,
            };
            commands::cmd_validate(level, &out)?
        }
    };
    Ok(outcome.all_passed)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

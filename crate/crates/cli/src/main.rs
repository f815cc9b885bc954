use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use macgame_cli::commands::{render_result, render_table2, run_simulate, run_solve, run_table2, run_verify};
use macgame_cli::config::{load_config, OutputFormat};
use macgame_cli::output::{result_csv, simulation_csv, verify_csv};
use macgame_cli::{CliError, EXIT_NOT_CONVERGED};

/// Constrained Nash equilibria of power-control games on a fading
/// multiple-access channel.
#[derive(Parser)]
#[command(name = "macgame", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run best-response iteration and write result.csv, measures.csv and meta.json.
    Solve {
        /// TOML config file, or `preset:<name>` for a built-in preset.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: output.path from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report each user's best deviation gain against a measures file.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// measures.csv written by `solve`, or the directory holding it.
        #[arg(long)]
        result: PathBuf,
    },
    /// Simulate the policies of a measures file slot by slot.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        result: PathBuf,
        /// Number of slots (default: sim.horizon from the config).
        #[arg(long)]
        horizon: Option<u64>,
        /// RNG seed (default: sim.seed from the config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve all fourteen benchmark presets and compare with the reference throughputs.
    Table2 {
        #[arg(long, default_value = "results/table2")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve { config, out } => {
            let exp = load_config(&config)?;
            let outcome = run_solve(&exp, out.as_deref())?;
            match exp.config.output.format {
                OutputFormat::Table => {
                    print!("{}", render_result(&outcome.result));
                    println!("wrote {}", outcome.dir.display());
                }
                OutputFormat::Csv => print!("{}", result_csv(&outcome.result)),
            }
            Ok(if outcome.result.converged { 0 } else { EXIT_NOT_CONVERGED })
        }
        Command::Verify { config, result } => {
            let exp = load_config(&config)?;
            let report = run_verify(&exp, &result)?;
            print!("{}", verify_csv(&report));
            Ok(if report.is_cne() { 0 } else { EXIT_NOT_CONVERGED })
        }
        Command::Simulate { config, result, horizon, seed } => {
            let exp = load_config(&config)?;
            let horizon = horizon.unwrap_or(exp.config.sim.horizon);
            let seed = seed.unwrap_or(exp.config.sim.seed);
            let report = run_simulate(&exp, &result, horizon, seed)?;
            print!("{}", simulation_csv(&report));
            Ok(0)
        }
        Command::Table2 { out } => {
            let lines = run_table2(&out)?;
            print!("{}", render_table2(&lines));
            println!("wrote {}", out.join("table2.csv").display());
            Ok(if lines.iter().all(|l| l.converged) { 0 } else { EXIT_NOT_CONVERGED })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fanav_cli::{cmd_render_map, cmd_report, cmd_run, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "fanav", version, about = "Future-aware object navigation in simulated rooms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run episode suites and write results.csv plus per-episode traces.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        episodes: Option<usize>,
        /// static, dynamic, sudden or all
        #[arg(long)]
        scenario: Option<String>,
        /// Override a config key, e.g. --set beta=1
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print SR / SPL / DTG per scenario from a results directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Draw an affordance snapshot as a PPM image.
    RenderMap {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out, seed, episodes, scenario, sets, jobs } => {
            let opts = RunOptions { config, out: out.clone(), seed, episodes, scenario, sets, jobs };
            let rows = cmd_run(&opts)?;
            println!("wrote {} episodes to {}", rows.len(), out.join("results.csv").display());
        }
        Command::Report { input } => print!("{}", cmd_report(&input)?),
        Command::RenderMap { snapshot, out } => cmd_render_map(&snapshot, &out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

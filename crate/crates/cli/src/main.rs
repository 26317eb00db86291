use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use inertia_cli::{run, CliError, ExperimentConfig, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "inertia", version, about = "Simulate markets of inert investors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write its outputs.
    Run {
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "INERTIA_THREADS")]
        threads: Option<usize>,
        /// Output directory. Falls back to `output_dir` in the config, then
        /// `out/<kind>`.
        #[arg(long, env = "INERTIA_OUT_DIR")]
        out: Option<PathBuf>,
    },
    /// Check a config against every invariant without running it.
    Validate { config: PathBuf },
    /// Print the version.
    Version,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, seed, threads, out } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let out_dir = out
                .or_else(|| config.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out").join(config.kind.name()));
            let report = run(&config, &RunOptions { threads, out_dir })?;
            println!("{}", report.out_dir.join(inertia_cli::MANIFEST_FILE).display());
            Ok(())
        }
        Command::Validate { config } => {
            let config = ExperimentConfig::load(&config)?;
            for check in config.checks() {
                println!("{check}");
            }
            config.validate()
        }
        Command::Version => {
            println!("inertia {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use escobar_lab_cli::commands;
use escobar_lab_cli::config::RunConfig;
use escobar_lab_cli::error::CliError;

#[derive(Parser)]
#[command(name = "escobar-lab", version, about = "Spectral lab for the boundary Yamabe quotient on the unit ball")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Ambient dimension, 3 or 4.
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Harmonic truncation degree.
    #[arg(long = "L", global = true)]
    degree: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// DtN diagonal and Hessian spectrum at the reference state.
    Spectrum,
    /// Projected gradient flow for the boundary quotient.
    Minimize,
    /// Stability sweep around the constant on the flat ball.
    Sweep,
    /// Lyapunov-Schmidt reduction and Taylor probe.
    Reduce,
    /// Distance of a field or bubble file to the bubble family.
    Distance {
        /// Overrides `distance.input`.
        input: Option<PathBuf>,
    },
    /// Runs acceptance criteria, all by default.
    Verify {
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<usize>,
    },
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.out = out;
    }
    if let Some(n) = cli.n {
        config.n = n;
    }
    if let Some(l) = cli.degree {
        config.degree = l;
    }
    if let Ok(threads) = std::env::var("ESCOBAR_LAB_THREADS") {
        let threads: usize = threads
            .parse()
            .map_err(|_| CliError::Config(format!("ESCOBAR_LAB_THREADS must be an integer, got {threads:?}")))?;
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match cli.command {
        Command::Spectrum => commands::cmd_spectrum(&config),
        Command::Minimize => commands::cmd_minimize(&config),
        Command::Sweep => commands::cmd_sweep(&config),
        Command::Reduce => commands::cmd_reduce(&config),
        Command::Distance { input } => {
            if input.is_some() {
                config.distance.input = input;
            }
            commands::cmd_distance(&config)
        }
        Command::Verify { criteria } => {
            if !criteria.is_empty() {
                config.verify.criteria = criteria;
            }
            commands::cmd_verify(&config)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

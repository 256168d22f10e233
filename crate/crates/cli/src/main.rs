mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::Context;
use error::CliError;

/// Eigenvalue flows of Schrödinger operators on shrinking star-shaped domains.
#[derive(Parser)]
#[command(name = "spectral-flow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// experiment configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory; overrides `output.dir`
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// worker threads for the global pool
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// mesh determinism salt
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Build the mesh and write it as text plus a JSON summary.
    Mesh,
    /// Tabulate the lowest branches over the `t` grid as CSV.
    Flow,
    /// First derivatives and two-term asymptotics of one eigenvalue cluster.
    Derivative,
    /// Crossings, crossing forms and the Maslov index for `λ0`.
    Maslov,
    /// Run the acceptance suite.
    Verify {
        /// run only these criteria
        #[arg(long)]
        criterion: Vec<u8>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Mesh => "mesh",
            Command::Flow => "flow",
            Command::Derivative => "derivative",
            Command::Maslov => "maslov",
            Command::Verify { .. } => "verify",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation {
                field: "--threads".into(),
                line: None,
                message: "must be at least 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let loaded = match (&cli.command, &cli.config) {
        (Command::Verify { .. }, _) => None,
        (_, Some(path)) => Some(config::load(path)?),
        (_, None) => {
            return Err(CliError::Validation {
                field: "--config".into(),
                line: None,
                message: format!("required by `{}`", cli.command.name()),
            })
        }
    };
    let out = cli
        .out
        .clone()
        .or_else(|| loaded.as_ref().and_then(|l| l.output_dir().map(PathBuf::from)))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)?;
    let ctx = Context {
        command: cli.command.name(),
        out,
        seed: cli.seed,
        config_path: cli.config.clone(),
        started: Instant::now(),
    };
    match (&cli.command, loaded.as_ref()) {
        (Command::Verify { criterion }, _) => commands::verify(&ctx, criterion),
        (Command::Mesh, Some(c)) => commands::mesh(&ctx, c),
        (Command::Flow, Some(c)) => commands::flow(&ctx, c),
        (Command::Derivative, Some(c)) => commands::derivative(&ctx, c),
        (Command::Maslov, Some(c)) => commands::maslov(&ctx, c),
        _ => unreachable!("configuration loaded above"),
    }
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

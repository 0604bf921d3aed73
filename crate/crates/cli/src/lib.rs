//! `condensate` experiment runner: config parsing, subcommand dispatch and artifact writers.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "condensate",
    version,
    about = "Simulator and estimate lab for a degenerate fourth-order condensation equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one trajectory.
    Run(Target),
    /// Check the weighted inequalities on a seeded corpus.
    Verify(Target),
    /// Run a decreasing eps sequence and compare the members.
    Continuation(Target),
    /// Discrete residuals of the power-law stationary family.
    Steady(Target),
    /// Fan `run` out over a parameter grid.
    Sweep(Target),
}

#[derive(Debug, Args)]
pub struct Target {
    /// TOML config file.
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    fn target(&self) -> &Target {
        match self {
            Command::Run(t)
            | Command::Verify(t)
            | Command::Continuation(t)
            | Command::Steady(t)
            | Command::Sweep(t) => t,
        }
    }
}

pub fn dispatch(command: &Command) -> Result<i32, CliError> {
    let target = command.target();
    let cfg = RunConfig::load(&target.config)?;
    let out = cfg.out_dir(target.out.as_deref());
    match command {
        Command::Run(_) => commands::cmd_run(&cfg, &out),
        Command::Verify(_) => commands::cmd_verify(&cfg, &out),
        Command::Continuation(_) => commands::cmd_continuation(&cfg, &out),
        Command::Steady(_) => commands::cmd_steady(&cfg, &out),
        Command::Sweep(_) => commands::cmd_sweep(&cfg, &out),
    }
}

/// Runs a parsed command line; errors go to stderr as one JSON object.
pub fn execute(cli: &Cli) -> i32 {
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

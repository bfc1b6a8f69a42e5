//! Command-line pipeline around `surfdraw-core`: config loading, the map,
//! trajectory, recover, template and bench commands, and run manifests.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use error::{CliError, CliResult};

use cli::{Cli, Command};
use manifest::RunManifest;

/// Runs the parsed command line.
pub fn run(cli: &Cli) -> CliResult<RunManifest> {
    let cfg = cli.pipeline_config()?;
    let out = commands::resolve_out(cli.out.clone(), &cfg);
    match &cli.command {
        Command::Map { .. } => commands::cmd_map(&cfg, &out),
        Command::Trajectory { mapped, .. } => commands::cmd_trajectory(&cfg, mapped.as_deref(), &out),
        Command::Recover { planned, measured, .. } => commands::cmd_recover(&cfg, planned, measured, &out),
        Command::Template { .. } => commands::cmd_template(&cfg, &out),
        Command::Bench { .. } => commands::cmd_bench(&cfg, &out),
    }
}

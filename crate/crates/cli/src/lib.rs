//! Command-line shell around the harness evolution engine: argument and
//! config handling, run directories, and one function per subcommand.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod rundir;

use args::{Cli, Command};
use commands::Outcome;
use config::{FileConfig, RunConfig};
use error::CliError;

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let cfg = RunConfig::merge(&cli.common, file);
    match &cli.command {
        Command::Inner => commands::cmd_inner(&cfg),
        Command::Meta(a) => commands::cmd_meta(&cfg, a),
        Command::Report => commands::cmd_report(&cfg),
        Command::Oracle(a) => commands::cmd_oracle(&cfg, a),
        Command::Conformance(a) => commands::cmd_conformance(a),
        Command::Serve(a) => commands::cmd_serve(a),
        Command::Template(a) => commands::cmd_template(&cfg, a),
    }
}

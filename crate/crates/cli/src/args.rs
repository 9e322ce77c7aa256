//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "harness-evo",
    version,
    about = "Harness evolution and meta-evolution runner"
)]
pub struct Cli {
    /// TOML file with default values for any flag; flags given on the
    /// command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub common: CommonArgs,

    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by the run modes. Every field is optional here so that a
/// config file can fill it in.
#[derive(Debug, Default, Clone, Args)]
pub struct CommonArgs {
    /// Task file with exactly one task, or a bundled task id such as T1.
    #[arg(long, global = true)]
    pub task: Option<String>,

    /// Task file (JSON Lines), or `bundled` for the twelve bundled tasks.
    #[arg(long, global = true)]
    pub tasks: Option<String>,

    /// Blueprint file (JSON).
    #[arg(long, global = true)]
    pub blueprint: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Inner-loop iterations; overrides the blueprint.
    #[arg(short = 'K', global = true)]
    pub k: Option<u32>,

    /// Meta-loop rounds.
    #[arg(short = 'J', global = true)]
    pub j: Option<u32>,

    /// Parent directory for run directories.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Concurrent inner loops per meta round; not recorded in the blueprint.
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,

    /// Scalar score threshold in [0,1], e.g. 0.9 or 9/10.
    #[arg(long, global = true)]
    pub threshold: Option<String>,

    /// Continue an interrupted inner run from its log.
    #[arg(long, global = true)]
    pub resume: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the harness evolution loop on one task.
    Inner,
    /// Run the meta-evolution loop over a training task set.
    Meta(MetaArgs),
    /// Evaluate a blueprint on held-out tasks and write metrics.
    Report,
    /// Enumerate a finite harness space and record the best harness per task.
    Oracle(OracleArgs),
    /// Check an external agent against the wire protocol.
    Conformance(ConformanceArgs),
    /// Expose a builtin agent on standard input and output.
    Serve(ServeArgs),
    /// Print a builtin blueprint to standard output.
    Template(TemplateArgs),
}

#[derive(Debug, Default, Clone, Args)]
pub struct MetaArgs {
    /// Builtin meta strategy: hill_climb or exhaustive.
    #[arg(long)]
    pub meta_strategy: Option<String>,

    /// Blueprint space file (JSON), or `reference` for the bundled
    /// 12-blueprint space.
    #[arg(long)]
    pub meta_space: Option<String>,

    /// External meta-evolution agent command; replaces the builtin strategy.
    #[arg(long)]
    pub meta_agent: Option<String>,

    #[arg(long = "meta-agent-arg", allow_hyphen_values = true)]
    pub meta_agent_args: Vec<String>,
}

#[derive(Debug, Default, Clone, Args)]
pub struct OracleArgs {
    /// `core3`, `full`, or a space declaration file (JSON).
    #[arg(long)]
    pub space: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ConformanceArgs {
    /// Agent executable.
    #[arg(long)]
    pub agent: String,

    #[arg(long = "agent-arg", allow_hyphen_values = true)]
    pub agent_args: Vec<String>,

    #[arg(long, default_value_t = 5000)]
    pub timeout_ms: u64,

    /// Roles to check; all four when omitted.
    #[arg(long = "role")]
    pub roles: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub role: String,

    /// Strategy for the evolution or meta_evolution role.
    #[arg(long)]
    pub strategy: Option<String>,

    /// Harness space name for the evolution role.
    #[arg(long)]
    pub space: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct TemplateArgs {
    /// random, hill_climb or exhaustive.
    #[arg(long, default_value = "hill_climb")]
    pub strategy: String,

    /// Start from the rich harness instead of the minimal one.
    #[arg(long)]
    pub rich: bool,
}

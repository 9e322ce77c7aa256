//! Run configuration: command-line flags merged over an optional TOML
//! file, then resolved into validated inputs.
//!
//! Precedence is flag, then config file, then built-in default. The
//! config file accepts the flag names as keys (`K` and `J` in upper case)
//! plus `space`, `meta_space`, `meta_strategy` and `meta_agent`. Relative
//! paths are taken relative to the working directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use harness_evo_core::model::canonical;
use harness_evo_core::simkit::{corpus, HarnessSpace, MetaSpace, SpaceDeclaration};
use harness_evo_core::{Blueprint, BlueprintDocument, Rational, Task};

use crate::args::CommonArgs;
use crate::error::CliError;

pub const DEFAULT_OUT: &str = "runs";
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub task: Option<String>,
    pub tasks: Option<String>,
    pub blueprint: Option<PathBuf>,
    pub seed: Option<u64>,
    #[serde(rename = "K")]
    pub k: Option<u32>,
    #[serde(rename = "J")]
    pub j: Option<u32>,
    pub out: Option<PathBuf>,
    pub parallelism: Option<usize>,
    pub threshold: Option<String>,
    pub resume: Option<bool>,
    pub space: Option<String>,
    pub meta_space: Option<String>,
    pub meta_strategy: Option<String>,
    pub meta_agent: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
    }
}

/// Flags and file values after merging; still unvalidated.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub task: Option<String>,
    pub tasks: Option<String>,
    pub blueprint: Option<PathBuf>,
    pub seed: u64,
    pub k: Option<u32>,
    pub j: Option<u32>,
    pub out: PathBuf,
    pub parallelism: Option<usize>,
    pub threshold: Option<String>,
    pub resume: bool,
    pub space: Option<String>,
    pub meta_space: Option<String>,
    pub meta_strategy: Option<String>,
    pub meta_agent: Option<String>,
}

impl RunConfig {
    pub fn merge(flags: &CommonArgs, file: FileConfig) -> Self {
        RunConfig {
            task: flags.task.clone().or(file.task),
            tasks: flags.tasks.clone().or(file.tasks),
            blueprint: flags.blueprint.clone().or(file.blueprint),
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            k: flags.k.or(file.k),
            j: flags.j.or(file.j),
            out: flags
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            parallelism: flags.parallelism.or(file.parallelism),
            threshold: flags.threshold.clone().or(file.threshold),
            resume: flags.resume || file.resume.unwrap_or(false),
            space: file.space,
            meta_space: file.meta_space,
            meta_strategy: file.meta_strategy,
            meta_agent: file.meta_agent,
        }
    }

    pub fn threshold(&self) -> Result<Rational, CliError> {
        let text = self
            .threshold
            .as_deref()
            .ok_or_else(|| CliError::config("--threshold is required (no default)"))?;
        let t: Rational = text
            .parse()
            .map_err(|_| CliError::config(format!("threshold {text:?} is not a number")))?;
        if t.is_negative() || t > Rational::ONE {
            return Err(CliError::config(format!("threshold {t} is outside [0,1]")));
        }
        Ok(t)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// `--task`: a bundled id, or a file holding exactly one task.
pub fn load_task(spec: &str) -> Result<Task, CliError> {
    if let Some(t) = corpus::task(spec) {
        if !Path::new(spec).exists() {
            return Ok(t);
        }
    }
    let tasks = parse_task_file(Path::new(spec))?;
    match <[Task; 1]>::try_from(tasks) {
        Ok([t]) => Ok(t),
        Err(v) => Err(CliError::config(format!(
            "{spec}: expected one task, found {}",
            v.len()
        ))),
    }
}

/// `--tasks`: `bundled`, or a JSON Lines task file.
pub fn load_tasks(spec: &str) -> Result<Vec<Task>, CliError> {
    if spec == "bundled" && !Path::new(spec).exists() {
        return Ok(corpus::bundled());
    }
    parse_task_file(Path::new(spec))
}

fn parse_task_file(path: &Path) -> Result<Vec<Task>, CliError> {
    corpus::parse_tasks(&read(path)?)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Reads a blueprint, accepting either a bare blueprint or a document
/// written by a meta run. The provenance, when present, is returned too.
pub fn load_blueprint(path: &Path) -> Result<(Blueprint, Option<BlueprintDocument>), CliError> {
    let text = read(path)?;
    if let Ok(doc) = canonical::decode::<BlueprintDocument>(&text) {
        return Ok((doc.blueprint.clone(), Some(doc)));
    }
    let bp: Blueprint = canonical::decode(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok((bp, None))
}

/// `core3`, `full`, or a space declaration file.
pub fn load_space(spec: &str) -> Result<HarnessSpace, CliError> {
    if let Some(s) = HarnessSpace::by_name(spec) {
        return Ok(s);
    }
    let decl: SpaceDeclaration = canonical::decode(&read(Path::new(spec))?)
        .map_err(|e| CliError::config(format!("{spec}: {e}")))?;
    decl.to_space().map_err(|v| {
        CliError::config(format!(
            "{spec}: {}",
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; ")
        ))
    })
}

/// `reference`, or a blueprint space file.
pub fn load_meta_space(spec: &str) -> Result<MetaSpace, CliError> {
    let space = if spec == "reference" && !Path::new(spec).exists() {
        MetaSpace::reference()
    } else {
        canonical::decode(&read(Path::new(spec))?)
            .map_err(|e| CliError::config(format!("{spec}: {e}")))?
    };
    space.validate().map_err(|v| {
        CliError::config(format!(
            "{spec}: {}",
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; ")
        ))
    })?;
    Ok(space)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let flags = CommonArgs {
            seed: Some(3),
            ..Default::default()
        };
        let file: FileConfig = toml::from_str("seed = 9\nK = 4\nout = \"elsewhere\"").unwrap();
        let c = RunConfig::merge(&flags, file);
        assert_eq!(c.seed, 3);
        assert_eq!(c.k, Some(4));
        assert_eq!(c.out, PathBuf::from("elsewhere"));
    }

    #[test]
    fn unknown_config_key_rejected() {
        assert!(toml::from_str::<FileConfig>("sede = 1").is_err());
    }

    #[test]
    fn threshold_forms() {
        let mut c = RunConfig::default();
        assert!(c.threshold().is_err());
        c.threshold = Some("0.9".into());
        assert_eq!(c.threshold().unwrap(), Rational::new(9, 10));
        c.threshold = Some("9/10".into());
        assert_eq!(c.threshold().unwrap(), Rational::new(9, 10));
        c.threshold = Some("1.5".into());
        assert!(c.threshold().is_err());
    }

    #[test]
    fn bundled_task_ids_resolve() {
        assert_eq!(load_task("T3").unwrap().id, "T3");
        assert_eq!(load_tasks("bundled").unwrap().len(), 12);
        assert!(load_task("/no/such/file.jsonl").is_err());
    }
}

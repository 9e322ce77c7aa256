//! StringForge task files and the bundled corpus.
//!
//! A task file is JSON Lines, one flat record per task:
//! `{alphabet, criteria, id, instructions?, max_steps, start, target}`.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::worker::edit_distance;
use crate::model::{canonical, Criterion, EnvironmentSpec, Task, Violation};

const BUNDLED: &str = include_str!("corpus.jsonl");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFile {
    pub id: String,
    pub start: String,
    pub target: String,
    pub alphabet: String,
    pub max_steps: u32,
    pub criteria: Vec<Criterion>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub instructions: String,
}

impl From<TaskFile> for Task {
    fn from(f: TaskFile) -> Task {
        Task {
            id: f.id,
            instructions: f.instructions,
            criteria: f.criteria,
            environment: EnvironmentSpec {
                start: f.start,
                target: f.target,
                alphabet: f.alphabet,
                max_steps: f.max_steps,
            },
        }
    }
}

impl From<&Task> for TaskFile {
    fn from(t: &Task) -> TaskFile {
        TaskFile {
            id: t.id.clone(),
            start: t.environment.start.clone(),
            target: t.environment.target.clone(),
            alphabet: t.environment.alphabet.clone(),
            max_steps: t.environment.max_steps,
            criteria: t.criteria.clone(),
            instructions: t.instructions.clone(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("task {id:?}: {}", .violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid {
        id: String,
        violations: Vec<Violation>,
    },
    #[error("duplicate task id {0:?}")]
    DuplicateId(String),
}

/// Parses a JSON Lines task file. Blank lines are skipped; ids must be
/// unique and every task must pass structural validation.
pub fn parse_tasks(text: &str) -> Result<Vec<Task>, CorpusError> {
    let mut tasks = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let file: TaskFile = canonical::decode(line).map_err(|e| CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let task = Task::from(file);
        task.validate(false)
            .map_err(|violations| CorpusError::Invalid {
                id: task.id.clone(),
                violations,
            })?;
        if !ids.insert(task.id.clone()) {
            return Err(CorpusError::DuplicateId(task.id));
        }
        tasks.push(task);
    }
    Ok(tasks)
}

pub fn render_tasks(tasks: &[Task]) -> String {
    tasks
        .iter()
        .map(|t| canonical::to_canonical(&TaskFile::from(t)) + "\n")
        .collect()
}

/// The twelve bundled tasks, T1 to T12, in rough order of difficulty.
pub fn bundled() -> Vec<Task> {
    parse_tasks(BUNDLED).expect("bundled corpus is valid")
}

pub fn task(id: &str) -> Option<Task> {
    bundled().into_iter().find(|t| t.id == id)
}

pub fn make_task(id: &str, start: &str, target: &str, alphabet: &str, max_steps: u32) -> Task {
    Task {
        id: id.to_string(),
        instructions: format!("Turn {start:?} into {target:?} in at most {max_steps} steps."),
        criteria: vec![
            Criterion::equals_target("reach_target", target),
            Criterion::step_budget("within_budget", max_steps),
        ],
        environment: EnvironmentSpec {
            start: start.to_string(),
            target: target.to_string(),
            alphabet: alphabet.to_string(),
            max_steps,
        },
    }
}

/// `count` random tasks over {a, b}, fully determined by `seed`. The step
/// budget is the edit distance plus a slack of up to two steps.
pub fn generate(seed: u64, count: usize) -> Vec<Task> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let word = |rng: &mut ChaCha8Rng, max_len: usize| -> String {
        let len = rng.random_range(0..=max_len);
        (0..len)
            .map(|_| if rng.random_bool(0.5) { 'a' } else { 'b' })
            .collect()
    };
    (0..count)
        .map(|i| {
            let start = word(&mut rng, 3);
            let mut target = word(&mut rng, 5);
            if target.is_empty() {
                target.push('a');
            }
            let budget = edit_distance(&start, &target) as u32 + rng.random_range(0..=2);
            make_task(
                &format!("G{seed}-{}", i + 1),
                &start,
                &target,
                "ab",
                budget.max(1),
            )
        })
        .collect()
}

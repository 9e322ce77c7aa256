//! The meta-evolution loop: each round runs the inner loop on every
//! training task under one blueprint, scores the blueprint by the mean
//! scalarized best score, and asks the meta agent for the next blueprint.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::inner::{run_inner_loop_with, InnerError, InnerObserver};
use crate::model::score::min_score_serde;
use crate::model::{
    canonical, digest, scalarize, Blueprint, Rational, Score, Task, Verdict, Violation,
};
use crate::protocol::{
    call_meta_evolution, AgentError, AgentSet, MetaEvolution, MetaEvolveRequest, Proposal,
};
use crate::runlog::{entry_line, render, RunHeader};
use crate::seed::derive_seed;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskResult {
    pub task_id: String,
    #[serde(with = "min_score_serde")]
    pub best_score: Option<Score>,
    pub scalar: Rational,
    /// FNV-1a digest of the inner run log text.
    pub history_digest: String,
    /// Log location relative to the meta run directory.
    pub history_path: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetaHistoryEntry {
    pub round: u32,
    pub blueprint: Blueprint,
    pub task_results: Vec<TaskResult>,
    pub meta_score: Rational,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaRunResult {
    pub best_blueprint: Blueprint,
    pub best_meta_score: Rational,
    pub meta_history: Vec<MetaHistoryEntry>,
    pub stopped_early: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaHeader {
    pub task_ids: Vec<String>,
    pub blueprint0_digest: String,
    pub seed: u64,
    #[serde(rename = "J")]
    pub rounds: u32,
}

/// Where a blueprint came from: written next to the best blueprint of a
/// meta run so later evaluations can keep training tasks out of the test
/// set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub train_task_ids: Vec<String>,
    pub seed: u64,
    #[serde(rename = "J")]
    pub rounds: u32,
    pub best_meta_score: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlueprintDocument {
    pub provenance: Provenance,
    pub blueprint: Blueprint,
}

#[derive(Debug, thiserror::Error)]
pub enum MetaError {
    #[error("empty_aggregate: no task results to average")]
    EmptyAggregate,
    #[error("task_invalid: {0}")]
    TasksInvalid(String),
    #[error("blueprint_invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    BlueprintInvalid(Vec<Violation>),
    #[error("round {round}, task {task_id}: {source}")]
    Inner {
        round: u32,
        task_id: String,
        #[source]
        source: InnerError,
    },
    #[error("round {round}, meta evolution: {source}")]
    Agent {
        round: u32,
        #[source]
        source: AgentError,
    },
    #[error("observer failed: {0}")]
    Observer(String),
}

impl MetaError {
    pub fn code(&self) -> String {
        match self {
            MetaError::EmptyAggregate => "empty_aggregate".into(),
            MetaError::TasksInvalid(_) => "task_invalid".into(),
            MetaError::BlueprintInvalid(_) => "blueprint_invalid".into(),
            MetaError::Inner { source, .. } => source.code(),
            MetaError::Agent { source, .. } => source.code(),
            MetaError::Observer(_) => "io_error".into(),
        }
    }
}

/// Exact arithmetic mean of the task scalars.
pub fn aggregate(task_results: &[TaskResult]) -> Result<Rational, MetaError> {
    Rational::mean(task_results.iter().map(|r| r.scalar)).ok_or(MetaError::EmptyAggregate)
}

pub fn inner_log_path(round: u32, task_id: &str) -> String {
    format!("rounds/{round:03}/{task_id}.log")
}

/// One finished inner run inside a meta round.
pub struct InnerRunRecord<'a> {
    pub round: u32,
    pub task_id: &'a str,
    pub log_text: &'a str,
    pub result: &'a TaskResult,
}

pub trait MetaObserver {
    fn on_inner_run(&mut self, _record: &InnerRunRecord<'_>) -> Result<(), MetaError> {
        Ok(())
    }
    fn on_round(&mut self, _entry: &MetaHistoryEntry) -> Result<(), MetaError> {
        Ok(())
    }
    fn on_meta_evolve(&mut self, _meta_history: &[MetaHistoryEntry], _best: &Blueprint) {}
}

pub struct NoMetaObserver;

impl MetaObserver for NoMetaObserver {}

#[derive(Clone, Copy, Debug, Default)]
pub struct MetaOptions {
    /// Worker threads per round; overrides the blueprint without being
    /// written into it.
    pub parallelism: Option<usize>,
}

struct LogCollector {
    lines: Vec<String>,
}

impl InnerObserver for LogCollector {
    fn on_entry(&mut self, entry: &crate::model::HistoryEntry) -> Result<(), InnerError> {
        self.lines.push(entry_line(entry));
        Ok(())
    }
}

fn run_task(
    round: u32,
    index: usize,
    task: &Task,
    bp: &Blueprint,
    seed: u64,
) -> Result<(TaskResult, String), MetaError> {
    let inner_seed = derive_seed(seed, &[round as u64, index as u64]);
    let wrap = |source| MetaError::Inner {
        round,
        task_id: task.id.clone(),
        source,
    };
    let mut agents = AgentSet::from_blueprint(bp).map_err(|e| wrap(InnerError::Setup(e)))?;
    let mut collector = LogCollector { lines: Vec::new() };
    let result =
        run_inner_loop_with(task, bp, inner_seed, &mut agents, &mut collector).map_err(wrap)?;
    let log_text = render(&RunHeader::new(&task.id, bp, inner_seed), &result.history);
    let scalar = scalarize(
        result.best_score.as_ref(),
        bp.evaluator_config.time_budget_ms,
    )
    .expect("budget validated");
    Ok((
        TaskResult {
            task_id: task.id.clone(),
            best_score: result.best_score,
            scalar,
            history_digest: format!("{:016x}", canonical::fnv1a64(log_text.as_bytes())),
            history_path: inner_log_path(round, &task.id),
        },
        log_text,
    ))
}

fn check_tasks(tasks: &[Task], bp: &Blueprint) -> Result<(), MetaError> {
    if tasks.is_empty() {
        return Err(MetaError::TasksInvalid("no training tasks".into()));
    }
    let mut ids = std::collections::BTreeSet::new();
    for t in tasks {
        if !ids.insert(t.id.as_str()) {
            return Err(MetaError::TasksInvalid(format!(
                "duplicate task id {:?}",
                t.id
            )));
        }
        t.validate(bp.evaluator_config.binding.is_builtin())
            .map_err(|v| {
                MetaError::TasksInvalid(format!(
                    "{}: {}",
                    t.id,
                    v.iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join("; ")
                ))
            })?;
    }
    Ok(())
}

pub fn meta_header(tasks: &[Task], bp0: &Blueprint, seed: u64, rounds: u32) -> MetaHeader {
    MetaHeader {
        task_ids: tasks.iter().map(|t| t.id.clone()).collect(),
        blueprint0_digest: digest(bp0),
        seed,
        rounds,
    }
}

/// Runs `rounds` rounds of meta-evolution starting from `bp0`.
///
/// Inner seeds depend only on (seed, round, task index), and per-task
/// results are joined in task order, so the outcome does not depend on
/// the degree of parallelism.
pub fn run_meta_loop(
    tasks: &[Task],
    meta_agent: &mut dyn MetaEvolution,
    bp0: &Blueprint,
    rounds: u32,
    seed: u64,
    options: MetaOptions,
    observer: &mut dyn MetaObserver,
) -> Result<MetaRunResult, MetaError> {
    bp0.validate().map_err(MetaError::BlueprintInvalid)?;
    check_tasks(tasks, bp0)?;
    let mut meta_history: Vec<MetaHistoryEntry> = Vec::new();
    let mut best: Option<(Rational, Blueprint)> = None;
    let mut blueprint = bp0.clone();
    let mut stopped_early = false;

    for j in 0..rounds {
        let threads = options
            .parallelism
            .unwrap_or(blueprint.loop_config.parallelism as usize)
            .max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| MetaError::Observer(format!("thread pool: {e}")))?;
        let outcomes: Vec<Result<(TaskResult, String), MetaError>> = pool.install(|| {
            tasks
                .par_iter()
                .enumerate()
                .map(|(i, t)| run_task(j, i, t, &blueprint, seed))
                .collect()
        });
        let mut task_results = Vec::with_capacity(tasks.len());
        for outcome in outcomes {
            let (result, log_text) = outcome?;
            observer.on_inner_run(&InnerRunRecord {
                round: j,
                task_id: &result.task_id,
                log_text: &log_text,
                result: &result,
            })?;
            task_results.push(result);
        }
        let meta_score = aggregate(&task_results)?;
        let verdict = if best.as_ref().is_none_or(|(s, _)| meta_score > *s) {
            best = Some((meta_score, blueprint.clone()));
            Verdict::Improved
        } else {
            Verdict::Regressed
        };
        meta_history.push(MetaHistoryEntry {
            round: j,
            blueprint: blueprint.clone(),
            task_results,
            meta_score,
            verdict,
        });
        observer.on_round(meta_history.last().expect("just pushed"))?;

        if j + 1 == rounds {
            break;
        }
        let best_bp = &best.as_ref().expect("set in first round").1;
        observer.on_meta_evolve(&meta_history, best_bp);
        let request = MetaEvolveRequest {
            meta_history: &meta_history,
            best: best_bp,
            seed: derive_seed(seed, &[j as u64]),
        };
        match call_meta_evolution(meta_agent, &request)
            .map_err(|source| MetaError::Agent { round: j, source })?
        {
            Proposal::Next(bp) => blueprint = bp,
            Proposal::SpaceExhausted => {
                log::info!("meta space exhausted after round {j}");
                stopped_early = true;
                break;
            }
        }
    }
    let (best_meta_score, best_blueprint) = best.unwrap_or((Rational::ZERO, bp0.clone()));
    Ok(MetaRunResult {
        best_blueprint,
        best_meta_score,
        meta_history,
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StrategyKind;
    use crate::simkit::{corpus, templates, BuiltinMetaEvolution, MetaSpace, MetaStrategy};

    fn tr(scalar: Rational) -> TaskResult {
        TaskResult {
            task_id: "t".into(),
            best_score: None,
            scalar,
            history_digest: String::new(),
            history_path: String::new(),
        }
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate(&[tr(Rational::ONE)]).unwrap(), Rational::ONE);
        let r = aggregate(&[
            tr(Rational::new(9, 10)),
            tr(Rational::new(45, 100)),
            tr(Rational::ZERO),
        ])
        .unwrap();
        assert_eq!(r, Rational::new(45, 100));
        assert_eq!(r.to_fixed(6), "0.450000");
        assert!(matches!(aggregate(&[]), Err(MetaError::EmptyAggregate)));
    }

    #[test]
    fn single_round_keeps_initial_blueprint() {
        let tasks = vec![corpus::task("T1").unwrap()];
        let space = MetaSpace::reference();
        let mut agent = BuiltinMetaEvolution::new(MetaStrategy::HillClimb, space.clone());
        let bp0 = space.template.clone();
        let r = run_meta_loop(
            &tasks,
            &mut agent,
            &bp0,
            1,
            3,
            MetaOptions::default(),
            &mut NoMetaObserver,
        )
        .unwrap();
        assert_eq!(r.meta_history.len(), 1);
        assert_eq!(r.best_blueprint, bp0);
        assert_eq!(r.meta_history[0].verdict, Verdict::Improved);
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let tasks: Vec<_> = ["T1", "T2", "T3", "T4"]
            .iter()
            .map(|i| corpus::task(i).unwrap())
            .collect();
        let space = MetaSpace::reference();
        let bp0 = templates::blueprint(StrategyKind::Random, templates::minimal_harness(), 8);
        let run = |p| {
            let mut agent = BuiltinMetaEvolution::new(MetaStrategy::HillClimb, space.clone());
            run_meta_loop(
                &tasks,
                &mut agent,
                &bp0,
                3,
                11,
                MetaOptions {
                    parallelism: Some(p),
                },
                &mut NoMetaObserver,
            )
            .unwrap()
        };
        assert_eq!(run(1), run(4));
    }
}

//! The harness evolution loop.
//!
//! Each iteration executes the current harness from a clean environment,
//! has the evaluator score the trace, records the verdict against the
//! running best, and asks the evolution agent for the next harness given
//! the full history and the best harness so far. The evolve call after
//! the final iteration is skipped because its result would never run.

use serde::{Deserialize, Serialize};

use crate::model::score::min_score_serde;
use crate::model::{
    scalarize, Blueprint, Harness, HarnessTarget, HistoryEntry, Score, Task, Verdict, Violation,
};
use crate::protocol::{
    call_evaluator, call_evolution, call_worker, AgentError, AgentSet, EvolveRequest, Proposal,
};
use crate::runlog::{entry_line, RunHeader, RunLog};
use crate::seed::derive_seed;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InnerRunResult {
    pub best_harness: Harness,
    #[serde(with = "min_score_serde")]
    pub best_score: Option<Score>,
    pub history: Vec<HistoryEntry>,
    pub stopped_early: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum InnerError {
    #[error("blueprint_invalid: {}", join(.0))]
    BlueprintInvalid(Vec<Violation>),
    #[error("task_invalid: {}", join(.0))]
    TaskInvalid(Vec<Violation>),
    #[error("iteration {iteration}: {source}")]
    Agent {
        iteration: u32,
        #[source]
        source: AgentError,
    },
    #[error("could not start agents: {0}")]
    Setup(#[source] AgentError),
    #[error("resume_mismatch: {0}")]
    ResumeMismatch(String),
    #[error("observer failed: {0}")]
    Observer(String),
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl InnerError {
    pub fn code(&self) -> String {
        match self {
            InnerError::BlueprintInvalid(_) => "blueprint_invalid".into(),
            InnerError::TaskInvalid(_) => "task_invalid".into(),
            InnerError::Agent { source, .. } | InnerError::Setup(source) => source.code(),
            InnerError::ResumeMismatch(_) => "resume_mismatch".into(),
            InnerError::Observer(_) => "io_error".into(),
        }
    }
}

/// Hooks into a running loop. Defaults do nothing.
pub trait InnerObserver {
    /// Called once per iteration, right after the entry joins the history.
    fn on_entry(&mut self, _entry: &HistoryEntry) -> Result<(), InnerError> {
        Ok(())
    }

    /// Called before each evolve call with exactly what the agent receives.
    fn on_evolve(&mut self, _history: &[HistoryEntry], _best: &Harness) {}
}

pub struct NoObserver;

impl InnerObserver for NoObserver {}

/// Earliest entry with the maximal score, or `(None, MIN_SCORE)` for an
/// empty history.
pub fn select_best(history: &[HistoryEntry]) -> (Option<&Harness>, Option<Score>) {
    let mut best: Option<&HistoryEntry> = None;
    for e in history {
        if best.is_none_or(|b| e.score > b.score) {
            best = Some(e);
        }
    }
    (best.map(|e| &e.harness), best.map(|e| e.score))
}

pub fn harness_target(bp: &Blueprint) -> HarnessTarget {
    if bp.worker_binding.is_builtin() {
        HarnessTarget::Builtin
    } else {
        HarnessTarget::External
    }
}

fn check_inputs(task: &Task, bp: &Blueprint) -> Result<(), InnerError> {
    bp.validate().map_err(InnerError::BlueprintInvalid)?;
    task.validate(bp.evaluator_config.binding.is_builtin())
        .map_err(InnerError::TaskInvalid)
}

/// Runs the loop with the agents the blueprint names.
pub fn run_inner_loop(
    task: &Task,
    bp: &Blueprint,
    seed: u64,
) -> Result<InnerRunResult, InnerError> {
    check_inputs(task, bp)?;
    let mut agents = AgentSet::from_blueprint(bp).map_err(InnerError::Setup)?;
    run_inner_loop_with(task, bp, seed, &mut agents, &mut NoObserver)
}

pub fn run_inner_loop_with(
    task: &Task,
    bp: &Blueprint,
    seed: u64,
    agents: &mut AgentSet,
    observer: &mut dyn InnerObserver,
) -> Result<InnerRunResult, InnerError> {
    check_inputs(task, bp)?;
    let k_max = bp.loop_config.k;
    let budget = bp.evaluator_config.time_budget_ms;
    let target = harness_target(bp);
    let mut history: Vec<HistoryEntry> = Vec::with_capacity(k_max as usize);
    let mut best_score: Option<Score> = None;
    let mut best_harness = bp.initial_harness.clone();
    let mut harness = bp.initial_harness.clone();
    let mut stopped_early = false;

    for k in 1..=k_max {
        let agent_err = |source| InnerError::Agent {
            iteration: k,
            source,
        };
        // The builtin worker builds a fresh environment from the task on
        // every call; external workers are told the same through the task.
        let trace = call_worker(agents.worker.as_mut(), &harness, task).map_err(agent_err)?;
        let (report, score) =
            call_evaluator(agents.evaluator.as_mut(), &trace, task).map_err(agent_err)?;
        let verdict = if Some(score) > best_score {
            best_score = Some(score);
            best_harness = harness.clone();
            Verdict::Improved
        } else {
            Verdict::Regressed
        };
        history.push(HistoryEntry {
            iteration: k,
            task_id: task.id.clone(),
            harness: harness.clone(),
            report,
            score,
            verdict,
        });
        observer.on_entry(history.last().expect("just pushed"))?;

        if let Some(threshold) = bp.loop_config.early_stop {
            let scalar = scalarize(best_score.as_ref(), budget).expect("budget validated");
            if scalar >= threshold {
                stopped_early = true;
                break;
            }
        }
        if k == k_max {
            break;
        }
        observer.on_evolve(&history, &best_harness);
        let request = EvolveRequest {
            task_id: &task.id,
            history: &history,
            best: &best_harness,
            seed: derive_seed(seed, &[k as u64]),
        };
        match call_evolution(agents.evolution.as_mut(), &request, target).map_err(agent_err)? {
            Proposal::Next(h) => harness = h,
            Proposal::SpaceExhausted => {
                log::info!(
                    "task {}: evolution space exhausted after iteration {k}",
                    task.id
                );
                stopped_early = true;
                break;
            }
        }
    }
    Ok(InnerRunResult {
        best_harness,
        best_score,
        history,
        stopped_early,
    })
}

/// Checks replayed entries against logged lines, then forwards entries
/// past the logged prefix to `next`.
struct Replay<'a> {
    expected: &'a [String],
    seen: usize,
    next: &'a mut dyn InnerObserver,
}

impl InnerObserver for Replay<'_> {
    fn on_entry(&mut self, entry: &HistoryEntry) -> Result<(), InnerError> {
        let i = self.seen;
        self.seen += 1;
        match self.expected.get(i) {
            Some(line) if *line == entry_line(entry) => Ok(()),
            Some(_) => Err(InnerError::ResumeMismatch(format!(
                "logged iteration {} differs from replay",
                i + 1
            ))),
            None => self.next.on_entry(entry),
        }
    }

    fn on_evolve(&mut self, history: &[HistoryEntry], best: &Harness) {
        self.next.on_evolve(history, best);
    }
}

/// Continues a run from a (possibly torn) log. The logged prefix is
/// validated by replaying it; the final result equals that of an
/// uninterrupted run with the same inputs.
pub fn resume_inner_loop(
    log: &RunLog,
    bp: &Blueprint,
    task: &Task,
    seed: u64,
) -> Result<InnerRunResult, InnerError> {
    check_inputs(task, bp)?;
    let mut agents = AgentSet::from_blueprint(bp).map_err(InnerError::Setup)?;
    resume_inner_loop_with(log, bp, task, seed, &mut agents, &mut NoObserver)
}

pub fn resume_inner_loop_with(
    log: &RunLog,
    bp: &Blueprint,
    task: &Task,
    seed: u64,
    agents: &mut AgentSet,
    observer: &mut dyn InnerObserver,
) -> Result<InnerRunResult, InnerError> {
    if let Some(header) = &log.header {
        let expected = RunHeader::new(&task.id, bp, seed);
        if *header != expected {
            return Err(InnerError::ResumeMismatch(format!(
                "log header {header:?} does not match this run {expected:?}"
            )));
        }
    } else if !log.lines.is_empty() {
        return Err(InnerError::ResumeMismatch(
            "log has entries but no header".into(),
        ));
    }
    let mut replay = Replay {
        expected: &log.lines,
        seen: 0,
        next: observer,
    };
    let result = run_inner_loop_with(task, bp, seed, agents, &mut replay)?;
    if replay.seen < log.lines.len() {
        return Err(InnerError::ResumeMismatch(format!(
            "log has {} entries, the run ends after {}",
            log.lines.len(),
            replay.seen
        )));
    }
    Ok(result)
}

//! The four agent contracts and the engine-side calls that enforce them.
//!
//! Agents are either builtin (the simulation kit) or external processes
//! speaking the line protocol in [`wire`]. Whatever an agent returns is
//! checked here before the loops consume it.

pub mod conformance;
pub mod external;
pub mod serve;
pub mod wire;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::meta::MetaHistoryEntry;
use crate::model::{
    validate_harness, AgentKind, Blueprint, EvaluationReport, ExternalCommand, Harness,
    HarnessTarget, HistoryEntry, Score, Task, Trace, Violation,
};

pub use external::ExternalAgent;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Worker,
    Evaluator,
    Evolution,
    MetaEvolution,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Worker => "worker",
            Role::Evaluator => "evaluator",
            Role::Evolution => "evolution",
            Role::MetaEvolution => "meta_evolution",
        })
    }
}

/// An invocable agent: how to reach it plus the role it plays.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentBinding {
    pub kind: AgentKind,
    pub role: Role,
}

impl AgentBinding {
    pub fn builtin(role: Role, name: &str) -> Self {
        AgentBinding {
            kind: AgentKind::Builtin {
                name: name.to_string(),
            },
            role,
        }
    }

    pub fn external(role: Role, command: ExternalCommand) -> Self {
        AgentBinding {
            kind: AgentKind::External(command),
            role,
        }
    }
}

/// Result of an evolve call: the next candidate, or notice that the agent
/// has nothing unseen left to propose.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Proposal<T> {
    Next(T),
    SpaceExhausted,
}

impl<T> Proposal<T> {
    pub fn next(self) -> Option<T> {
        match self {
            Proposal::Next(t) => Some(t),
            Proposal::SpaceExhausted => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("{role}_timeout: no response within {timeout_ms} ms")]
    Timeout { role: Role, timeout_ms: u64 },
    #[error("protocol_error: {0}")]
    Protocol(String),
    #[error("trace_invalid: {0}")]
    TraceInvalid(String),
    #[error("report_invalid: {0}")]
    ReportInvalid(String),
    #[error("harness_invalid: {}", join(.0))]
    HarnessInvalid(Vec<Violation>),
    #[error("blueprint_invalid: {}", join(.0))]
    BlueprintInvalid(Vec<Violation>),
    #[error("task_invalid: {}", join(.0))]
    TaskInvalid(Vec<Violation>),
    #[error("failed to spawn {command:?}: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl AgentError {
    /// Stable snake_case name of the error class.
    pub fn code(&self) -> String {
        match self {
            AgentError::Timeout { role, .. } => format!("{role}_timeout"),
            AgentError::Protocol(_) => "protocol_error".into(),
            AgentError::TraceInvalid(_) => "trace_invalid".into(),
            AgentError::ReportInvalid(_) => "report_invalid".into(),
            AgentError::HarnessInvalid(_) => "harness_invalid".into(),
            AgentError::BlueprintInvalid(_) => "blueprint_invalid".into(),
            AgentError::TaskInvalid(_) => "task_invalid".into(),
            AgentError::Spawn { .. } => "spawn_failed".into(),
        }
    }
}

pub struct EvolveRequest<'a> {
    pub task_id: &'a str,
    /// The full history so far, never truncated.
    pub history: &'a [HistoryEntry],
    pub best: &'a Harness,
    pub seed: u64,
}

pub struct MetaEvolveRequest<'a> {
    pub meta_history: &'a [MetaHistoryEntry],
    pub best: &'a Blueprint,
    pub seed: u64,
}

pub trait Worker: Send {
    fn execute(&mut self, harness: &Harness, task: &Task) -> Result<Trace, AgentError>;
}

pub trait Evaluator: Send {
    fn evaluate(
        &mut self,
        trace: &Trace,
        task: &Task,
    ) -> Result<(EvaluationReport, Score), AgentError>;
}

pub trait Evolution: Send {
    fn evolve(&mut self, request: &EvolveRequest<'_>) -> Result<Proposal<Harness>, AgentError>;
}

pub trait MetaEvolution: Send {
    fn meta_evolve(
        &mut self,
        request: &MetaEvolveRequest<'_>,
    ) -> Result<Proposal<Blueprint>, AgentError>;
}

/// Runs the worker and rejects traces that break the trace invariants or
/// use tools outside the harness.
pub fn call_worker(
    worker: &mut dyn Worker,
    harness: &Harness,
    task: &Task,
) -> Result<Trace, AgentError> {
    let trace = worker.execute(harness, task)?;
    trace
        .check_invariants()
        .and_then(|_| trace.check_tools(harness))
        .map_err(|e| AgentError::TraceInvalid(e.to_string()))?;
    Ok(trace)
}

pub fn call_evaluator(
    evaluator: &mut dyn Evaluator,
    trace: &Trace,
    task: &Task,
) -> Result<(EvaluationReport, Score), AgentError> {
    let (report, score) = evaluator.evaluate(trace, task)?;
    report
        .check_invariants()
        .map_err(|e| AgentError::ReportInvalid(e.to_string()))?;
    if report.score != score {
        return Err(AgentError::ReportInvalid(
            "returned score differs from report score".into(),
        ));
    }
    let ids: Vec<_> = task.criteria.iter().map(|c| c.id.as_str()).collect();
    let got: Vec<_> = report
        .criterion_verdicts
        .iter()
        .map(|v| v.criterion_id.as_str())
        .collect();
    if ids != got {
        return Err(AgentError::ReportInvalid(format!(
            "verdicts cover {got:?}, task criteria are {ids:?}"
        )));
    }
    Ok((report, score))
}

/// Asks for the next harness and validates it before the loop rebuilds a
/// worker from it.
pub fn call_evolution(
    evolution: &mut dyn Evolution,
    request: &EvolveRequest<'_>,
    target: HarnessTarget,
) -> Result<Proposal<Harness>, AgentError> {
    let proposal = evolution.evolve(request)?;
    if let Proposal::Next(h) = &proposal {
        validate_harness(h, target).map_err(AgentError::HarnessInvalid)?;
    }
    Ok(proposal)
}

pub fn call_meta_evolution(
    meta: &mut dyn MetaEvolution,
    request: &MetaEvolveRequest<'_>,
) -> Result<Proposal<Blueprint>, AgentError> {
    let proposal = meta.meta_evolve(request)?;
    if let Proposal::Next(bp) = &proposal {
        bp.validate().map_err(AgentError::BlueprintInvalid)?;
    }
    Ok(proposal)
}

/// Worker, evaluator and evolution agents for one inner loop.
pub struct AgentSet {
    pub worker: Box<dyn Worker>,
    pub evaluator: Box<dyn Evaluator>,
    pub evolution: Box<dyn Evolution>,
}

impl AgentSet {
    /// Instantiates the agents a blueprint names. External agents are
    /// spawned here, once, and reused for every iteration.
    pub fn from_blueprint(bp: &Blueprint) -> Result<Self, AgentError> {
        use crate::model::StrategyKind;
        use crate::simkit::{BuiltinEvolution, SimEvaluator, SimWorker};

        let worker: Box<dyn Worker> = match &bp.worker_binding {
            AgentKind::Builtin { .. } => Box::new(SimWorker),
            AgentKind::External(cmd) => Box::new(ExternalAgent::spawn(cmd, Role::Worker)?),
        };
        let evaluator: Box<dyn Evaluator> = match &bp.evaluator_config.binding {
            AgentKind::Builtin { .. } => {
                Box::new(SimEvaluator::new(bp.evaluator_config.strictness))
            }
            AgentKind::External(cmd) => Box::new(ExternalAgent::spawn(cmd, Role::Evaluator)?),
        };
        let strat = &bp.evolution_strategy;
        let evolution: Box<dyn Evolution> = match (strat.kind, &strat.command) {
            (StrategyKind::External, Some(cmd)) => {
                Box::new(ExternalAgent::spawn(cmd, Role::Evolution)?)
            }
            (StrategyKind::External, None) => {
                return Err(AgentError::BlueprintInvalid(vec![Violation::new(
                    "evolution_strategy.command",
                    "external strategy needs a command",
                )]))
            }
            _ => Box::new(
                BuiltinEvolution::from_strategy(strat)
                    .map_err(|v| AgentError::BlueprintInvalid(vec![v]))?,
            ),
        };
        Ok(AgentSet {
            worker,
            evaluator,
            evolution,
        })
    }
}

/// Instantiates a meta-evolution agent. Builtin meta agents need the
/// declared blueprint space they search.
pub fn meta_agent_from_binding(
    binding: &AgentBinding,
    space: Option<&crate::simkit::MetaSpace>,
) -> Result<Box<dyn MetaEvolution>, AgentError> {
    use crate::simkit::{BuiltinMetaEvolution, MetaStrategy};

    if binding.role != Role::MetaEvolution {
        return Err(AgentError::Protocol(format!(
            "binding role is {}, expected meta_evolution",
            binding.role
        )));
    }
    match &binding.kind {
        AgentKind::External(cmd) => Ok(Box::new(ExternalAgent::spawn(cmd, Role::MetaEvolution)?)),
        AgentKind::Builtin { name } => {
            let strategy = MetaStrategy::from_name(name).ok_or_else(|| {
                AgentError::BlueprintInvalid(vec![Violation::new(
                    "meta_binding.name",
                    format!("unknown builtin meta strategy {name:?}"),
                )])
            })?;
            let space = space.ok_or_else(|| {
                AgentError::BlueprintInvalid(vec![Violation::new(
                    "meta_space",
                    "builtin meta strategies need a declared blueprint space",
                )])
            })?;
            Ok(Box::new(BuiltinMetaEvolution::new(strategy, space.clone())))
        }
    }
}

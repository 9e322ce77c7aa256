//! Shared domain types: tasks, harnesses, traces, scores, reports and
//! blueprints, plus the canonical encoding every file and message uses.

pub mod blueprint;
pub mod canonical;
pub mod harness;
pub mod rational;
pub mod report;
pub mod score;
pub mod task;
pub mod trace;

pub use blueprint::{
    AgentKind, Blueprint, EvaluatorConfig, EvolutionStrategy, ExternalCommand, LoopConfig,
    StrategyKind, Strictness,
};
pub use canonical::{digest, to_canonical};
pub use harness::{
    validate_harness, validate_harness_document, Harness, HarnessTarget, Scalar, Violation,
};
pub use rational::Rational;
pub use report::{Audit, Bottleneck, CriterionVerdict, EvaluationReport, HistoryEntry, Verdict};
pub use score::{compare_scores, scalarize, Score, ScoreError, MIN_SCORE};
pub use task::{Criterion, CriterionKind, EnvironmentSpec, Task};
pub use trace::{Action, Step, TimeTotals, Trace, TraceError};

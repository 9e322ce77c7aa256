//! Harness evolution: optimize an agent's harness on a task by iterated
//! execute, evaluate and evolve steps, and optimize the evolution
//! blueprint itself across a set of training tasks.
//!
//! Shared domain types live in [`model`]; the loops in [`inner`] and
//! [`meta`]; the StringForge simulation and reference agents in
//! [`simkit`]; adaptation metrics in [`metrics`].

pub mod inner;
pub mod meta;
pub mod metrics;
pub mod model;
pub mod protocol;
pub mod runlog;
pub mod seed;
pub mod simkit;

pub use inner::{resume_inner_loop, run_inner_loop, select_best, InnerError, InnerRunResult};
pub use meta::{
    aggregate, run_meta_loop, BlueprintDocument, MetaError, MetaHistoryEntry, MetaOptions,
    MetaRunResult, Provenance, TaskResult,
};
pub use metrics::{
    convergence_speed, final_performance, meta_test_report, robustness, Convergence,
};
pub use model::*;
pub use protocol::{AgentBinding, AgentError, Proposal, Role};

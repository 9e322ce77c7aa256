//! StringForge: a deterministic string-editing environment together with
//! builtin agents for every role and a brute-force oracle over finite
//! harness spaces.

pub mod corpus;
pub mod env;
pub mod evaluator;
pub mod meta_space;
pub mod oracle;
pub mod search;
pub mod space;
pub mod strategies;
pub mod templates;
pub mod worker;

pub use env::{StringForgeEnv, Tool, TOOL_NAMES, TOOL_TIME_MS};
pub use evaluator::{sim_evaluate, SimEvaluator};
pub use meta_space::{
    meta_evolve_exhaustive, meta_evolve_hill_climb, BuiltinMetaEvolution, MetaSpace, MetaStrategy,
};
pub use oracle::{brute_force_oracle, OracleResult};
pub use search::Fallback;
pub use space::{HarnessSpace, SpaceDeclaration, SpacePoint};
pub use strategies::{evolve_exhaustive, evolve_hill_climb, evolve_random, BuiltinEvolution};
pub use worker::{sim_execute, SimWorker};

use crate::model::Violation;
use crate::protocol::AgentError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("harness not runnable by the simulated worker: {0}")]
    BadHarness(String),
    #[error("step {index} uses unknown tool {tool:?}")]
    UnknownTool { index: u32, tool: String },
    #[error("criterion {0:?} cannot be checked by the builtin evaluator")]
    BadCriterion(String),
}

impl From<SimError> for AgentError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::UnknownTool { .. } => AgentError::TraceInvalid(e.to_string()),
            SimError::BadHarness(msg) => {
                AgentError::HarnessInvalid(vec![Violation::new("harness", msg)])
            }
            SimError::BadCriterion(id) => AgentError::TaskInvalid(vec![Violation::new(
                "criteria",
                format!("unsupported criterion {id:?}"),
            )]),
        }
    }
}

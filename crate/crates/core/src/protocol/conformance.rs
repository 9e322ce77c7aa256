//! Canned calls that an external agent must answer correctly.
//!
//! Each role gets a fresh process, the version handshake, and one request
//! through the same engine-side checks the loops use.

use serde::Serialize;

use super::{
    call_evaluator, call_evolution, call_meta_evolution, call_worker, AgentError, EvolveRequest,
    ExternalAgent, MetaEvolveRequest, Role,
};
use crate::model::{ExternalCommand, HarnessTarget};
use crate::simkit::{corpus, sim_execute, templates, MetaSpace};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConformanceCheck {
    pub role: Role,
    pub passed: bool,
    /// Error class on failure, empty on success.
    pub error: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConformanceReport {
    pub command: String,
    pub checks: Vec<ConformanceCheck>,
}

impl ConformanceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn run_role(cmd: &ExternalCommand, role: Role) -> Result<String, AgentError> {
    let mut agent = ExternalAgent::spawn(cmd, role)?;
    let task = corpus::task("T1").expect("bundled task");
    let harness = templates::rich_harness();
    match role {
        Role::Worker => {
            let trace = call_worker(&mut agent, &harness, &task)?;
            Ok(format!("{} steps", trace.steps.len()))
        }
        Role::Evaluator => {
            let trace = sim_execute(&harness, &task).expect("reference harness runs");
            let (_, score) = call_evaluator(&mut agent, &trace, &task)?;
            Ok(format!("passed={}", score.passed()))
        }
        Role::Evolution => {
            let req = EvolveRequest {
                task_id: &task.id,
                history: &[],
                best: &harness,
                seed: 1,
            };
            let p = call_evolution(&mut agent, &req, HarnessTarget::External)?;
            Ok(format!("space_exhausted={}", p.next().is_none()))
        }
        Role::MetaEvolution => {
            let best = MetaSpace::reference().template;
            let req = MetaEvolveRequest {
                meta_history: &[],
                best: &best,
                seed: 1,
            };
            let p = call_meta_evolution(&mut agent, &req)?;
            Ok(format!("space_exhausted={}", p.next().is_none()))
        }
    }
}

/// Runs the canned call for every role in `roles`. Failures are recorded,
/// never propagated.
pub fn run_conformance(cmd: &ExternalCommand, roles: &[Role]) -> ConformanceReport {
    let checks = roles
        .iter()
        .map(|&role| match run_role(cmd, role) {
            Ok(detail) => ConformanceCheck {
                role,
                passed: true,
                error: String::new(),
                detail,
            },
            Err(e) => ConformanceCheck {
                role,
                passed: false,
                error: e.code(),
                detail: e.to_string(),
            },
        })
        .collect();
    let command = std::iter::once(cmd.command.as_str())
        .chain(cmd.args.iter().map(String::as_str))
        .collect::<Vec<_>>()
        .join(" ");
    ConformanceReport { command, checks }
}

pub const ALL_ROLES: [Role; 4] = [
    Role::Worker,
    Role::Evaluator,
    Role::Evolution,
    Role::MetaEvolution,
];

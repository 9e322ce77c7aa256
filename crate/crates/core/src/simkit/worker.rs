//! The reference worker: a deterministic greedy planner over the harness's
//! tools, scored by edit distance to the target.

use super::env::{StringForgeEnv, Tool};
use super::SimError;
use crate::model::{Action, Harness, Step, Task, Trace};
use crate::protocol::{AgentError, Worker};

pub const LLM_MS_FAST: u64 = 5;
pub const LLM_MS_SMART: u64 = 20;
pub const VERBOSE_EXTRA_MS: u64 = 2;

/// Planner settings resolved from a harness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlannerConfig {
    pub tools: Vec<Tool>,
    pub depth: usize,
    pub llm_ms_per_step: u64,
    pub max_steps: u32,
}

impl PlannerConfig {
    pub fn from_harness(h: &Harness) -> Result<Self, SimError> {
        let mut tools = Vec::with_capacity(h.tools.len());
        for name in &h.tools {
            tools.push(
                Tool::from_name(name)
                    .ok_or_else(|| SimError::BadHarness(format!("unknown tool {name:?}")))?,
            );
        }
        tools.sort();
        tools.dedup();
        if tools.is_empty() {
            return Err(SimError::BadHarness("no tools".into()));
        }
        let depth =
            h.planner_depth()
                .filter(|d| (1..=3).contains(d))
                .ok_or_else(|| SimError::BadHarness("planner_depth".into()))? as usize;
        let max_steps =
            h.max_steps()
                .filter(|m| *m >= 1)
                .ok_or_else(|| SimError::BadHarness("max_steps".into()))? as u32;
        let smart = match h.model_tier() {
            Some("smart") => true,
            Some("fast") => false,
            _ => return Err(SimError::BadHarness("model_tier".into())),
        };
        let verbose = match h.prompt_style() {
            Some("verbose") => true,
            Some("terse") => false,
            _ => return Err(SimError::BadHarness("prompt_style".into())),
        };
        let base = if smart { LLM_MS_SMART } else { LLM_MS_FAST };
        Ok(PlannerConfig {
            tools,
            // A fast model does not look ahead.
            depth: if smart { depth } else { 1 },
            llm_ms_per_step: base + if verbose { VERBOSE_EXTRA_MS } else { 0 },
            max_steps,
        })
    }
}

pub fn edit_distance(a: &str, b: &str) -> usize {
    strsim::levenshtein(a, b)
}

/// Picks the first action of the best action sequence of length
/// `1..=depth`: lowest resulting edit distance, ties broken by
/// lexicographic order of the tool-name sequence.
///
/// `tools` must be sorted; the depth-first walk then visits sequences in
/// lexicographic order, so keeping the first strict minimum is the
/// tie-break.
pub fn plan_step(current: &str, target: &str, tools: &[Tool], depth: usize) -> Option<Tool> {
    fn walk(
        state: &str,
        target: &str,
        tools: &[Tool],
        remaining: usize,
        first: Option<Tool>,
        best: &mut Option<(usize, Tool)>,
    ) {
        for &tool in tools {
            let next = tool.apply(state);
            let head = first.unwrap_or(tool);
            let d = edit_distance(&next, target);
            if best.is_none_or(|(bd, _)| d < bd) {
                *best = Some((d, head));
            }
            if remaining > 1 {
                walk(&next, target, tools, remaining - 1, Some(head), best);
            }
        }
    }
    let mut best = None;
    walk(current, target, tools, depth, None, &mut best);
    best.map(|(_, t)| t)
}

/// Runs the planner until the target is reached or the harness step limit
/// is used up.
pub fn sim_execute(harness: &Harness, task: &Task) -> Result<Trace, SimError> {
    let cfg = PlannerConfig::from_harness(harness)?;
    let target = task.environment.target.as_str();
    let mut env = StringForgeEnv::new(task);
    env.reset();
    let mut steps = Vec::new();
    while env.current() != target && env.steps_used() < cfg.max_steps {
        let tool =
            plan_step(env.current(), target, &cfg.tools, cfg.depth).expect("tool list is nonempty");
        let (obs, tool_ms) = env.step(tool);
        steps.push(Step {
            index: steps.len() as u32 + 1,
            action: Action::tool(tool.name()),
            observation: obs.to_string(),
            llm_time_ms: cfg.llm_ms_per_step,
            tool_time_ms: tool_ms,
        });
    }
    Ok(Trace::from_steps(steps, env.current().to_string()))
}

/// Builtin worker backed by [`sim_execute`]. Stateless, so one instance can
/// serve any number of loops.
#[derive(Clone, Copy, Debug, Default)]
pub struct SimWorker;

impl Worker for SimWorker {
    fn execute(&mut self, harness: &Harness, task: &Task) -> Result<Trace, AgentError> {
        sim_execute(harness, task).map_err(AgentError::from)
    }
}

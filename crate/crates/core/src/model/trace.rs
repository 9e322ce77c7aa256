use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Harness;

/// A tool invocation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub tool: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub args: BTreeMap<String, String>,
}

impl Action {
    pub fn tool(name: &str) -> Self {
        Action {
            tool: name.to_string(),
            args: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub index: u32,
    pub action: Action,
    /// Environment state after the action, as the worker perceived it.
    pub observation: String,
    pub llm_time_ms: u64,
    pub tool_time_ms: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeTotals {
    pub llm_time_ms: u64,
    pub tool_time_ms: u64,
}

/// What a worker run produced: the step log, the final state the worker
/// claims to have reached, and time totals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trace {
    pub steps: Vec<Step>,
    pub claimed_final_state: String,
    pub totals: TimeTotals,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("step {position} has index {found}, expected {expected}")]
    NonContiguous {
        position: usize,
        found: u32,
        expected: u32,
    },
    #[error("totals {claimed:?} differ from step sums {summed:?}")]
    TotalsMismatch {
        claimed: TimeTotals,
        summed: TimeTotals,
    },
    #[error("step {index} uses tool {tool:?} not present in the harness")]
    ToolNotInHarness { index: u32, tool: String },
}

impl Trace {
    /// Builds a trace from steps, computing totals.
    pub fn from_steps(steps: Vec<Step>, claimed_final_state: String) -> Self {
        let totals = Self::sum_steps(&steps);
        Trace {
            steps,
            claimed_final_state,
            totals,
        }
    }

    pub fn sum_steps(steps: &[Step]) -> TimeTotals {
        steps
            .iter()
            .fold(TimeTotals::default(), |acc, s| TimeTotals {
                llm_time_ms: acc.llm_time_ms + s.llm_time_ms,
                tool_time_ms: acc.tool_time_ms + s.tool_time_ms,
            })
    }

    pub fn total_time_ms(&self) -> u64 {
        self.totals.llm_time_ms + self.totals.tool_time_ms
    }

    /// Indices contiguous from 1 and totals equal to the step sums.
    pub fn check_invariants(&self) -> Result<(), TraceError> {
        for (pos, step) in self.steps.iter().enumerate() {
            let expected = pos as u32 + 1;
            if step.index != expected {
                return Err(TraceError::NonContiguous {
                    position: pos,
                    found: step.index,
                    expected,
                });
            }
        }
        let summed = Self::sum_steps(&self.steps);
        if summed != self.totals {
            return Err(TraceError::TotalsMismatch {
                claimed: self.totals,
                summed,
            });
        }
        Ok(())
    }

    pub fn check_tools(&self, harness: &Harness) -> Result<(), TraceError> {
        match self
            .steps
            .iter()
            .find(|s| !harness.tools.contains(&s.action.tool))
        {
            Some(s) => Err(TraceError::ToolNotInHarness {
                index: s.index,
                tool: s.action.tool.clone(),
            }),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(index: u32, tool: &str) -> Step {
        Step {
            index,
            action: Action::tool(tool),
            observation: "a".into(),
            llm_time_ms: 5,
            tool_time_ms: 3,
        }
    }

    #[test]
    fn totals_and_indices() {
        let t = Trace::from_steps(vec![step(1, "append_a"), step(2, "append_a")], "aa".into());
        assert_eq!(
            t.totals,
            TimeTotals {
                llm_time_ms: 10,
                tool_time_ms: 6
            }
        );
        assert_eq!(t.total_time_ms(), 16);
        assert!(t.check_invariants().is_ok());

        let mut gap = t.clone();
        gap.steps[1].index = 3;
        assert!(matches!(
            gap.check_invariants(),
            Err(TraceError::NonContiguous { position: 1, .. })
        ));

        let mut off = t;
        off.totals.tool_time_ms = 1;
        assert!(matches!(
            off.check_invariants(),
            Err(TraceError::TotalsMismatch { .. })
        ));
    }
}

//! The reference evaluator. It never trusts the worker's account: every
//! action is replayed through a fresh environment and the criteria are
//! checked against the replayed state.

use super::env::{StringForgeEnv, Tool};
use super::SimError;
use crate::model::{
    Audit, CriterionKind, CriterionVerdict, EvaluationReport, Rational, Scalar, Score, Strictness,
    Task, Trace,
};
use crate::protocol::{AgentError, Evaluator};

/// Replays `trace` against ground truth and scores it.
///
/// When state verification fails the criteria fraction is taken over
/// `m + 1` items instead of `m`, which keeps it strictly below 1.
pub fn sim_evaluate(
    trace: &Trace,
    task: &Task,
    strictness: Strictness,
) -> Result<(EvaluationReport, Score), SimError> {
    let mut env = StringForgeEnv::new(task);
    env.reset();
    let mut first_divergence = None;
    let mut llm = 0u64;
    let mut tool_ms = 0u64;
    for step in &trace.steps {
        let tool = Tool::from_name(&step.action.tool).ok_or_else(|| SimError::UnknownTool {
            index: step.index,
            tool: step.action.tool.clone(),
        })?;
        let (state, _) = env.step(tool);
        if first_divergence.is_none() && step.observation != state {
            first_divergence = Some(step.index);
        }
        llm += step.llm_time_ms;
        tool_ms += step.tool_time_ms;
    }
    let replayed = env.current().to_string();
    if strictness == Strictness::Full
        && first_divergence.is_none()
        && trace.claimed_final_state != replayed
    {
        first_divergence = Some(trace.steps.len() as u32 + 1);
    }
    let state_verified = first_divergence.is_none();

    let steps_used = trace.steps.len() as i64;
    let mut verdicts = Vec::with_capacity(task.criteria.len());
    for c in &task.criteria {
        let (passed, evidence) = match c.kind {
            CriterionKind::EqualsTarget => {
                let target = c
                    .params
                    .get("target")
                    .and_then(Scalar::as_str)
                    .ok_or_else(|| SimError::BadCriterion(c.id.clone()))?;
                (
                    replayed == target,
                    format!("replayed final state {replayed:?}, target {target:?}"),
                )
            }
            CriterionKind::StepBudget => {
                let budget = c
                    .params
                    .get("max_steps")
                    .and_then(Scalar::as_int)
                    .ok_or_else(|| SimError::BadCriterion(c.id.clone()))?;
                (
                    steps_used <= budget,
                    format!("{steps_used} steps used, budget {budget}"),
                )
            }
            CriterionKind::Custom => return Err(SimError::BadCriterion(c.id.clone())),
        };
        verdicts.push(CriterionVerdict {
            criterion_id: c.id.clone(),
            passed,
            evidence,
        });
    }

    let held = verdicts.iter().filter(|v| v.passed).count() as i128;
    let m = verdicts.len() as i128;
    let fraction = if state_verified {
        Rational::new(held, m)
    } else {
        Rational::new(held, m + 1)
    };
    let score = Score::new(fraction, llm + tool_ms).expect("fraction within [0,1]");
    let report = EvaluationReport {
        criterion_verdicts: verdicts,
        state_verified,
        first_divergence,
        audit: Audit::new(llm, tool_ms),
        score,
    };
    Ok((report, score))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SimEvaluator {
    strictness: Strictness,
}

impl SimEvaluator {
    pub fn new(strictness: Strictness) -> Self {
        SimEvaluator { strictness }
    }
}

impl Evaluator for SimEvaluator {
    fn evaluate(
        &mut self,
        trace: &Trace,
        task: &Task,
    ) -> Result<(EvaluationReport, Score), AgentError> {
        sim_evaluate(trace, task, self.strictness).map_err(AgentError::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Action, Bottleneck, Step};
    use crate::simkit::{corpus, sim_execute, templates};

    fn passing_trace() -> (Trace, Task) {
        let task = corpus::task("T1").unwrap();
        let mut h = templates::minimal_harness();
        h.tools = vec!["append_a".into(), "append_b".into()];
        (sim_execute(&h, &task).unwrap(), task)
    }

    #[test]
    fn honest_passing_trace() {
        let (trace, task) = passing_trace();
        let (report, score) = sim_evaluate(&trace, &task, Strictness::Full).unwrap();
        assert!(report.state_verified);
        assert!(score.passed());
        assert_eq!(report.first_divergence, None);
        assert_eq!(report.audit, Audit::new(10, 6));
        assert_eq!(report.audit.dominant_bottleneck, Bottleneck::Llm);
        assert_eq!(score.total_time_ms(), 16);
        assert!(report.check_invariants().is_ok());
    }

    #[test]
    fn altered_observation_is_caught() {
        let (mut trace, task) = passing_trace();
        trace.steps[1].observation = "aa".into();
        let (report, score) = sim_evaluate(&trace, &task, Strictness::Full).unwrap();
        assert!(!report.state_verified);
        assert_eq!(report.first_divergence, Some(2));
        assert!(!score.passed());
        // Both criteria hold on the replayed state, but the unverified run
        // is scored over three items.
        assert_eq!(score.criteria_fraction(), Rational::new(2, 3));
    }

    #[test]
    fn claimed_final_state_checked_under_full_strictness() {
        let (mut trace, task) = passing_trace();
        trace.claimed_final_state = "abba".into();
        let (full, _) = sim_evaluate(&trace, &task, Strictness::Full).unwrap();
        assert_eq!(full.first_divergence, Some(3));
        let (steps_only, score) = sim_evaluate(&trace, &task, Strictness::Steps).unwrap();
        assert!(steps_only.state_verified);
        assert!(score.passed());
    }

    #[test]
    fn empty_trace_on_unsolved_task_fails() {
        let task = corpus::task("T1").unwrap();
        let trace = Trace::from_steps(vec![], String::new());
        let (report, score) = sim_evaluate(&trace, &task, Strictness::Full).unwrap();
        assert!(!score.passed());
        assert!(score.criteria_fraction() < Rational::ONE);
        assert!(report.state_verified);
    }

    #[test]
    fn unknown_tool_is_invalid_trace() {
        let task = corpus::task("T1").unwrap();
        let trace = Trace::from_steps(
            vec![Step {
                index: 1,
                action: Action::tool("teleport"),
                observation: "ab".into(),
                llm_time_ms: 1,
                tool_time_ms: 1,
            }],
            "ab".into(),
        );
        let err = sim_evaluate(&trace, &task, Strictness::Full).unwrap_err();
        assert!(matches!(err, SimError::UnknownTool { index: 1, .. }));
        assert_eq!(AgentError::from(err).code(), "trace_invalid");
    }
}

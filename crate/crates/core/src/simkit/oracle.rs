//! Ground truth by enumeration: run every harness in a finite space and
//! keep the earliest best score.

use super::evaluator::sim_evaluate;
use super::space::HarnessSpace;
use super::worker::sim_execute;
use super::SimError;
use crate::model::{Harness, Score, Strictness, Task};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub harness: Harness,
    pub score: Score,
    /// Position of `harness` in the space enumeration.
    pub index: usize,
}

/// Executes and evaluates every point of `space`, in enumeration order,
/// and returns the earliest maximum. Harness fields the space does not
/// vary are copied from `template`.
pub fn brute_force_oracle(
    task: &Task,
    space: &HarnessSpace,
    template: &Harness,
    strictness: Strictness,
) -> Result<OracleResult, SimError> {
    let mut best: Option<OracleResult> = None;
    for (index, harness) in space.enumerate(template).enumerate() {
        let trace = sim_execute(&harness, task)?;
        let (_, score) = sim_evaluate(&trace, task, strictness)?;
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(OracleResult {
                harness,
                score,
                index,
            });
        }
    }
    Ok(best.expect("harness spaces are never empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simkit::{corpus, templates, Tool};

    #[test]
    fn solved_task_picks_first_point_at_zero_time() {
        let mut task = corpus::task("T1").unwrap();
        task.environment.start = task.environment.target.clone();
        let space = HarnessSpace::core3();
        let r = brute_force_oracle(
            &task,
            &space,
            &templates::minimal_harness(),
            Strictness::Full,
        )
        .unwrap();
        assert_eq!(r.index, 0);
        assert_eq!(r.score, Score::passing(0));
    }

    #[test]
    fn swapcase_only_space_cannot_pass_t1() {
        let task = corpus::task("T1").unwrap();
        let space = HarnessSpace::with_tools("swap", vec![Tool::Swapcase]);
        let r = brute_force_oracle(
            &task,
            &space,
            &templates::minimal_harness(),
            Strictness::Full,
        )
        .unwrap();
        assert!(!r.score.passed());
    }
}

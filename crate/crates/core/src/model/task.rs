use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Scalar, Violation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    EqualsTarget,
    StepBudget,
    /// Only meaningful to external evaluators; the builtin evaluator refuses it.
    Custom,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Criterion {
    pub id: String,
    pub kind: CriterionKind,
    #[serde(default)]
    pub params: BTreeMap<String, Scalar>,
}

impl Criterion {
    pub fn equals_target(id: &str, target: &str) -> Self {
        Criterion {
            id: id.to_string(),
            kind: CriterionKind::EqualsTarget,
            params: BTreeMap::from([("target".to_string(), Scalar::from(target))]),
        }
    }

    pub fn step_budget(id: &str, max_steps: u32) -> Self {
        Criterion {
            id: id.to_string(),
            kind: CriterionKind::StepBudget,
            params: BTreeMap::from([("max_steps".to_string(), Scalar::Int(max_steps as i64))]),
        }
    }
}

/// Start state and limits of the environment a task runs in.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub start: String,
    pub target: String,
    /// Characters a state may contain.
    pub alphabet: String,
    /// Step budget checked by `step_budget` criteria.
    pub max_steps: u32,
}

/// Instructions plus a checklist of machine-checkable criteria.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub instructions: String,
    pub criteria: Vec<Criterion>,
    pub environment: EnvironmentSpec,
}

impl Task {
    /// Structural checks that hold for every task. `builtin_evaluator`
    /// additionally rejects `custom` criteria and checks parameter shapes.
    pub fn validate(&self, builtin_evaluator: bool) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if self.id.trim().is_empty() {
            out.push(Violation::new("id", "empty task id"));
        }
        if self.criteria.is_empty() {
            out.push(Violation::new(
                "criteria",
                "at least one criterion required",
            ));
        }
        let mut seen = BTreeSet::new();
        for (i, c) in self.criteria.iter().enumerate() {
            let path = format!("criteria[{i}]");
            if !seen.insert(c.id.as_str()) {
                out.push(Violation::new(
                    &path,
                    format!("duplicate criterion id {:?}", c.id),
                ));
            }
            if !builtin_evaluator {
                continue;
            }
            match c.kind {
                CriterionKind::Custom => out.push(Violation::new(
                    &path,
                    "custom criteria need an external evaluator",
                )),
                CriterionKind::EqualsTarget => {
                    if c.params.get("target").and_then(Scalar::as_str).is_none() {
                        out.push(Violation::new(
                            format!("{path}.params.target"),
                            "missing text target",
                        ));
                    }
                }
                CriterionKind::StepBudget => {
                    match c.params.get("max_steps").and_then(Scalar::as_int) {
                        Some(n) if n >= 0 => {}
                        _ => out.push(Violation::new(
                            format!("{path}.params.max_steps"),
                            "missing nonnegative integer",
                        )),
                    }
                }
            }
        }
        let env = &self.environment;
        for (field, s) in [("start", &env.start), ("target", &env.target)] {
            if let Some(ch) = s.chars().find(|c| !env.alphabet.contains(*c)) {
                out.push(Violation::new(
                    format!("environment.{field}"),
                    format!("character {ch:?} not in alphabet {:?}", env.alphabet),
                ));
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

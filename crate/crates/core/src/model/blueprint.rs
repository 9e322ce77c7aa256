use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::harness::validate_harness_into;
use super::{Harness, HarnessTarget, Rational, Scalar, Violation};
use crate::simkit::HarnessSpace;

pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;
pub const BUILTIN_NAME: &str = "stringforge";

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_MS
}

/// A subprocess speaking the line protocol.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExternalCommand {
    pub command: String,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentKind {
    Builtin { name: String },
    External(ExternalCommand),
}

impl AgentKind {
    pub fn builtin() -> Self {
        AgentKind::Builtin {
            name: BUILTIN_NAME.to_string(),
        }
    }

    pub fn is_builtin(&self) -> bool {
        matches!(self, AgentKind::Builtin { .. })
    }
}

impl Default for AgentKind {
    fn default() -> Self {
        AgentKind::builtin()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strictness {
    /// Step observations, the claimed final state and the time totals must
    /// all agree with the replay.
    #[default]
    Full,
    /// Only step observations are cross-checked.
    Steps,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvaluatorConfig {
    pub time_budget_ms: u64,
    #[serde(default)]
    pub strictness: Strictness,
    #[serde(default, skip_serializing_if = "AgentKind::is_builtin")]
    pub binding: AgentKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Random,
    HillClimb,
    Exhaustive,
    External,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvolutionStrategy {
    pub kind: StrategyKind,
    /// Required iff `kind` is `external`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<ExternalCommand>,
    #[serde(default)]
    pub params: BTreeMap<String, Scalar>,
}

impl EvolutionStrategy {
    pub fn builtin(kind: StrategyKind) -> Self {
        EvolutionStrategy {
            kind,
            command: None,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Scalar>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LoopConfig {
    #[serde(rename = "K")]
    pub k: u32,
    /// Scalarized best-score threshold that ends the loop early.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<Rational>,
    pub parallelism: u32,
}

/// Everything needed to run one harness evolution: worker, starting
/// harness, evaluator, evolution strategy and loop hyperparameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Blueprint {
    pub worker_binding: AgentKind,
    pub initial_harness: Harness,
    pub evaluator_config: EvaluatorConfig,
    pub evolution_strategy: EvolutionStrategy,
    #[serde(rename = "loop")]
    pub loop_config: LoopConfig,
}

pub const STRATEGY_PARAM_SPACE: &str = "space";
pub const STRATEGY_PARAM_FALLBACK: &str = "fallback";
pub const FALLBACK_VALUES: [&str; 2] = ["enumeration", "random"];

impl Blueprint {
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        validate_agent_kind(&self.worker_binding, "worker_binding", &mut out);
        let target = if self.worker_binding.is_builtin() {
            HarnessTarget::Builtin
        } else {
            HarnessTarget::External
        };
        validate_harness_into(&self.initial_harness, target, "initial_harness.", &mut out);

        if self.evaluator_config.time_budget_ms == 0 {
            out.push(Violation::new(
                "evaluator_config.time_budget_ms",
                "must be positive",
            ));
        }
        validate_agent_kind(
            &self.evaluator_config.binding,
            "evaluator_config.binding",
            &mut out,
        );

        let strat = &self.evolution_strategy;
        match (strat.kind, &strat.command) {
            (StrategyKind::External, None) => out.push(Violation::new(
                "evolution_strategy.command",
                "external strategy needs a command",
            )),
            (StrategyKind::External, Some(cmd)) => {
                validate_command(cmd, "evolution_strategy.command", &mut out)
            }
            (_, Some(_)) => out.push(Violation::new(
                "evolution_strategy.command",
                "only external strategies take a command",
            )),
            (_, None) => match HarnessSpace::from_params(&strat.params) {
                Err(v) => out.push(v),
                Ok(space) => {
                    if target == HarnessTarget::Builtin
                        && space.project(&self.initial_harness).is_none()
                    {
                        out.push(Violation::new(
                            "initial_harness",
                            format!("not a point of the {} strategy space", space.name()),
                        ));
                    }
                }
            },
        }
        if let Some(fb) = strat.params.get(STRATEGY_PARAM_FALLBACK) {
            if !fb.as_str().is_some_and(|s| FALLBACK_VALUES.contains(&s)) {
                out.push(Violation::new(
                    "evolution_strategy.params.fallback",
                    format!("expected one of {FALLBACK_VALUES:?}, got {fb}"),
                ));
            }
        }

        let lc = &self.loop_config;
        if lc.parallelism == 0 {
            out.push(Violation::new("loop.parallelism", "must be positive"));
        }
        if let Some(t) = lc.early_stop {
            if t.is_negative() || t > Rational::ONE {
                out.push(Violation::new(
                    "loop.early_stop",
                    format!("{t} outside [0,1]"),
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

fn validate_agent_kind(kind: &AgentKind, path: &str, out: &mut Vec<Violation>) {
    match kind {
        AgentKind::Builtin { name } if name == BUILTIN_NAME => {}
        AgentKind::Builtin { name } => out.push(Violation::new(
            format!("{path}.name"),
            format!("unknown builtin agent {name:?}"),
        )),
        AgentKind::External(cmd) => validate_command(cmd, path, out),
    }
}

fn validate_command(cmd: &ExternalCommand, path: &str, out: &mut Vec<Violation>) {
    if cmd.command.trim().is_empty() {
        out.push(Violation::new(format!("{path}.command"), "empty command"));
    }
    if cmd.timeout_ms == 0 {
        out.push(Violation::new(
            format!("{path}.timeout_ms"),
            "must be positive",
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::canonical::to_canonical;
    use crate::simkit::templates;

    #[test]
    fn reference_blueprint_validates_and_round_trips() {
        let bp = templates::blueprint(StrategyKind::HillClimb, templates::minimal_harness(), 12);
        assert_eq!(bp.validate(), Ok(()));
        let text = to_canonical(&bp);
        assert!(text.contains("\"K\":12"));
        assert!(text.contains("\"loop\":"));
        let back: Blueprint = serde_json::from_str(&text).unwrap();
        assert_eq!(back, bp);
        assert_eq!(to_canonical(&back), text);
    }

    #[test]
    fn rejects_bad_loop_and_evaluator_settings() {
        let mut bp = templates::blueprint(StrategyKind::Random, templates::minimal_harness(), 3);
        bp.loop_config.parallelism = 0;
        bp.evaluator_config.time_budget_ms = 0;
        bp.loop_config.early_stop = Some(Rational::new(3, 2));
        let paths: Vec<_> = bp
            .validate()
            .unwrap_err()
            .into_iter()
            .map(|v| v.path)
            .collect();
        assert!(paths.contains(&"loop.parallelism".to_string()));
        assert!(paths.contains(&"evaluator_config.time_budget_ms".to_string()));
        assert!(paths.contains(&"loop.early_stop".to_string()));
    }

    #[test]
    fn external_strategy_requires_command() {
        let mut bp = templates::blueprint(StrategyKind::Random, templates::minimal_harness(), 3);
        bp.evolution_strategy.kind = StrategyKind::External;
        assert_eq!(
            bp.validate().unwrap_err()[0].path,
            "evolution_strategy.command"
        );
    }
}

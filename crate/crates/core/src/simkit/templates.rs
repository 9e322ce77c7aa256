//! Reference harnesses and blueprints for the StringForge environment.

use std::collections::BTreeMap;

use crate::model::{
    AgentKind, Blueprint, EvaluatorConfig, EvolutionStrategy, Harness, LoopConfig, Scalar,
    StrategyKind, Strictness,
};

pub const DEFAULT_MAX_STEPS: i64 = 12;
pub const DEFAULT_TIME_BUDGET_MS: u64 = 1000;

/// The untuned starting scaffold: one tool, no lookahead, cheapest model,
/// terse prompt. It is the first point of every space enumeration that
/// contains `append_a`.
pub fn minimal_harness() -> Harness {
    Harness {
        prompts: BTreeMap::from([
            (
                "system".to_string(),
                "You operate a string editor. Reach the target string using the available tools."
                    .to_string(),
            ),
            (
                "task".to_string(),
                "Transform the start string into the target string.".to_string(),
            ),
        ]),
        tools: vec!["append_a".to_string()],
        orchestration: BTreeMap::from([
            ("max_steps".to_string(), Scalar::Int(DEFAULT_MAX_STEPS)),
            ("planner_depth".to_string(), Scalar::Int(1)),
        ]),
        model_config: BTreeMap::from([
            ("model_tier".to_string(), Scalar::from("fast")),
            ("prompt_style".to_string(), Scalar::from("terse")),
        ]),
        extensions: BTreeMap::new(),
    }
}

/// Every core tool, deepest lookahead, strongest model, verbose prompt.
pub fn rich_harness() -> Harness {
    let mut h = minimal_harness();
    h.tools = vec!["append_a".into(), "append_b".into(), "drop_last".into()];
    h.orchestration
        .insert("planner_depth".into(), Scalar::Int(3));
    h.model_config
        .insert("model_tier".into(), Scalar::from("smart"));
    h.model_config
        .insert("prompt_style".into(), Scalar::from("verbose"));
    h
}

pub fn blueprint(kind: StrategyKind, initial_harness: Harness, k: u32) -> Blueprint {
    Blueprint {
        worker_binding: AgentKind::builtin(),
        initial_harness,
        evaluator_config: EvaluatorConfig {
            time_budget_ms: DEFAULT_TIME_BUDGET_MS,
            strictness: Strictness::Full,
            binding: AgentKind::builtin(),
        },
        evolution_strategy: EvolutionStrategy::builtin(kind),
        loop_config: LoopConfig {
            k,
            early_stop: None,
            parallelism: 1,
        },
    }
}

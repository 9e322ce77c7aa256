//! Concrete input/output examples for each component, with expected
//! values computed by hand or by independent enumeration in this file.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use harness_evo_core::meta::{run_meta_loop, MetaOptions, NoMetaObserver};
use harness_evo_core::metrics::{final_performance, meta_test_report, Convergence};
use harness_evo_core::model::{Audit, Bottleneck, Step};
use harness_evo_core::protocol::{MetaEvolution, MetaEvolveRequest, Proposal};
use harness_evo_core::simkit::{
    brute_force_oracle, corpus, evolve_exhaustive, evolve_hill_climb, meta_evolve_exhaustive,
    meta_evolve_hill_climb, sim_evaluate, sim_execute, templates, BuiltinMetaEvolution, Fallback,
    HarnessSpace, MetaSpace, MetaStrategy, Tool,
};
use harness_evo_core::{
    compare_scores, convergence_speed, run_inner_loop, scalarize, validate_harness, Action,
    AgentError, Blueprint, EvaluationReport, Harness, HarnessTarget, HistoryEntry, InnerRunResult,
    MetaHistoryEntry, Rational, Scalar, Score, StrategyKind, Strictness, Trace, Verdict,
};

fn score(frac: (i128, i128), t: u64) -> Score {
    Score::new(Rational::new(frac.0, frac.1), t).unwrap()
}

fn entry(i: u32, s: Score, verdict: Verdict, harness: Harness) -> HistoryEntry {
    HistoryEntry {
        iteration: i,
        task_id: "X".into(),
        harness,
        report: EvaluationReport {
            criterion_verdicts: vec![],
            state_verified: true,
            first_divergence: None,
            audit: Audit::new(0, s.total_time_ms()),
            score: s,
        },
        score: s,
        verdict,
    }
}

fn honest_step(index: u32, tool: &str, observation: &str, llm: u64) -> Step {
    Step {
        index,
        action: Action::tool(tool),
        observation: observation.into(),
        llm_time_ms: llm,
        tool_time_ms: 3,
    }
}

#[test]
fn pass_beats_faster_failure() {
    let a = score((1, 1), 900);
    let b = score((9, 10), 10);
    assert_eq!(compare_scores(Some(&a), Some(&b)), Ordering::Greater);
}

#[test]
fn time_breaks_ties_between_passes() {
    assert_eq!(
        compare_scores(Some(&score((1, 1), 50)), Some(&score((1, 1), 80))),
        Ordering::Greater
    );
}

#[test]
fn failing_half_score_scalarizes_to_nine_twentieths() {
    // 0.9 * 0.5 with no time bonus for a failing score.
    assert_eq!(
        scalarize(Some(&score((1, 2), 10)), 1000).unwrap(),
        Rational::new(9, 20)
    );
    assert_eq!(scalarize(None, 1000).unwrap(), Rational::ZERO);
}

#[test]
fn planner_depth_out_of_range_is_reported_at_its_path() {
    let mut h = templates::minimal_harness();
    h.orchestration
        .insert("planner_depth".into(), Scalar::Int(7));
    let v = validate_harness(&h, HarnessTarget::Builtin).unwrap_err();
    assert!(
        v.iter().any(|v| v.path == "orchestration.planner_depth"),
        "{v:?}"
    );
}

#[test]
fn solved_start_gives_empty_trace() {
    let task = corpus::make_task("S", "ab", "ab", "ab", 4);
    let trace = sim_execute(&templates::rich_harness(), &task).unwrap();
    assert!(trace.steps.is_empty());
    assert_eq!(
        (trace.totals.llm_time_ms, trace.totals.tool_time_ms),
        (0, 0)
    );
}

#[test]
fn two_appends_reach_ab() {
    let task = corpus::task("T1").unwrap();
    let mut h = templates::minimal_harness();
    h.tools = vec!["append_a".into(), "append_b".into()];
    let trace = sim_execute(&h, &task).unwrap();
    let actions: Vec<&str> = trace.steps.iter().map(|s| s.action.tool.as_str()).collect();
    assert_eq!(actions, ["append_a", "append_b"]);
    // Replay through the tool table by hand: "" -> "a" -> "ab".
    let mut s = String::new();
    for a in &actions {
        s.push(if *a == "append_a" { 'a' } else { 'b' });
    }
    assert_eq!(s, "ab");
    assert_eq!(trace.claimed_final_state, "ab");
    assert_eq!(
        (trace.totals.llm_time_ms, trace.totals.tool_time_ms),
        (10, 6)
    );
}

#[test]
fn swapcase_alone_stalls_until_max_steps() {
    let task = corpus::task("T1").unwrap();
    let mut h = templates::minimal_harness();
    h.tools = vec!["swapcase".into()];
    let trace = sim_execute(&h, &task).unwrap();
    assert_eq!(trace.steps.len() as i64, h.max_steps().unwrap());
    let (_, s) = sim_evaluate(&trace, &task, Strictness::Full).unwrap();
    assert!(!s.passed());
}

fn t1_honest_trace() -> Trace {
    Trace::from_steps(
        vec![
            honest_step(1, "append_a", "a", 5),
            honest_step(2, "append_b", "ab", 5),
        ],
        "ab".into(),
    )
}

#[test]
fn honest_trace_verifies_and_passes() {
    let task = corpus::task("T1").unwrap();
    let (report, s) = sim_evaluate(&t1_honest_trace(), &task, Strictness::Full).unwrap();
    assert!(report.state_verified);
    assert!(s.passed());
    assert_eq!(
        report.audit,
        Audit {
            llm_time_ms: 10,
            tool_time_ms: 6,
            dominant_bottleneck: Bottleneck::Llm
        }
    );
}

#[test]
fn altered_observation_is_located() {
    let task = corpus::task("T3").unwrap();
    let steps = vec![
        honest_step(1, "append_a", "a", 5),
        honest_step(2, "append_b", "ab", 5),
        honest_step(3, "append_a", "aba", 5),
    ];
    for corrupt in [2usize, 3] {
        let mut s = steps.clone();
        s[corrupt - 1].observation = "bbb".into();
        let (report, score) =
            sim_evaluate(&Trace::from_steps(s, "aba".into()), &task, Strictness::Full).unwrap();
        assert!(!report.state_verified);
        assert_eq!(report.first_divergence, Some(corrupt as u32));
        assert!(!score.passed());
    }
}

#[test]
fn unknown_tool_in_trace_is_rejected() {
    let task = corpus::task("T1").unwrap();
    let trace = Trace::from_steps(vec![honest_step(1, "teleport", "ab", 5)], "ab".into());
    assert!(sim_evaluate(&trace, &task, Strictness::Full).is_err());
}

#[test]
fn exhaustive_starts_at_first_point_and_ends_exhausted() {
    let space = HarnessSpace::core3();
    let h0 = templates::minimal_harness();
    assert_eq!(
        evolve_exhaustive(&space, &[], &h0),
        Proposal::Next(space.harness_at(0, &h0))
    );
    let history: Vec<HistoryEntry> = space
        .enumerate(&h0)
        .enumerate()
        .map(|(i, h)| entry(i as u32 + 1, score((0, 1), 0), Verdict::Regressed, h))
        .collect();
    assert_eq!(history.len(), 84);
    assert_eq!(
        evolve_exhaustive(&space, &history, &h0),
        Proposal::SpaceExhausted
    );
    assert_eq!(
        evolve_hill_climb(&space, &history, &h0, 3, Fallback::Enumeration),
        Proposal::SpaceExhausted
    );
}

#[test]
fn hill_climb_first_move_is_next_tool_mask() {
    let space = HarnessSpace::core3();
    let h0 = templates::minimal_harness();
    let history = vec![entry(1, score((1, 2), 30), Verdict::Improved, h0.clone())];
    // Tool masks count up from {append_a}=1; the upward neighbor is mask 2.
    let mut expected = h0.clone();
    expected.tools = vec!["append_b".into()];
    assert_eq!(
        evolve_hill_climb(&space, &history, &h0, 0, Fallback::Enumeration),
        Proposal::Next(expected)
    );
}

#[test]
fn hill_climb_leaves_a_field_whose_mutation_regressed() {
    let space = HarnessSpace::core3();
    let h0 = templates::minimal_harness();
    let mut tried = h0.clone();
    tried.tools = vec!["append_b".into()];
    let history = vec![
        entry(1, score((1, 2), 30), Verdict::Improved, h0.clone()),
        entry(2, score((0, 1), 30), Verdict::Regressed, tried),
    ];
    let Proposal::Next(next) = evolve_hill_climb(&space, &history, &h0, 0, Fallback::Enumeration)
    else {
        panic!("space is not exhausted");
    };
    assert_eq!(next.tools, h0.tools);
    assert_eq!(next.planner_depth(), Some(2));
}

fn meta_entry(
    round: u32,
    blueprint: Blueprint,
    meta_score: Rational,
    verdict: Verdict,
) -> MetaHistoryEntry {
    MetaHistoryEntry {
        round,
        blueprint,
        task_results: vec![],
        meta_score,
        verdict,
    }
}

#[test]
fn meta_climber_tunes_params_after_a_kind_switch_pays_off() {
    let mut space = MetaSpace::reference();
    space.initial_harnesses.truncate(1);
    space.kinds = vec![
        StrategyKind::Random,
        StrategyKind::HillClimb,
        StrategyKind::Exhaustive,
    ];
    space.params = vec![
        BTreeMap::new(),
        BTreeMap::from([("space".to_string(), Scalar::from("full"))]),
    ];
    space.k_values = vec![8];
    let random = space.blueprint_at(0);
    let mut climbing = random.clone();
    climbing.evolution_strategy.kind = StrategyKind::HillClimb;
    let history = vec![
        meta_entry(0, random, Rational::new(1, 2), Verdict::Improved),
        meta_entry(1, climbing.clone(), Rational::new(3, 4), Verdict::Improved),
    ];
    let Proposal::Next(next) = meta_evolve_hill_climb(&space, &history, &climbing, 0) else {
        panic!("space is not exhausted");
    };
    assert_eq!(next.evolution_strategy.kind, StrategyKind::HillClimb);
    assert_eq!(
        next.evolution_strategy.params.get("space"),
        Some(&Scalar::from("full"))
    );
}

#[test]
fn meta_exhaustive_covers_then_exhausts() {
    let space = MetaSpace::reference();
    assert_eq!(
        meta_evolve_exhaustive(&space, &[], &space.template),
        Proposal::Next(space.blueprint_at(0))
    );
    let history: Vec<MetaHistoryEntry> = space
        .enumerate()
        .enumerate()
        .map(|(i, bp)| meta_entry(i as u32, bp, Rational::ZERO, Verdict::Regressed))
        .collect();
    assert_eq!(
        meta_evolve_exhaustive(&space, &history, &space.template),
        Proposal::SpaceExhausted
    );
}

#[test]
fn oracle_on_t1_passes_at_minimum_passing_time() {
    let task = corpus::task("T1").unwrap();
    let space = HarnessSpace::core3();
    let h0 = templates::minimal_harness();
    let oracle = brute_force_oracle(&task, &space, &h0, Strictness::Full).unwrap();
    assert!(oracle.score.passed());
    let min_time = space
        .enumerate(&h0)
        .filter_map(|h| {
            let (_, s) =
                sim_evaluate(&sim_execute(&h, &task).unwrap(), &task, Strictness::Full).unwrap();
            s.passed().then_some(s.total_time_ms())
        })
        .min()
        .unwrap();
    assert_eq!(oracle.score.total_time_ms(), min_time);
}

#[test]
fn swapcase_space_cannot_reach_a_longer_target() {
    let task = corpus::task("T1").unwrap();
    let space = HarnessSpace::with_tools("swap", vec![Tool::Swapcase]);
    let oracle = brute_force_oracle(
        &task,
        &space,
        &templates::minimal_harness(),
        Strictness::Full,
    )
    .unwrap();
    assert!(!oracle.score.passed());
}

#[test]
fn first_iteration_improves_on_min_score() {
    for kind in [
        StrategyKind::Random,
        StrategyKind::HillClimb,
        StrategyKind::Exhaustive,
    ] {
        let bp = templates::blueprint(kind, templates::minimal_harness(), 1);
        let r = run_inner_loop(&corpus::task("T4").unwrap(), &bp, 5).unwrap();
        assert_eq!(r.history[0].verdict, Verdict::Improved);
    }
}

#[test]
fn equal_times_keep_the_earlier_pass() {
    let h = templates::minimal_harness();
    let history = vec![
        entry(1, score((1, 1), 40), Verdict::Improved, h.clone()),
        entry(2, score((1, 1), 20), Verdict::Improved, h.clone()),
    ];
    let (_, best) = harness_evo_core::select_best(&history);
    assert_eq!(best, Some(score((1, 1), 20)));
}

fn exhaustive_bp(k: u32) -> Blueprint {
    templates::blueprint(StrategyKind::Exhaustive, templates::minimal_harness(), k)
}

#[test]
fn meta_score_of_two_tasks_is_mean_of_oracle_scalars() {
    let tasks = vec![corpus::task("T1").unwrap(), corpus::task("T2").unwrap()];
    let bp = exhaustive_bp(84);
    let mut agent = BuiltinMetaEvolution::new(MetaStrategy::Exhaustive, MetaSpace::reference());
    let r = run_meta_loop(
        &tasks,
        &mut agent,
        &bp,
        1,
        0,
        MetaOptions::default(),
        &mut NoMetaObserver,
    )
    .unwrap();
    let scalars: Vec<Rational> = tasks
        .iter()
        .map(|t| {
            let o = brute_force_oracle(
                t,
                &HarnessSpace::core3(),
                &templates::minimal_harness(),
                Strictness::Full,
            )
            .unwrap();
            scalarize(Some(&o.score), 1000).unwrap()
        })
        .collect();
    assert_eq!(
        r.best_meta_score,
        (scalars[0] + scalars[1]) / Rational::from_integer(2)
    );
}

struct Repeat;

impl MetaEvolution for Repeat {
    fn meta_evolve(
        &mut self,
        request: &MetaEvolveRequest<'_>,
    ) -> Result<Proposal<Blueprint>, AgentError> {
        Ok(Proposal::Next(request.best.clone()))
    }
}

#[test]
fn equal_meta_score_is_a_regression() {
    let tasks = vec![corpus::task("T2").unwrap()];
    let r = run_meta_loop(
        &tasks,
        &mut Repeat,
        &exhaustive_bp(6),
        2,
        1,
        MetaOptions::default(),
        &mut NoMetaObserver,
    )
    .unwrap();
    assert_eq!(r.meta_history[0].meta_score, r.meta_history[1].meta_score);
    assert_eq!(r.meta_history[1].verdict, Verdict::Regressed);
}

#[test]
fn single_round_keeps_the_starting_blueprint() {
    let tasks = vec![corpus::task("T5").unwrap()];
    let bp = exhaustive_bp(4);
    let mut agent = BuiltinMetaEvolution::new(MetaStrategy::HillClimb, MetaSpace::reference());
    let r = run_meta_loop(
        &tasks,
        &mut agent,
        &bp,
        1,
        1,
        MetaOptions::default(),
        &mut NoMetaObserver,
    )
    .unwrap();
    assert_eq!(r.meta_history.len(), 1);
    assert_eq!(r.best_blueprint, bp);
}

/// Scores that scalarize exactly to the given value under a 1000 ms budget.
fn score_for_scalar(x: Rational) -> Score {
    let nine_tenths = Rational::new(9, 10);
    if x >= nine_tenths {
        // 0.9 + 0.1 * (1 - t/1000) = x  =>  t = 1000 * (1 - 10 (x - 0.9))
        let t = Rational::from_integer(1000)
            * (Rational::ONE - Rational::from_integer(10) * (x - nine_tenths));
        assert_eq!(t.denom(), 1);
        score((1, 1), t.numer() as u64)
    } else {
        let f = x / nine_tenths;
        score((f.numer(), f.denom()), 7)
    }
}

#[test]
fn convergence_examples() {
    let h = templates::minimal_harness();
    let hist: Vec<HistoryEntry> = [(4, 10), (4, 10), (92, 100), (95, 100)]
        .iter()
        .enumerate()
        .map(|(i, &(n, d))| {
            entry(
                i as u32 + 1,
                score_for_scalar(Rational::new(n, d)),
                Verdict::Regressed,
                h.clone(),
            )
        })
        .collect();
    let c = |t: Rational, hs: &[HistoryEntry]| convergence_speed(hs, t, 1000).unwrap();
    assert_eq!(c(Rational::new(9, 10), &hist), Convergence::Reached(3));
    assert_eq!(c(Rational::ZERO, &hist), Convergence::Reached(1));
    assert_eq!(c(Rational::new(9, 10), &[]), Convergence::NotReached);
}

fn result_with(best: Option<Score>) -> InnerRunResult {
    InnerRunResult {
        best_harness: templates::minimal_harness(),
        best_score: best,
        history: vec![],
        stopped_early: false,
    }
}

#[test]
fn final_performance_examples() {
    let p = Some(score((1, 1), 10));
    let f = Some(score((1, 2), 10));
    assert_eq!(
        final_performance(&[
            result_with(p),
            result_with(f),
            result_with(p),
            result_with(p)
        ])
        .unwrap(),
        Rational::new(3, 4)
    );
    assert_eq!(
        final_performance(&[result_with(None), result_with(None)]).unwrap(),
        Rational::ZERO
    );
    assert!(final_performance(&[]).is_err());
}

#[test]
fn corpus_pass_rate_matches_oracle_pass_fraction() {
    let bp = exhaustive_bp(84);
    let tasks = corpus::bundled();
    let results: Vec<InnerRunResult> = tasks
        .iter()
        .map(|t| run_inner_loop(t, &bp, 0).unwrap())
        .collect();
    let passing = tasks
        .iter()
        .filter(|t| {
            brute_force_oracle(
                t,
                &HarnessSpace::core3(),
                &templates::minimal_harness(),
                Strictness::Full,
            )
            .unwrap()
            .score
            .passed()
        })
        .count();
    assert_eq!(
        final_performance(&results).unwrap(),
        Rational::new(passing as i128, tasks.len() as i128)
    );
}

/// First enumeration index whose harness passes, by direct enumeration.
fn first_passing_index(task: &harness_evo_core::Task) -> Option<usize> {
    let h0 = templates::minimal_harness();
    let space = HarnessSpace::core3();
    let found = space.enumerate(&h0).position(|h| {
        let (_, s) = sim_evaluate(&sim_execute(&h, task).unwrap(), task, Strictness::Full).unwrap();
        s.passed()
    });
    found
}

#[test]
fn held_out_report_matches_enumeration() {
    let train: Vec<String> = (1..=10).map(|i| format!("T{i}")).collect();
    let test = vec![corpus::task("T11").unwrap(), corpus::task("T12").unwrap()];
    let report = meta_test_report(
        &exhaustive_bp(84),
        &train,
        &test,
        84,
        2,
        Rational::new(9, 10),
    )
    .unwrap();
    for (rec, task) in report.per_task.iter().zip(&test) {
        let expected = match first_passing_index(task) {
            Some(i) => Convergence::Reached(i as u32 + 1),
            None => Convergence::NotReached,
        };
        assert_eq!(rec.iterations_to_threshold, expected, "{}", task.id);
        assert_eq!(rec.final_pass, first_passing_index(task).is_some());
    }
    let overlap = meta_test_report(
        &exhaustive_bp(4),
        &train,
        &[corpus::task("T3").unwrap()],
        4,
        2,
        Rational::ONE,
    );
    assert_eq!(overlap.unwrap_err().code(), "train_test_overlap");
}

use criterion::{criterion_group, criterion_main, Criterion};
use harness_evo_core::simkit::{
    brute_force_oracle, corpus, sim_evaluate, sim_execute, templates, HarnessSpace,
};
use harness_evo_core::Strictness;
use std::hint::black_box;

fn oracle(c: &mut Criterion) {
    let task = corpus::task("T7").unwrap();
    let h0 = templates::minimal_harness();
    let core3 = HarnessSpace::core3();
    let full = HarnessSpace::by_name("full").unwrap();
    c.bench_function("oracle_core3_T7", |b| {
        b.iter(|| brute_force_oracle(black_box(&task), &core3, &h0, Strictness::Full).unwrap())
    });
    c.bench_function("oracle_full_T7", |b| {
        b.iter(|| brute_force_oracle(black_box(&task), &full, &h0, Strictness::Full).unwrap())
    });
}

fn evaluate(c: &mut Criterion) {
    let task = corpus::task("T9").unwrap();
    let trace = sim_execute(&templates::rich_harness(), &task).unwrap();
    c.bench_function("sim_evaluate_T9", |b| {
        b.iter(|| sim_evaluate(black_box(&trace), &task, Strictness::Full).unwrap())
    });
}

fn execute(c: &mut Criterion) {
    let task = corpus::task("T11").unwrap();
    let h = templates::rich_harness();
    c.bench_function("sim_execute_T11_rich", |b| {
        b.iter(|| sim_execute(black_box(&h), &task).unwrap())
    });
}

criterion_group!(benches, oracle, evaluate, execute);
criterion_main!(benches);

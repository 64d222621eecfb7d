use criterion::{black_box, criterion_group, criterion_main, Criterion};
use mpsk_receiver::{
    evaluate_strategy, make_mpsk_ensemble, non_optimized_strategy, optimize_flat, receiver::error_probability,
    simulate_trials, OptimizerConfig, Strategy, SystemModel,
};

fn exact_evaluation(c: &mut Criterion) {
    let e = make_mpsk_ensemble(4, 1.0, None).unwrap();
    let s = SystemModel::new(0.7, 0.996, 0.001, 10).unwrap();
    let strat = non_optimized_strategy(10).unwrap();
    c.bench_function("error_probability N=10", |b| {
        b.iter(|| error_probability(black_box(&strat), &e, &s).unwrap())
    });
    c.bench_function("evaluate_strategy N=10 with histories", |b| {
        b.iter(|| evaluate_strategy(black_box(&strat), &e, &s).unwrap())
    });
    let hist = Strategy::historical(10, vec![1.2; 1023]).unwrap();
    c.bench_function("error_probability historical N=10", |b| {
        b.iter(|| error_probability(black_box(&hist), &e, &s).unwrap())
    });
}

fn optimization(c: &mut Criterion) {
    let e = make_mpsk_ensemble(4, 1.0, None).unwrap();
    let s = SystemModel::ideal(10).unwrap();
    let cfg = OptimizerConfig::default();
    let mut group = c.benchmark_group("optimize");
    group.sample_size(10);
    group.bench_function("flat N=10", |b| b.iter(|| optimize_flat(&e, &s, &cfg).unwrap()));
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let e = make_mpsk_ensemble(4, 1.0, None).unwrap();
    let s = SystemModel::new(0.7, 0.996, 0.001, 10).unwrap();
    let strat = Strategy::flat(10, 1.3).unwrap();
    let mut group = c.benchmark_group("montecarlo");
    group.sample_size(10);
    group.bench_function("1e5 trials", |b| {
        b.iter(|| simulate_trials(&strat, &e, &s, 100_000, black_box(42)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, exact_evaluation, optimization, monte_carlo);
criterion_main!(benches);

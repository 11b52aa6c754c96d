use adfm_core::overlap::FixedTestOptions;
use adfm_core::rdfm::make_rdfm_all;
use adfm_core::spectral::DEFAULT_CLUSTER_TOL;
use adfm_core::*;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPoolBuilder;
use std::hint::black_box;

fn four_station() -> SystemModel {
    SystemModel::from_json_str(include_str!("../fixtures/four_station.json")).unwrap()
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// A one-thread pool against a default-sized pool. Build with
/// `--no-default-features` to measure the plain sequential path instead.
fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        ("single", ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("pool", ThreadPoolBuilder::new().build().unwrap()),
    ]
}

fn bench_measure(c: &mut Criterion) {
    let model = four_station();
    let opts = MeasureOptions::default();
    let mut group = c.benchmark_group("adfm_measure");
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::new(label, "four_station"), |b| {
            pool.install(|| b.iter(|| adfm_measure(black_box(&model), re(1.0), &opts).unwrap()))
        });
    }
    group.finish();
}

fn bench_removal_sets(c: &mut Criterion) {
    let cs = canonicalize(&four_station(), re(1.0), DEFAULT_CLUSTER_TOL).unwrap();
    let perturbed = make_rdfm_all(&cs, 0.015).unwrap().model;
    let opts = FixedTestOptions {
        oracle: None,
        ..FixedTestOptions::default()
    };
    let mut group = c.benchmark_group("minimal_removal_sets");
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::new(label, "sigma1_k2"), |b| {
            pool.install(|| b.iter(|| minimal_removal_sets(black_box(&perturbed), re(1.0), 2, &opts).unwrap()))
        });
    }
    group.finish();
}

fn bench_ranking(c: &mut Criterion) {
    let model = four_station();
    let candidates: Vec<InteractionPattern> = ["K14,K31", "K14,K41", "K13,K24,K41", "K12,K34,K31", "K12,K24,K31"]
        .iter()
        .map(|s| InteractionPattern::parse(s, 4).unwrap())
        .collect();
    let opts = MeasureOptions::default();
    let mut group = c.benchmark_group("rank_patterns");
    group.sample_size(20);
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::new(label, "five_candidates"), |b| {
            pool.install(|| b.iter(|| rank_patterns(black_box(&model), &candidates, &[re(1.0), re(3.0)], &opts).unwrap()))
        });
    }
    group.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let model = four_station();
    let pattern = InteractionPattern::decentralized(4);
    let cfg = OracleConfig::default();
    let mut group = c.benchmark_group("random_feedback_oracle");
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::new(label, "100_trials"), |b| {
            pool.install(|| b.iter(|| random_feedback_oracle(black_box(&model), &pattern, re(2.0), &cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_measure, bench_removal_sets, bench_ranking, bench_oracle);
criterion_main!(benches);

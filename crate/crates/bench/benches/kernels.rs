use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use queuetail_core::bounds_mmn::gn_log_integral;
use queuetail_core::exact::MmnChain;
use queuetail_core::sim::simulate_jsq;
use queuetail_core::{HtScaling, JsqSystem, MmnSystem, SimConfig};

fn gn_integral(c: &mut Criterion) {
    let sys = MmnSystem::new(10_000, 1.0, 0.01).unwrap();
    c.bench_function("gn_log_integral n=1e4", |b| {
        b.iter(|| gn_log_integral(black_box(&sys), black_box(1.0)).unwrap())
    });
}

fn birth_death(c: &mut Criterion) {
    let scaling = HtScaling::new(1.0, 0.3).unwrap();
    let n = 1_000_000;
    let sys = MmnSystem::new(n, 1.0, scaling.eps_of(n).unwrap()).unwrap();
    let mut group = c.benchmark_group("birth_death");
    group.sample_size(10);
    group.bench_function("mmn log-space solve n=1e6", |b| {
        b.iter(|| MmnChain::solve_log(black_box(sys), -40.0).unwrap().p_r_gt_0())
    });
    group.finish();
}

fn jsq_events(c: &mut Criterion) {
    let sys = JsqSystem::new(8, 1.0, 0.05).unwrap();
    let cfg = SimConfig::new(1, 1_000_000).with_theta_grid(vec![0.5]);
    let mut group = c.benchmark_group("simulate_jsq");
    group.sample_size(10);
    group.bench_function("n=8, 1e6 events", |b| b.iter(|| simulate_jsq(black_box(&sys), &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, gn_integral, birth_death, jsq_events);
criterion_main!(benches);

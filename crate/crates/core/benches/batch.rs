use criterion::{criterion_group, criterion_main, Criterion};

use dscfq_core::batch::{run_many, run_many_seq};
use dscfq_core::engine::Scenario;
use dscfq_core::sched::SchedulerKind;

fn seed_batch(c: &mut Criterion) {
    let scenarios: Vec<Scenario> = (0..16)
        .map(|seed| Scenario::default_network(SchedulerKind::Dscfq, 0.04, seed).with_departures(2000))
        .collect();
    let mut g = c.benchmark_group("seed_batch_16x2000");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| run_many(&scenarios).unwrap()));
    g.bench_function("sequential", |b| b.iter(|| run_many_seq(&scenarios).unwrap()));
    g.finish();
}

criterion_group!(benches, seed_batch);
criterion_main!(benches);

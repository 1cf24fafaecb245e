//! Compares batch trajectory integration through the crate's map layer
//! (rayon when the `parallel` feature is on) against a plain sequential
//! loop over the same work.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ctds_core::dynamics::{ContinuousState, CtdsSystem};
use ctds_core::generators::gen_random_ksat;
use ctds_core::integrator::integrate;
use ctds_core::{RunOutcome, StepControl};

fn run_one(sys: &CtdsSystem, num_vars: usize, num_clauses: usize, start: u64) -> RunOutcome {
    use rand::Rng;
    let mut rng = ctds_core::rng::substream(99, start);
    let s: Vec<f64> = (0..num_vars).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let control = StepControl {
        t_max: 50.0,
        ..Default::default()
    };
    integrate(sys, ContinuousState::new(s, num_clauses), &control, None)
}

fn bench_batch(c: &mut Criterion) {
    let n = 30;
    let m = (4.0 * n as f64).round() as usize;
    let formula = gen_random_ksat(n, m, 3, 7).unwrap();
    let sys = CtdsSystem::new(&formula);
    let starts = 16usize;

    let mut group = c.benchmark_group("batch_integration");
    group.sample_size(10);
    group.bench_with_input(
        BenchmarkId::new("map_layer", starts),
        &starts,
        |b, &starts| {
            b.iter(|| {
                ctds_core::parallel::map_indexed(starts, |i| run_one(&sys, n, m, i as u64))
            })
        },
    );
    group.bench_with_input(
        BenchmarkId::new("sequential_loop", starts),
        &starts,
        |b, &starts| {
            b.iter(|| {
                (0..starts)
                    .map(|i| run_one(&sys, n, m, i as u64))
                    .collect::<Vec<_>>()
            })
        },
    );
    group.finish();
}

criterion_group!(benches, bench_batch);
criterion_main!(benches);

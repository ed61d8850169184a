use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use evolsort::harness::{map_seeds, map_seeds_sequential, seed_list, Start};
use evolsort::perm::mdev_sorted;
use evolsort::{Algorithm, PerturbationSpec, ProcessState, StepSchedule};

fn one_run(n: usize, steps: u64, seed: u64) -> u64 {
    let spec = PerturbationSpec::adjacent();
    let mut state = ProcessState::new(Start::Reverse.build(n, seed).unwrap(), seed);
    let mut schedule = StepSchedule::fixed(1, n).unwrap();
    state
        .run::<evolsort::model::ModelError, _>(&spec, &mut schedule, Algorithm::Naive, steps, |_, _| Ok(()))
        .unwrap();
    mdev_sorted(&state.pi)
}

fn seeds(c: &mut Criterion) {
    let mut g = c.benchmark_group("seed_map");
    g.sample_size(10);
    for &n in &[64usize, 256] {
        let seeds = seed_list(1, 8);
        let steps = 40 * (n * n) as u64;
        g.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, &n| {
            b.iter(|| map_seeds(&seeds, |s| one_run(n, steps, s)))
        });
        g.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| map_seeds_sequential(&seeds, |s| one_run(n, steps, s)))
        });
    }
    g.finish();
}

criterion_group!(benches, seeds);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hartogs::bergman::{TruncationPolicy, WeightedSpace};
use hartogs::domain::DomainParams;
use hartogs::oracle::{dirichlet_simplex_mc, monomial_norm_mc, McConfig};
use hartogs::parallel::Backend;
use std::hint::black_box;

const BACKENDS: [(&str, Backend); 2] = [("sequential", Backend::Sequential), ("parallel", Backend::Parallel)];

fn simplex_mc(c: &mut Criterion) {
    let mut group = c.benchmark_group("dirichlet_simplex_mc");
    group.sample_size(10);
    for (name, backend) in BACKENDS {
        let cfg = McConfig::new(1 << 20, 0, 1 << 13).unwrap().with_backend(backend);
        group.bench_function(BenchmarkId::new(name, "m=3, 2^20 samples"), |b| {
            b.iter(|| dirichlet_simplex_mc(black_box(&[1.0, 2.0, 0.5]), 6.0, 1, &cfg).unwrap())
        });
    }
    group.finish();
}

fn norm_mc(c: &mut Criterion) {
    let params = DomainParams::new(2, 2, 1.0, 0.5).unwrap();
    let (p, q) = (vec![1, 0].into(), vec![2, 1].into());
    let mut group = c.benchmark_group("monomial_norm_mc");
    group.sample_size(10);
    for (name, backend) in BACKENDS {
        let cfg = McConfig::new(1 << 20, 0, 1 << 13).unwrap().with_backend(backend);
        group.bench_function(BenchmarkId::new(name, "n=m=2, 2^20 samples"), |b| {
            b.iter(|| monomial_norm_mc(&params, 6.5, &p, &q, &cfg).unwrap())
        });
    }
    group.finish();
}

fn epsilon_grid(c: &mut Criterion) {
    let space = WeightedSpace::new(DomainParams::new(3, 3, 1.0, 1.0).unwrap(), 9.0).unwrap();
    let policy = TruncationPolicy::default();
    let grid: Vec<f64> = (0..=190).map(|i| i as f64 / 200.0).collect();
    let mut group = c.benchmark_group("epsilon_grid");
    for (name, backend) in BACKENDS {
        group.bench_function(BenchmarkId::new(name, "191 points"), |b| {
            b.iter(|| space.epsilon_grid(black_box(&grid), &policy, backend).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, simplex_mc, norm_mc, epsilon_grid);
criterion_main!(benches);

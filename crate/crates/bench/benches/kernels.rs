use branchtail::sim::{evolve_pool_r, initial_pool_q, ExactSampler, PoolKind};
use branchtail::tail::{hill, ks_distance, tail_ratio, Denominator};
use branchtail::{BranchingLaw, DistributionSpec, SeedNode};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::Rng;

fn zn_law() -> BranchingLaw {
    BranchingLaw::DeterministicWeight {
        q: DistributionSpec::constant(1.0),
        n: DistributionSpec::zeta_tail(2.0).unwrap(),
        c: 0.4 / (std::f64::consts::PI.powi(2) / 6.0),
    }
}

fn pareto_sample(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = SeedNode::root(seed).rng();
    (0..n)
        .map(|_| rng.gen::<f64>().max(f64::MIN_POSITIVE).powf(-0.5))
        .collect()
}

fn bench_evolve(c: &mut Criterion) {
    let law = zn_law();
    let mut group = c.benchmark_group("evolve_pool_r");
    for m in [10_000usize, 100_000] {
        let pool = initial_pool_q(&law, PoolKind::RPartial, m, SeedNode::root(1)).unwrap();
        group.throughput(Throughput::Elements(m as u64));
        group.bench_with_input(BenchmarkId::from_parameter(m), &pool, |b, pool| {
            b.iter(|| evolve_pool_r(&law, pool, SeedNode::root(2)).unwrap())
        });
    }
    group.finish();
}

fn bench_exact(c: &mut Criterion) {
    let law = zn_law();
    let sampler = ExactSampler::new(&law);
    let mut group = c.benchmark_group("sample_r_exact");
    for depth in [3u32, 6] {
        group.bench_with_input(BenchmarkId::from_parameter(depth), &depth, |b, &depth| {
            let mut rng = SeedNode::root(3).rng();
            b.iter(|| sampler.sample_r(depth, &mut rng).unwrap())
        });
    }
    group.finish();
}

fn bench_estimators(c: &mut Criterion) {
    let a = pareto_sample(100_000, 4);
    let b = pareto_sample(100_000, 5);
    c.bench_function("ks_distance/100000", |bench| {
        bench.iter(|| ks_distance(black_box(&a), black_box(&b)))
    });
    c.bench_function("hill/100000/k=1000", |bench| {
        bench.iter(|| hill(black_box(&a), 1000).unwrap())
    });
    c.bench_function("tail_ratio/100000", |bench| {
        bench.iter(|| {
            tail_ratio(
                black_box(&a),
                Denominator::Sample(&b),
                &[0.01, 0.003, 0.001],
                50,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, bench_evolve, bench_exact, bench_estimators);
criterion_main!(benches);

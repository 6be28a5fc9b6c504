use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use swanlab_bench::{boundary_model, dwork2, rank_four, two_leaf_sum};
use swanlab_core::{break_multiset, qi, subharmonicity_check, sweep_simplex, Normalization, PreparedModule, WeightVector};

fn breaks(c: &mut Criterion) {
    let mut g = c.benchmark_group("break_multiset");
    for (name, m) in [("rank1", dwork2(5, &[(-2, -3)]).unwrap()), ("rank4", rank_four(5).unwrap())] {
        let prepared = PreparedModule::new(&m).unwrap();
        let w = WeightVector::new(vec![qi(2), qi(3)]);
        g.bench_function(name, |b| {
            b.iter(|| break_multiset(black_box(&prepared), black_box(&w), &Normalization::Simplex).unwrap())
        });
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("sweep_simplex");
    g.sample_size(10);
    let m = two_leaf_sum(5).unwrap();
    for grid in [6u32, 12, 24] {
        g.bench_with_input(BenchmarkId::from_parameter(grid), &grid, |b, &grid| {
            b.iter(|| sweep_simplex(black_box(&m), grid).unwrap())
        });
    }
    g.finish();
}

fn surface(c: &mut Criterion) {
    let mut g = c.benchmark_group("subharmonicity_check");
    for (name, exps) in [("x_t^-p", vec![(1, -5)]), ("cubic", vec![(3, -1), (1, -1)])] {
        let model = boundary_model(5, &exps).unwrap();
        g.bench_function(name, |b| b.iter(|| subharmonicity_check(black_box(&model)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, breaks, sweep, surface);
criterion_main!(benches);

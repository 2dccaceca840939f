use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use focused_fdr::filters::Filter;
use focused_fdr::procedures::{bh, focused_bh, focused_bh_with_vhat, VhatEstimator};
use focused_fdr_bench::{annotated_dag, clumping, permutations, pvalues};

fn step_up(c: &mut Criterion) {
    let mut group = c.benchmark_group("step_up");
    for m in [1_000usize, 10_000, 100_000] {
        let p = pvalues(m, 11);
        group.bench_with_input(BenchmarkId::new("bh", m), &p, |b, p| {
            b.iter(|| bh(black_box(p), 0.1).unwrap())
        });
        let f = clumping(m, 30);
        group.bench_with_input(BenchmarkId::new("focused_bh_clumping", m), &p, |b, p| {
            b.iter(|| focused_bh(black_box(p), 0.1, &f).unwrap())
        });
    }
    group.finish();
}

fn graph_filters(c: &mut Criterion) {
    let mut group = c.benchmark_group("graph_filters");
    let g = annotated_dag(170, 728);
    let p = pvalues(g.len(), 12);
    let outer = Filter::outer_nodes(g.clone());
    let soft = Filter::soft_outer_nodes(g.clone()).unwrap();
    group.bench_function("outer_nodes_profile", |b| {
        b.iter(|| outer.threshold_profile(black_box(p.values())).unwrap())
    });
    group.bench_function("soft_outer_nodes_profile", |b| {
        b.iter(|| soft.threshold_profile(black_box(p.values())).unwrap())
    });
    group.bench_function("focused_bh_soft_outer_nodes", |b| {
        b.iter(|| focused_bh(black_box(&p), 0.1, &soft).unwrap())
    });
    group.finish();
}

fn permutation(c: &mut Criterion) {
    let m = 600;
    let p = pvalues(m, 13);
    let perm = VhatEstimator::Permutation(permutations(m, 100, 14));
    let f = clumping(m, 30);
    c.bench_function("focused_bh_perm_600x100", |b| {
        b.iter(|| focused_bh_with_vhat(black_box(&p), 0.1, &f, &perm).unwrap())
    });
}

criterion_group!(benches, step_up, graph_filters, permutation);
criterion_main!(benches);

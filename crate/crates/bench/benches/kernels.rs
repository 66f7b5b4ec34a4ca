use chanest::numkernel::{dft, eig_hermitian, hermitian_solve, svd_decompose};
use chanest_bench::{hermitian, signal};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn transforms(c: &mut Criterion) {
    let mut g = c.benchmark_group("dft");
    for n in [64, 256, 1024] {
        let x = signal(n, 1);
        g.bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| {
            b.iter(|| dft(black_box(x), false).unwrap())
        });
    }
    g.finish();
}

fn decompositions(c: &mut Criterion) {
    let mut g = c.benchmark_group("decompositions");
    g.sample_size(20);
    for n in [16, 64] {
        let a = hermitian(n, 7);
        g.bench_with_input(BenchmarkId::new("eig_hermitian", n), &a, |b, a| {
            b.iter(|| eig_hermitian(black_box(a)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("svd", n), &a, |b, a| {
            b.iter(|| svd_decompose(black_box(a)).unwrap())
        });
        let rhs = signal(n, 3);
        g.bench_with_input(BenchmarkId::new("hermitian_solve", n), &a, |b, a| {
            b.iter(|| hermitian_solve(black_box(a), black_box(&rhs)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, transforms, decompositions);
criterion_main!(benches);

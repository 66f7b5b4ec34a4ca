use chanest::estimators::{
    estimate_ls, kalman_step_scalar, kalman_step_vector, FreqCorrelation, KalmanState, MlProjector,
    MmseEstimator, SpectralSmoother,
};
use chanest_bench::{default_profile, signal, unit_symbols};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

const N: usize = 64;

fn pilot_estimators(c: &mut Criterion) {
    let pdp = default_profile();
    let y = signal(N, 11);
    let x = unit_symbols(N);
    let h_ls = estimate_ls(&y, &x).unwrap();
    let corr = FreqCorrelation::from_pdp(&pdp, N, 10.0, 17.0 / 9.0).unwrap();

    let mut g = c.benchmark_group("estimators_n64");
    g.bench_function("ls", |b| b.iter(|| estimate_ls(black_box(&y), &x).unwrap()));
    let mmse = MmseEstimator::full(&pdp, N).unwrap();
    g.bench_function("mmse", |b| {
        b.iter(|| mmse.estimate(black_box(&y), &x, 0.1).unwrap())
    });
    g.bench_function("lmmse_build", |b| {
        b.iter(|| SpectralSmoother::full(black_box(&corr)).unwrap())
    });
    let smoother = SpectralSmoother::full(&corr).unwrap();
    g.bench_function("lmmse_apply", |b| {
        b.iter(|| smoother.apply(black_box(&h_ls)).unwrap())
    });
    let ml = MlProjector::new(N, 16, 16).unwrap();
    g.bench_function("ml_apply", |b| {
        b.iter(|| ml.apply(black_box(&h_ls)).unwrap())
    });
    g.finish();
}

fn kalman(c: &mut Criterion) {
    let pdp = default_profile();
    let y = signal(N, 5);
    let x = unit_symbols(N);
    let mut g = c.benchmark_group("kalman_step");
    let scalar = KalmanState::scalar_from_doppler(0.01, 1.0, 2).unwrap();
    g.bench_function("scalar_ar2_x64", |b| {
        let mut states = vec![scalar.clone(); N];
        b.iter(|| {
            for (k, st) in states.iter_mut().enumerate() {
                black_box(kalman_step_scalar(st, y[k], x[k], 0.1).unwrap());
            }
        })
    });
    let r_hh = FreqCorrelation::from_pdp(&pdp, N, 1.0, 1.0).unwrap().r_hh;
    let vector = KalmanState::vector_from_correlation(&r_hh, 0.01).unwrap();
    g.sample_size(20);
    g.bench_function("vector_ar1_n64", |b| {
        let mut st = vector.clone();
        b.iter(|| black_box(kalman_step_vector(&mut st, &y, &x, 0.1).unwrap()))
    });
    g.finish();
}

criterion_group!(benches, pilot_estimators, kalman);
criterion_main!(benches);

//! Shared inputs for the benchmarks in `benches/`.

use chanest::channel::PowerDelayProfile;
use chanest::numkernel::ComplexMatrix;
use chanest::Complex64;

/// Deterministic pseudo-random complex values, no RNG dependency.
pub fn signal(n: usize, seed: u64) -> Vec<Complex64> {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    (0..n).map(|_| Complex64::new(next(), next())).collect()
}

/// QPSK-like unit-modulus symbols.
pub fn unit_symbols(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4 * (2 * (k % 4) + 1) as f64))
        .collect()
}

/// Hermitian positive definite `n × n` matrix.
pub fn hermitian(n: usize, seed: u64) -> ComplexMatrix {
    let v = signal(n * n, seed);
    let a = ComplexMatrix::from_fn(n, n, |i, j| v[i * n + j]);
    let mut h = a.matmul(&a.adjoint());
    h.add_diag(1e-3);
    h
}

pub fn default_profile() -> PowerDelayProfile {
    PowerDelayProfile::exponential(4, 2.0).expect("valid profile")
}

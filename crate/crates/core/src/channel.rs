//! Tapped-delay-line Rayleigh channel with Jakes Doppler statistics.
//!
//! Each tap is a sum of `n_oscillators` equal-power sinusoids with random
//! phases. Arrival angles sit on an equispaced grid with a random offset kept
//! away from the mirror-symmetric configuration, so two oscillators never
//! share a Doppler shift and the time-averaged autocorrelation of a single
//! realization tracks `J0(2π f_d T m)`.
//!
//! Taps are held constant over an OFDM symbol and change between symbols.
//! With a cyclic prefix at least as long as the largest delay the
//! demodulated subcarriers obey `Y(k) = H(k) X(k) + W(k)` exactly.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkernel::{
    bessel_j0, hermitian_solve, hermitian_solve_many, ComplexMatrix, LinalgError,
};
use crate::seed::{derive_seed, rng_from, Stream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("power delay profile: {0}")]
    InvalidProfile(String),
    #[error("tap delay {delay} is not shorter than the cyclic prefix ({cp})")]
    DelayExceedsPrefix { delay: usize, cp: usize },
    #[error("doppler rate must be finite and non-negative, got {0}")]
    InvalidDoppler(f64),
    #[error("need at least 8 oscillators per tap, got {0}")]
    TooFewOscillators(usize),
    #[error("symbol length {len} is shorter than N = {n}")]
    BadSymbolLength { len: usize, n: usize },
    #[error("symbol index {index} out of range ({n_symbols} symbols)")]
    SymbolOutOfRange { index: usize, n_symbols: usize },
    #[error("autoregressive fit: {0}")]
    ArFit(String),
    #[error("vector autoregressive order {0} is not supported (only 1)")]
    UnsupportedVectorOrder(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub delay: usize,
    pub power: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerDelayProfile {
    taps: Vec<Tap>,
}

impl PowerDelayProfile {
    /// Validates an already normalized profile.
    pub fn new(taps: Vec<Tap>) -> Result<Self, ChannelError> {
        if taps.is_empty() {
            return Err(ChannelError::InvalidProfile("no taps".into()));
        }
        if taps.windows(2).any(|w| w[0].delay >= w[1].delay) {
            return Err(ChannelError::InvalidProfile(
                "delays must be strictly increasing".into(),
            ));
        }
        if taps
            .iter()
            .any(|t| !(t.power > 0.0) || !t.power.is_finite())
        {
            return Err(ChannelError::InvalidProfile(
                "tap powers must be positive".into(),
            ));
        }
        let total: f64 = taps.iter().map(|t| t.power).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ChannelError::InvalidProfile(format!(
                "tap powers sum to {total}, expected 1"
            )));
        }
        Ok(Self { taps })
    }

    /// Scales `powers` to unit sum.
    pub fn normalized(delays: &[usize], powers: &[f64]) -> Result<Self, ChannelError> {
        if delays.len() != powers.len() {
            return Err(ChannelError::InvalidProfile(format!(
                "{} delays but {} powers",
                delays.len(),
                powers.len()
            )));
        }
        let total: f64 = powers.iter().sum();
        if !(total > 0.0) {
            return Err(ChannelError::InvalidProfile(
                "tap powers must be positive".into(),
            ));
        }
        let taps = delays
            .iter()
            .zip(powers)
            .map(|(&delay, &p)| Tap {
                delay,
                power: p / total,
            })
            .collect();
        let mut pdp = Self { taps };
        // absorb rounding so the unit-sum invariant holds exactly enough
        let residual = 1.0 - pdp.total_power();
        pdp.taps[0].power += residual;
        Self::new(pdp.taps)
    }

    /// `n_taps` taps at delays `0..n_taps` with power `∝ e^{−τ/decay}`.
    pub fn exponential(n_taps: usize, decay: f64) -> Result<Self, ChannelError> {
        let delays: Vec<usize> = (0..n_taps).collect();
        let powers: Vec<f64> = delays
            .iter()
            .map(|&d| (-(d as f64) / decay).exp())
            .collect();
        Self::normalized(&delays, &powers)
    }

    /// Single unit tap at delay zero.
    pub fn flat() -> Self {
        Self {
            taps: vec![Tap {
                delay: 0,
                power: 1.0,
            }],
        }
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    pub fn delays(&self) -> Vec<usize> {
        self.taps.iter().map(|t| t.delay).collect()
    }

    pub fn powers(&self) -> Vec<f64> {
        self.taps.iter().map(|t| t.power).collect()
    }

    pub fn max_delay(&self) -> usize {
        self.taps.last().map_or(0, |t| t.delay)
    }

    pub fn total_power(&self) -> f64 {
        self.taps.iter().map(|t| t.power).sum()
    }

    pub fn check_prefix(&self, cp: usize) -> Result<(), ChannelError> {
        match self.taps.iter().find(|t| t.delay >= cp) {
            Some(t) => Err(ChannelError::DelayExceedsPrefix { delay: t.delay, cp }),
            None => Ok(()),
        }
    }

    /// Frequency response of a tap vector laid out on this profile's delays:
    /// `H_k = Σ_l h_l e^{−j2πkτ_l/N}`.
    pub fn frequency_response(&self, gains: &[Complex64], n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|k| {
                self.taps
                    .iter()
                    .zip(gains)
                    .map(|(t, &g)| {
                        g * Complex64::from_polar(
                            1.0,
                            -2.0 * PI * ((k * t.delay) % n) as f64 / n as f64,
                        )
                    })
                    .sum()
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FadingSpec {
    /// Maximum Doppler frequency times the OFDM symbol duration.
    pub doppler: f64,
    pub n_oscillators: usize,
    pub seed: u64,
}

impl FadingSpec {
    pub fn new(doppler: f64, seed: u64) -> Self {
        Self {
            doppler,
            n_oscillators: 32,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.doppler >= 0.0) || !self.doppler.is_finite() {
            return Err(ChannelError::InvalidDoppler(self.doppler));
        }
        if self.n_oscillators < 8 {
            return Err(ChannelError::TooFewOscillators(self.n_oscillators));
        }
        Ok(())
    }

    /// Reference tap autocorrelation `J0(2π f_d T m)`.
    pub fn reference_correlation(&self, lag: usize) -> f64 {
        bessel_j0(2.0 * PI * self.doppler * lag as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    /// `n_symbols × n_taps`, one row per OFDM symbol.
    pub tap_gains: ComplexMatrix,
    /// `n_symbols × N`.
    pub freq_response: ComplexMatrix,
    pub pdp: PowerDelayProfile,
}

impl ChannelRealization {
    /// Builds a realization from explicit per-symbol tap gains.
    pub fn from_taps(
        pdp: PowerDelayProfile,
        tap_gains: ComplexMatrix,
        n_subcarriers: usize,
    ) -> Self {
        assert_eq!(
            tap_gains.cols(),
            pdp.taps().len(),
            "one gain column per tap"
        );
        let mut freq = ComplexMatrix::zeros(tap_gains.rows(), n_subcarriers);
        for s in 0..tap_gains.rows() {
            let row = pdp.frequency_response(tap_gains.row(s), n_subcarriers);
            freq.row_mut(s).copy_from_slice(&row);
        }
        Self {
            tap_gains,
            freq_response: freq,
            pdp,
        }
    }

    /// Time-invariant channel with the given gains on every symbol.
    pub fn fixed(
        pdp: PowerDelayProfile,
        gains: &[Complex64],
        n_symbols: usize,
        n_subcarriers: usize,
    ) -> Self {
        let taps = ComplexMatrix::from_fn(n_symbols, gains.len(), |_, l| gains[l]);
        Self::from_taps(pdp, taps, n_subcarriers)
    }

    pub fn n_symbols(&self) -> usize {
        self.tap_gains.rows()
    }

    pub fn n_subcarriers(&self) -> usize {
        self.freq_response.cols()
    }

    /// Dense impulse response of one symbol, length `max_delay + 1`.
    pub fn impulse_response(&self, symbol: usize) -> Vec<Complex64> {
        let mut h = vec![Complex64::new(0.0, 0.0); self.pdp.max_delay() + 1];
        for (t, &g) in self.pdp.taps().iter().zip(self.tap_gains.row(symbol)) {
            h[t.delay] += g;
        }
        h
    }
}

/// Sum-of-sinusoids Rayleigh fading, one independent process per tap.
pub fn generate_fading(
    pdp: &PowerDelayProfile,
    spec: &FadingSpec,
    n_symbols: usize,
    n_subcarriers: usize,
) -> Result<ChannelRealization, ChannelError> {
    spec.validate()?;
    let m = spec.n_oscillators;
    let n_taps = pdp.taps().len();
    let mut gains = ComplexMatrix::zeros(n_symbols.max(1), n_taps);
    for (l, tap) in pdp.taps().iter().enumerate() {
        let mut rng = rng_from(derive_seed(
            spec.seed,
            &[Stream::Oscillator as u64, l as u64],
        ));
        let offset = PI / 2.0 + rng.random_range(-PI / 4.0..PI / 4.0);
        let oscillators: Vec<(f64, f64)> = (0..m)
            .map(|i| {
                let angle = (2.0 * PI * i as f64 + offset) / m as f64;
                let omega = 2.0 * PI * spec.doppler * angle.cos();
                let phase = rng.random_range(0.0..2.0 * PI);
                (omega, phase)
            })
            .collect();
        let amp = (tap.power / m as f64).sqrt();
        for n in 0..n_symbols {
            let t = n as f64;
            let g: Complex64 = oscillators
                .iter()
                .map(|&(omega, phase)| Complex64::from_polar(amp, omega * t + phase))
                .sum();
            gains[(n, l)] = g;
        }
    }
    Ok(ChannelRealization::from_taps(
        pdp.clone(),
        gains,
        n_subcarriers,
    ))
}

/// Time-averaged tap autocorrelation normalized to lag 0, averaged over the
/// taps of a realization. Entry `m` is `Re E[h(n) h*(n−m)] / E|h|²`.
pub fn empirical_autocorrelation(real: &ChannelRealization, max_lag: usize) -> Vec<f64> {
    let n = real.n_symbols();
    let n_taps = real.tap_gains.cols();
    let mut out = vec![0.0; max_lag + 1];
    for l in 0..n_taps {
        let h = real.tap_gains.column(l);
        let power = h.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        if power == 0.0 {
            continue;
        }
        for (m, slot) in out.iter_mut().enumerate().take(n.min(max_lag + 1)) {
            let acc: Complex64 = (m..n).map(|i| h[i] * h[i - m].conj()).sum();
            *slot += acc.re / (n - m) as f64 / power / n_taps as f64;
        }
    }
    out
}

pub(crate) fn complex_noise<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

fn convolve_full(tx: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); tx.len() + h.len() - 1];
    for (d, &g) in h.iter().enumerate() {
        if g.re == 0.0 && g.im == 0.0 {
            continue;
        }
        for (i, &x) in tx.iter().enumerate() {
            out[i + d] += g * x;
        }
    }
    out
}

fn check_symbol(
    tx_len: usize,
    real: &ChannelRealization,
    symbol_index: usize,
) -> Result<usize, ChannelError> {
    let n = real.n_subcarriers();
    if tx_len <= n {
        return Err(ChannelError::BadSymbolLength { len: tx_len, n });
    }
    if symbol_index >= real.n_symbols() {
        return Err(ChannelError::SymbolOutOfRange {
            index: symbol_index,
            n_symbols: real.n_symbols(),
        });
    }
    let cp = tx_len - n;
    real.pdp.check_prefix(cp)?;
    Ok(cp)
}

/// Passes one cyclic-prefixed symbol through the symbol's taps: linear
/// convolution truncated to the input length, plus circular white Gaussian
/// noise of variance `noise_var` per sample.
pub fn apply_channel(
    tx: &[Complex64],
    real: &ChannelRealization,
    symbol_index: usize,
    noise_var: f64,
    noise_seed: u64,
) -> Result<Vec<Complex64>, ChannelError> {
    check_symbol(tx.len(), real, symbol_index)?;
    let mut out = convolve_full(tx, &real.impulse_response(symbol_index));
    out.truncate(tx.len());
    if noise_var > 0.0 {
        let mut rng = rng_from(noise_seed);
        for z in out.iter_mut() {
            *z += complex_noise(&mut rng, noise_var);
        }
    }
    Ok(out)
}

/// Passes a contiguous run of cyclic-prefixed symbols through the channel.
/// Unlike [`apply_channel`], the convolution tail of each symbol spills into
/// the head of the next one, as on a real link; the prefix absorbs it.
pub fn propagate_symbols<R: Rng + ?Sized>(
    symbols: &[Vec<Complex64>],
    real: &ChannelRealization,
    noise_var: f64,
    rng: &mut R,
) -> Result<Vec<Vec<Complex64>>, ChannelError> {
    let mut carry: Vec<Complex64> = Vec::new();
    let mut out = Vec::with_capacity(symbols.len());
    for (s, tx) in symbols.iter().enumerate() {
        check_symbol(tx.len(), real, s)?;
        let mut y = convolve_full(tx, &real.impulse_response(s));
        for (z, c) in y.iter_mut().zip(&carry) {
            *z += c;
        }
        carry = y.split_off(tx.len());
        if noise_var > 0.0 {
            for z in y.iter_mut() {
                *z += complex_noise(rng, noise_var);
            }
        }
        out.push(y);
    }
    Ok(out)
}

/// `σ² = P / 10^(snr_db/10)`.
pub fn snr_to_noise_var(snr_db: f64, signal_power: f64) -> f64 {
    signal_power / 10f64.powf(snr_db / 10.0)
}

/// Scalar autoregressive model `H(n) = −Σ a_i H(n−i) + σ u(n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarAr {
    pub coefficients: Vec<f64>,
    pub innovation_var: f64,
}

impl ScalarAr {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    /// Continues an autocorrelation sequence with the model recursion
    /// `r(m) = −Σ a_i r(m−i)`. `seed` must hold at least `r(0..p)`.
    pub fn extrapolate(&self, seed: &[f64], max_lag: usize) -> Vec<f64> {
        assert!(seed.len() >= self.order(), "seed must cover lags 0..p");
        let mut r = seed.to_vec();
        while r.len() <= max_lag {
            let m = r.len();
            let next = -self
                .coefficients
                .iter()
                .enumerate()
                .map(|(i, a)| a * r[m - 1 - i])
                .sum::<f64>();
            r.push(next);
        }
        r.truncate(max_lag + 1);
        r
    }

    /// Schur-Cohn step-down: all poles strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        let mut a = self.coefficients.clone();
        while let Some(&k) = a.last() {
            if !(k.abs() < 1.0) {
                return false;
            }
            let p = a.len();
            let denom = 1.0 - k * k;
            let next: Vec<f64> = (0..p - 1)
                .map(|i| (a[i] - k * a[p - 2 - i]) / denom)
                .collect();
            a = next;
        }
        true
    }
}

/// Vector AR(1) model `h(n) = −A h(n−1) + w(n)`, `E[w w^H] = Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorAr {
    pub transition: ComplexMatrix,
    pub innovation_cov: ComplexMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ArModel {
    Scalar(ScalarAr),
    Vector(VectorAr),
}

/// Solves the order-`p` Yule-Walker system for a real autocorrelation.
pub fn fit_ar_yule_walker(
    correlation: impl Fn(usize) -> f64,
    order: usize,
) -> Result<ScalarAr, ChannelError> {
    if order == 0 {
        return Err(ChannelError::ArFit("order must be at least 1".into()));
    }
    let r: Vec<f64> = (0..=order).map(&correlation).collect();
    if !(r[0] > 0.0) {
        return Err(ChannelError::ArFit(format!(
            "correlation(0) = {} must be positive",
            r[0]
        )));
    }
    let toeplitz =
        ComplexMatrix::from_fn(order, order, |i, j| Complex64::new(r[i.abs_diff(j)], 0.0));
    let rhs: Vec<Complex64> = (1..=order).map(|m| Complex64::new(-r[m], 0.0)).collect();
    let a = hermitian_solve(&toeplitz, &rhs).map_err(|e| match e {
        LinalgError::IllConditioned { condition } => ChannelError::ArFit(format!(
            "singular Toeplitz system (condition {condition:e})"
        )),
        other => ChannelError::Linalg(other),
    })?;
    let coefficients: Vec<f64> = a.iter().map(|z| z.re).collect();
    let innovation_var = r[0]
        + coefficients
            .iter()
            .zip(&r[1..])
            .map(|(a, r)| a * r)
            .sum::<f64>();
    let model = ScalarAr {
        coefficients,
        innovation_var,
    };
    if !(innovation_var > 0.0) || !model.is_stable() {
        return Err(ChannelError::ArFit("fitted model is not stable".into()));
    }
    Ok(model)
}

/// Block Yule-Walker fit of a vector AR model from matrix correlations
/// `R(m) = E[h(n) h(n−m)^H]`. Only order 1 is implemented.
pub fn fit_vector_ar(
    correlation: impl Fn(usize) -> ComplexMatrix,
    order: usize,
) -> Result<VectorAr, ChannelError> {
    if order != 1 {
        return Err(ChannelError::UnsupportedVectorOrder(order));
    }
    let r0 = correlation(0);
    let r1 = correlation(1);
    // A R(0) = −R(1)  ⇔  R(0) A^H = −R(1)^H
    let a_h = hermitian_solve_many(&r0, &r1.adjoint())?;
    let transition = a_h.adjoint().scale(Complex64::new(-1.0, 0.0));
    let mut innovation_cov = r0.add(&transition.matmul(&r1.adjoint()));
    innovation_cov.symmetrize();
    Ok(VectorAr {
        transition,
        innovation_cov,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::{
        ofdm_demodulate, ofdm_modulate, ConstellationKind, OfdmConfig, PilotScheme,
    };

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_tap() -> (PowerDelayProfile, Vec<Complex64>) {
        let norm = (1.0f64 + 0.25).sqrt();
        let pdp = PowerDelayProfile::normalized(&[0, 1], &[1.0, 0.25]).unwrap();
        (pdp, vec![c(1.0 / norm, 0.0), c(0.5 / norm, 0.0)])
    }

    #[test]
    fn profile_validation() {
        assert!(PowerDelayProfile::new(vec![]).is_err());
        assert!(PowerDelayProfile::new(vec![
            Tap {
                delay: 1,
                power: 0.5
            },
            Tap {
                delay: 1,
                power: 0.5
            }
        ])
        .is_err());
        assert!(PowerDelayProfile::new(vec![Tap {
            delay: 0,
            power: 0.7
        }])
        .is_err());
        let exp = PowerDelayProfile::exponential(4, 2.0).unwrap();
        assert!((exp.total_power() - 1.0).abs() < 1e-12);
        assert_eq!(exp.delays(), vec![0, 1, 2, 3]);
        assert!(exp.powers().windows(2).all(|w| w[0] > w[1]));
        assert!(exp.check_prefix(4).is_ok());
        assert_eq!(
            exp.check_prefix(3),
            Err(ChannelError::DelayExceedsPrefix { delay: 3, cp: 3 })
        );
    }

    #[test]
    fn static_channel_is_constant() {
        let real =
            generate_fading(&PowerDelayProfile::flat(), &FadingSpec::new(0.0, 9), 50, 16).unwrap();
        for s in 1..50 {
            assert_eq!(real.tap_gains.row(s), real.tap_gains.row(0));
            assert_eq!(real.freq_response.row(s), real.freq_response.row(0));
        }
    }

    #[test]
    fn fixed_taps_frequency_response() {
        let (pdp, gains) = two_tap();
        let n = 16;
        let real = ChannelRealization::fixed(pdp, &gains, 1, n);
        for k in 0..n {
            let expected = (c(1.0, 0.0)
                + Complex64::from_polar(0.5, -2.0 * PI * k as f64 / n as f64))
                / 1.25f64.sqrt();
            assert!((real.freq_response[(0, k)] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn freq_response_matches_zero_padded_transform() {
        let pdp = PowerDelayProfile::exponential(4, 2.0).unwrap();
        let real = generate_fading(&pdp, &FadingSpec::new(0.02, 5), 20, 32).unwrap();
        for s in 0..20 {
            let mut padded = vec![c(0.0, 0.0); 32];
            padded[..4].copy_from_slice(real.tap_gains.row(s));
            let spec = crate::numkernel::dft(&padded, false).unwrap();
            let mut energy_taps = 0.0;
            let mut energy_freq = 0.0;
            for k in 0..32 {
                assert!((spec[k] * 32f64.sqrt() - real.freq_response[(s, k)]).norm() < 1e-10);
                energy_freq += real.freq_response[(s, k)].norm_sqr();
            }
            for g in real.tap_gains.row(s) {
                energy_taps += g.norm_sqr();
            }
            assert!((energy_freq - 32.0 * energy_taps).abs() < 1e-10);
        }
    }

    #[test]
    fn jakes_autocorrelation() {
        let spec = FadingSpec::new(0.05, 2024);
        let n = 100_000;
        let real = generate_fading(&PowerDelayProfile::flat(), &spec, n, 4).unwrap();
        let h = real.tap_gains.column(0);
        let power: f64 = h.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        let helper = empirical_autocorrelation(&real, 10);
        for m in 0..=10 {
            let acc: Complex64 =
                (m..n).map(|i| h[i] * h[i - m].conj()).sum::<Complex64>() / (n - m) as f64;
            let empirical = acc.re / power;
            assert!((helper[m] - empirical).abs() < 1e-12);
            assert!(
                (empirical - spec.reference_correlation(m)).abs() < 0.02,
                "lag {m}: {empirical}"
            );
        }
    }

    #[test]
    fn static_autocorrelation_is_one() {
        let pdp = PowerDelayProfile::exponential(3, 1.0).unwrap();
        let real = generate_fading(&pdp, &FadingSpec::new(0.0, 5), 500, 8).unwrap();
        for r in empirical_autocorrelation(&real, 20) {
            assert!((r - 1.0).abs() < 1e-9, "{r}");
        }
    }

    #[test]
    fn rayleigh_marginal() {
        let n = 100_000;
        let real =
            generate_fading(&PowerDelayProfile::flat(), &FadingSpec::new(0.05, 77), n, 4).unwrap();
        let mut e: Vec<f64> = real
            .tap_gains
            .column(0)
            .iter()
            .map(|z| z.norm_sqr())
            .collect();
        e.sort_by(f64::total_cmp);
        // |h|²/σ² ~ Exp(1) for unit power
        let ks = e
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let cdf = 1.0 - (-x).exp();
                (cdf - i as f64 / n as f64)
                    .abs()
                    .max((cdf - (i + 1) as f64 / n as f64).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    #[test]
    fn seeds_reproduce_and_decorrelate() {
        let pdp = PowerDelayProfile::exponential(4, 2.0).unwrap();
        let a = generate_fading(&pdp, &FadingSpec::new(0.01, 1), 200, 16).unwrap();
        let b = generate_fading(&pdp, &FadingSpec::new(0.01, 1), 200, 16).unwrap();
        let d = generate_fading(&pdp, &FadingSpec::new(0.01, 2), 200, 16).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.tap_gains, d.tap_gains);
        // across seeds the tap gain is zero-mean
        let mean: Complex64 = (0..256u64)
            .map(|s| {
                generate_fading(&pdp, &FadingSpec::new(0.01, s), 1, 16)
                    .unwrap()
                    .tap_gains[(0, 0)]
            })
            .sum::<Complex64>()
            / 256.0;
        assert!(mean.norm() < 0.15);
    }

    #[test]
    fn rejects_bad_spec() {
        let pdp = PowerDelayProfile::flat();
        assert!(generate_fading(&pdp, &FadingSpec::new(-0.1, 0), 4, 4).is_err());
        let spec = FadingSpec {
            n_oscillators: 4,
            ..FadingSpec::new(0.1, 0)
        };
        assert_eq!(
            generate_fading(&pdp, &spec, 4, 4),
            Err(ChannelError::TooFewOscillators(4))
        );
    }

    fn cfg(n: usize, cp: usize) -> OfdmConfig {
        OfdmConfig::new(n, cp, ConstellationKind::Qpsk, PilotScheme::none()).unwrap()
    }

    #[test]
    fn identity_channel_passes_through() {
        let real = ChannelRealization::fixed(PowerDelayProfile::flat(), &[c(1.0, 0.0)], 1, 8);
        let tx: Vec<_> = (0..10).map(|i| c(i as f64, -1.0)).collect();
        assert_eq!(apply_channel(&tx, &real, 0, 0.0, 0).unwrap(), tx);
    }

    #[test]
    fn noiseless_two_tap_gives_frequency_response() {
        let (pdp, gains) = two_tap();
        let cfg = cfg(16, 4);
        let real = ChannelRealization::fixed(pdp, &gains, 1, 16);
        let x: Vec<_> = (0..16)
            .map(|k| Complex64::from_polar(1.0, k as f64 * 0.7))
            .collect();
        let tx = ofdm_modulate(&x, &cfg).unwrap();
        let rx = apply_channel(&tx, &real, 0, 0.0, 0).unwrap();
        let y = ofdm_demodulate(&rx, &cfg).unwrap();
        for k in 0..16 {
            assert!((y[k] / x[k] - real.freq_response[(0, k)]).norm() < 1e-10);
        }
    }

    #[test]
    fn noise_variance_matches() {
        let real = ChannelRealization::fixed(PowerDelayProfile::flat(), &[c(0.0, 0.0)], 1, 64);
        let tx = vec![c(0.0, 0.0); 100_000];
        let y = apply_channel(&tx, &real, 0, 0.3, 42).unwrap();
        let var = y.iter().map(|z| z.norm_sqr()).sum::<f64>() / y.len() as f64;
        assert!((var / 0.3 - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn delay_beyond_prefix_rejected() {
        let pdp = PowerDelayProfile::normalized(&[0, 4], &[1.0, 1.0]).unwrap();
        let real = ChannelRealization::fixed(pdp, &[c(1.0, 0.0), c(1.0, 0.0)], 1, 8);
        assert_eq!(
            apply_channel(&[c(1.0, 0.0); 12], &real, 0, 0.0, 0),
            Err(ChannelError::DelayExceedsPrefix { delay: 4, cp: 4 })
        );
    }

    #[test]
    fn no_inter_symbol_leakage() {
        let pdp = PowerDelayProfile::exponential(4, 2.0).unwrap();
        let cfg = cfg(16, 4);
        let real = generate_fading(&pdp, &FadingSpec::new(0.05, 3), 2, 16).unwrap();
        let sym = |scale: f64| -> Vec<Complex64> {
            (0..16)
                .map(|k| Complex64::from_polar(scale, k as f64))
                .collect()
        };
        let current = ofdm_modulate(&sym(1.0), &cfg).unwrap();
        let mut rng = rng_from(0);
        let run = |prev: Vec<Complex64>, rng: &mut rand_chacha::ChaCha8Rng| {
            let rx = propagate_symbols(&[prev, current.clone()], &real, 0.0, rng).unwrap();
            ofdm_demodulate(&rx[1], &cfg).unwrap()
        };
        let a = run(ofdm_modulate(&sym(1.0), &cfg).unwrap(), &mut rng);
        let b = run(ofdm_modulate(&sym(-3.0), &cfg).unwrap(), &mut rng);
        for k in 0..16 {
            assert!((a[k] - b[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn snr_conversion() {
        assert_eq!(snr_to_noise_var(0.0, 1.0), 1.0);
        assert!((snr_to_noise_var(10.0, 1.0) - 0.1).abs() < 1e-15);
        assert!((snr_to_noise_var(3.0, 2.0) - 1.002_374_467_254_545).abs() < 1e-12);
    }

    #[test]
    fn ar1_closed_form() {
        let model = fit_ar_yule_walker(|m| 0.9f64.powi(m as i32), 1).unwrap();
        assert!((model.coefficients[0] + 0.9).abs() < 1e-14);
        assert!((model.innovation_var - 0.19).abs() < 1e-14);
    }

    #[test]
    fn white_process() {
        let model = fit_ar_yule_walker(|m| if m == 0 { 1.0 } else { 0.0 }, 2).unwrap();
        assert_eq!(model.coefficients, vec![0.0, 0.0]);
        assert_eq!(model.innovation_var, 1.0);
    }

    #[test]
    fn jakes_ar2_reproduces_lags() {
        let spec = FadingSpec::new(0.05, 0);
        let r = |m: usize| spec.reference_correlation(m);
        let model = fit_ar_yule_walker(r, 2).unwrap();
        let a = &model.coefficients;
        // lag 1 uses r(−1) = r(1)
        assert!((-a[0] * r(0) - a[1] * r(1) - r(1)).abs() < 1e-10);
        let ext = model.extrapolate(&[r(0), r(1)], 2);
        assert!((ext[2] - r(2)).abs() < 1e-10);
        assert!(model.is_stable());
    }

    #[test]
    fn singular_toeplitz_rejected() {
        assert!(matches!(
            fit_ar_yule_walker(|_| 1.0, 2),
            Err(ChannelError::ArFit(_))
        ));
        assert!(fit_ar_yule_walker(|_| 0.0, 1).is_err());
        assert!(fit_ar_yule_walker(|_| 1.0, 0).is_err());
    }

    #[test]
    fn stability_check() {
        assert!(ScalarAr {
            coefficients: vec![-0.5],
            innovation_var: 1.0
        }
        .is_stable());
        assert!(!ScalarAr {
            coefficients: vec![-1.5],
            innovation_var: 1.0
        }
        .is_stable());
        // poles at 0.5 and 2: z² − 2.5 z + 1
        assert!(!ScalarAr {
            coefficients: vec![-2.5, 1.0],
            innovation_var: 1.0
        }
        .is_stable());
        // poles at ±0.9j: z² + 0.81
        assert!(ScalarAr {
            coefficients: vec![0.0, 0.81],
            innovation_var: 1.0
        }
        .is_stable());
    }

    #[test]
    fn vector_ar1_separable() {
        let r_hh = ComplexMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(0.5, 0.5)],
            vec![c(0.5, -0.5), c(1.0, 0.0)],
        ])
        .unwrap();
        let rho: f64 = 0.8;
        let model = fit_vector_ar(|m| r_hh.scale(c(rho.powi(m as i32), 0.0)), 1).unwrap();
        let expected_a = ComplexMatrix::identity(2).scale(c(-rho, 0.0));
        assert!(model.transition.sub(&expected_a).frobenius_norm() < 1e-12);
        let expected_q = r_hh.scale(c(1.0 - rho * rho, 0.0));
        assert!(model.innovation_cov.sub(&expected_q).frobenius_norm() < 1e-12);
        assert_eq!(
            fit_vector_ar(|_| ComplexMatrix::identity(2), 2).unwrap_err(),
            ChannelError::UnsupportedVectorOrder(2)
        );
    }
}

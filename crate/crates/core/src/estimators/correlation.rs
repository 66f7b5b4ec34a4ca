use std::f64::consts::PI;

use num_complex::Complex64;

use super::{check_len, EstimateError};
use crate::channel::PowerDelayProfile;
use crate::numkernel::{eig_hermitian, svd_decompose, ComplexMatrix};

/// Frequency-domain channel autocovariance together with the operating SNR
/// and the constellation factor `β`.
#[derive(Clone, Debug, PartialEq)]
pub struct FreqCorrelation {
    pub r_hh: ComplexMatrix,
    /// Linear `E|x|²/σ²`; may be infinite for noiseless operation.
    pub snr: f64,
    pub beta: f64,
}

impl FreqCorrelation {
    pub fn new(r_hh: ComplexMatrix, snr: f64, beta: f64) -> Result<Self, EstimateError> {
        if !(snr > 0.0) {
            return Err(EstimateError::InvalidParameter(format!(
                "SNR {snr} must be positive"
            )));
        }
        if !(beta >= 1.0) || !beta.is_finite() {
            return Err(EstimateError::InvalidParameter(format!(
                "beta {beta} must be at least 1"
            )));
        }
        let eig = eig_hermitian(&r_hh)?;
        let scale = r_hh.frobenius_norm();
        if eig.values[0] < -1e-10 * scale {
            return Err(EstimateError::InvalidParameter(format!(
                "correlation matrix is not positive semi-definite (eigenvalue {:e})",
                eig.values[0]
            )));
        }
        Ok(Self { r_hh, snr, beta })
    }

    /// `R_HH[k][k'] = Σ_l σ_l² e^{−j2π(k−k')τ_l/N}`, the genie correlation
    /// implied by the power delay profile.
    pub fn from_pdp(
        pdp: &PowerDelayProfile,
        n: usize,
        snr: f64,
        beta: f64,
    ) -> Result<Self, EstimateError> {
        Self::new(pdp_correlation(pdp, n), snr, beta)
    }

    /// Sample covariance of LS snapshots minus the noise floor, with negative
    /// eigenvalues clipped to zero.
    pub fn empirical(
        snapshots: &[Vec<Complex64>],
        noise_var: f64,
        snr: f64,
        beta: f64,
    ) -> Result<Self, EstimateError> {
        let first = snapshots
            .first()
            .ok_or(EstimateError::InvalidParameter("no snapshots".into()))?;
        let n = first.len();
        let mut acc = ComplexMatrix::zeros(n, n);
        for snap in snapshots {
            check_len(n, snap.len())?;
            acc = acc.add(&ComplexMatrix::outer(snap, snap));
        }
        let mut cov = acc.scale(Complex64::new(1.0 / snapshots.len() as f64, 0.0));
        cov.add_diag(-noise_var);
        cov.symmetrize();
        let eig = eig_hermitian(&cov)?;
        let clipped: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
        let u = &eig.vectors;
        let scaled = ComplexMatrix::from_fn(n, n, |r, c| u[(r, c)] * clipped[c]);
        let mut r_hh = scaled.matmul(&u.adjoint());
        r_hh.symmetrize();
        Self::new(r_hh, snr, beta)
    }

    pub fn dim(&self) -> usize {
        self.r_hh.rows()
    }

    /// Correlation between the listed subcarriers only.
    pub fn restrict(&self, positions: &[usize]) -> Self {
        Self {
            r_hh: self.r_hh.submatrix(positions, positions),
            snr: self.snr,
            beta: self.beta,
        }
    }

    /// `β / SNR`, zero when noiseless.
    pub fn regularization(&self) -> f64 {
        if self.snr.is_infinite() {
            0.0
        } else {
            self.beta / self.snr
        }
    }
}

pub(crate) fn pdp_correlation(pdp: &PowerDelayProfile, n: usize) -> ComplexMatrix {
    let mut r = ComplexMatrix::from_fn(n, n, |k, kp| {
        pdp.taps()
            .iter()
            .map(|t| {
                let lag = (k as i64 - kp as i64).rem_euclid(n as i64) as usize;
                Complex64::from_polar(t.power, -2.0 * PI * ((lag * t.delay) % n) as f64 / n as f64)
            })
            .sum()
    });
    r.symmetrize();
    r
}

/// Precomputed `U Δ_p U^H` with `δ_k = λ_k/(λ_k + β/SNR)` on the `p` largest
/// singular values of `R_HH` and zero elsewhere. With `p = N` this is exactly
/// `R_HH (R_HH + β/SNR I)^{-1}`; the spectral form stays well defined in the
/// noiseless limit where the direct inverse does not exist.
#[derive(Clone, Debug)]
pub struct SpectralSmoother {
    matrix: ComplexMatrix,
    deltas: Vec<f64>,
}

impl SpectralSmoother {
    pub fn new(corr: &FreqCorrelation, rank: usize) -> Result<Self, EstimateError> {
        let n = corr.dim();
        if rank < 1 || rank > n {
            return Err(EstimateError::InvalidRank { rank, max: n });
        }
        let svd = svd_decompose(&corr.r_hh)?;
        let reg = corr.regularization();
        let lambda_max = svd.singular_values[0];
        let negligible = lambda_max * 1e-12;
        let deltas: Vec<f64> = svd
            .singular_values
            .iter()
            .enumerate()
            .map(|(k, &lambda)| {
                if k >= rank || lambda <= negligible {
                    0.0
                } else {
                    lambda / (lambda + reg)
                }
            })
            .collect();
        let u = &svd.u;
        let scaled = ComplexMatrix::from_fn(n, n, |r, c| u[(r, c)] * deltas[c]);
        let matrix = scaled.matmul(&u.adjoint());
        Ok(Self { matrix, deltas })
    }

    pub fn full(corr: &FreqCorrelation) -> Result<Self, EstimateError> {
        Self::new(corr, corr.dim())
    }

    /// Shrinkage factors, ordered by descending singular value.
    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, h_ls: &[Complex64]) -> Result<Vec<Complex64>, EstimateError> {
        check_len(self.matrix.cols(), h_ls.len())?;
        Ok(self.matrix.matvec(h_ls))
    }
}

/// `R_HH (R_HH + (β/SNR) I)^{-1} ĥ_ls`.
pub fn estimate_lmmse(
    h_ls: &[Complex64],
    corr: &FreqCorrelation,
) -> Result<Vec<Complex64>, EstimateError> {
    SpectralSmoother::full(corr)?.apply(h_ls)
}

/// Rank-`p` LMMSE: `U diag(δ_0..δ_{p−1}, 0, …) U^H ĥ_ls`.
pub fn estimate_lowrank(
    h_ls: &[Complex64],
    corr: &FreqCorrelation,
    rank: usize,
) -> Result<Vec<Complex64>, EstimateError> {
    SpectralSmoother::new(corr, rank)?.apply(h_ls)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{inner, vec_norm};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Gauss-Jordan inverse without pivoting safeguards beyond partial pivot.
    fn naive_inverse(a: &ComplexMatrix) -> ComplexMatrix {
        let n = a.rows();
        let mut m = a.clone();
        let mut inv = ComplexMatrix::identity(n);
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| m[(i, col)].norm().total_cmp(&m[(j, col)].norm()))
                .unwrap();
            for k in 0..n {
                let (t1, t2) = (m[(col, k)], inv[(col, k)]);
                m[(col, k)] = m[(piv, k)];
                inv[(col, k)] = inv[(piv, k)];
                m[(piv, k)] = t1;
                inv[(piv, k)] = t2;
            }
            let p = m[(col, col)];
            for k in 0..n {
                m[(col, k)] /= p;
                inv[(col, k)] /= p;
            }
            for r in 0..n {
                if r != col {
                    let f = m[(r, col)];
                    for k in 0..n {
                        let (mv, iv) = (m[(col, k)], inv[(col, k)]);
                        m[(r, k)] -= f * mv;
                        inv[(r, k)] -= f * iv;
                    }
                }
            }
        }
        inv
    }

    fn sample_vec(n: usize, seed: f64) -> Vec<Complex64> {
        (0..n)
            .map(|k| c((seed + k as f64).sin(), (seed * 1.3 + 2.0 * k as f64).cos()))
            .collect()
    }

    #[test]
    fn identity_correlation_halves() {
        let corr = FreqCorrelation::new(ComplexMatrix::identity(4), 1.0, 1.0).unwrap();
        let h = sample_vec(4, 0.2);
        let out = estimate_lmmse(&h, &corr).unwrap();
        for (o, x) in out.iter().zip(&h) {
            assert!((o - x * 0.5).norm() < 1e-14);
        }
    }

    #[test]
    fn high_snr_limit_returns_ls() {
        let r = pdp_correlation(&PowerDelayProfile::exponential(8, 3.0).unwrap(), 8);
        let corr = FreqCorrelation::new(r, 1e12, 17.0 / 9.0).unwrap();
        let h = sample_vec(8, 1.0);
        let out = estimate_lmmse(&h, &corr).unwrap();
        for (o, x) in out.iter().zip(&h) {
            assert!((o - x).norm() < 1e-8);
        }
    }

    #[test]
    fn matches_direct_formula() {
        let pdp = PowerDelayProfile::exponential(3, 1.5).unwrap();
        let corr = FreqCorrelation::from_pdp(&pdp, 8, 4.0, 17.0 / 9.0).unwrap();
        let mut shifted = corr.r_hh.clone();
        shifted.add_diag(corr.beta / corr.snr);
        let direct = corr.r_hh.matmul(&naive_inverse(&shifted));
        let h = sample_vec(8, 0.4);
        let want = direct.matvec(&h);
        let got = estimate_lmmse(&h, &corr).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn full_rank_lowrank_equals_lmmse() {
        let pdp = PowerDelayProfile::exponential(4, 2.0).unwrap();
        let corr = FreqCorrelation::from_pdp(&pdp, 16, 10.0, 1.0).unwrap();
        let h = sample_vec(16, 2.0);
        let full = estimate_lmmse(&h, &corr).unwrap();
        let p_n = estimate_lowrank(&h, &corr, 16).unwrap();
        let p_l = estimate_lowrank(&h, &corr, 4).unwrap();
        for ((a, b), d) in full.iter().zip(&p_n).zip(&p_l) {
            assert!((a - b).norm() < 1e-10);
            // R_HH has rank L = 4: trailing directions contribute nothing
            assert!((a - d).norm() < 1e-10);
        }
    }

    #[test]
    fn rank_one_closed_form() {
        let mut u = sample_vec(6, 0.7);
        let norm = vec_norm(&u);
        u.iter_mut().for_each(|z| *z /= norm);
        let corr = FreqCorrelation::new(ComplexMatrix::outer(&u, &u), 2.0, 1.0).unwrap();
        let h = sample_vec(6, 3.0);
        let out = estimate_lowrank(&h, &corr, 1).unwrap();
        let delta0 = 1.0 / (1.0 + 0.5);
        let proj = inner(&u, &h);
        for (o, uk) in out.iter().zip(&u) {
            assert!((o - uk * proj * delta0).norm() < 1e-12);
        }
        assert_eq!(
            estimate_lowrank(&h, &corr, 0).unwrap_err(),
            EstimateError::InvalidRank { rank: 0, max: 6 }
        );
    }

    #[test]
    fn noiseless_projection_keeps_signal() {
        let pdp = PowerDelayProfile::exponential(4, 2.0).unwrap();
        let corr = FreqCorrelation::from_pdp(&pdp, 16, f64::INFINITY, 17.0 / 9.0).unwrap();
        let h =
            pdp.frequency_response(&[c(0.3, 0.1), c(-0.2, 0.4), c(0.1, 0.0), c(0.0, -0.05)], 16);
        let out = estimate_lmmse(&h, &corr).unwrap();
        for (a, b) in out.iter().zip(&h) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_correlation() {
        assert!(FreqCorrelation::new(ComplexMatrix::from_diag(&[1.0, -1.0]), 1.0, 1.0).is_err());
        assert!(FreqCorrelation::new(ComplexMatrix::identity(2), 0.0, 1.0).is_err());
        assert!(FreqCorrelation::new(ComplexMatrix::identity(2), 1.0, 0.5).is_err());
    }

    #[test]
    fn empirical_recovers_genie_correlation() {
        use crate::seed::rng_from;
        use rand_distr::{Distribution, StandardNormal};
        let pdp = PowerDelayProfile::exponential(2, 1.0).unwrap();
        let genie = pdp_correlation(&pdp, 8);
        let mut rng = rng_from(5);
        let noise_var = 0.1;
        let snaps: Vec<Vec<Complex64>> = (0..20_000)
            .map(|_| {
                let g: Vec<Complex64> = pdp
                    .powers()
                    .iter()
                    .map(|p| {
                        let s = (p / 2.0).sqrt();
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        c(re * s, im * s)
                    })
                    .collect();
                let h = pdp.frequency_response(&g, 8);
                h.iter()
                    .map(|z| z + crate::channel::complex_noise(&mut rng, noise_var))
                    .collect()
            })
            .collect();
        let emp = FreqCorrelation::empirical(&snaps, noise_var, 10.0, 1.0).unwrap();
        let err = emp.r_hh.sub(&genie).frobenius_norm() / genie.frobenius_norm();
        assert!(err < 0.05, "relative error {err}");
    }

    proptest! {
        #[test]
        fn shrinkage_and_monotone_truncation(
            seed in 0.0f64..100.0,
            snr_db in -5.0f64..30.0,
            n_taps in 1usize..6,
        ) {
            let pdp = PowerDelayProfile::exponential(n_taps, 2.0).unwrap();
            let corr = FreqCorrelation::from_pdp(&pdp, 16, 10f64.powf(snr_db / 10.0), 17.0 / 9.0).unwrap();
            let h = sample_vec(16, seed);
            let smoother = SpectralSmoother::full(&corr).unwrap();
            let out = smoother.apply(&h).unwrap();
            let max_delta = smoother.deltas().iter().cloned().fold(0.0, f64::max);
            prop_assert!(max_delta < 1.0);
            prop_assert!(vec_norm(&out) <= vec_norm(&h) * max_delta + 1e-12);

            let mut prev = f64::INFINITY;
            for p in 1..=16 {
                let est = estimate_lowrank(&h, &corr, p).unwrap();
                let resid: Vec<_> = est.iter().zip(&out).map(|(a, b)| a - b).collect();
                let r = vec_norm(&resid);
                prop_assert!(r <= prev + 1e-12);
                prev = r;
            }
        }
    }
}

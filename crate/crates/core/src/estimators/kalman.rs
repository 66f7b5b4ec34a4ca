use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_len, EstimateError};
use crate::channel::{fit_ar_yule_walker, fit_vector_ar, ArModel, ScalarAr, VectorAr};
use crate::numkernel::{bessel_j0, hermitian_solve_many, ComplexMatrix};

/// Relative diagonal loading added to the lag-0 correlation before the
/// Yule-Walker fit. Keeps the system regular as `f_d T → 0`.
pub const DIAGONAL_LOADING: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KalmanMode {
    /// One `pN`-dimensional filter over all subcarriers.
    Vector,
    /// One `p`-dimensional filter per subcarrier.
    Scalar,
}

/// Filter state and the state-space matrices it runs on.
#[derive(Clone, Debug, PartialEq)]
pub struct KalmanState {
    pub x: Vec<Complex64>,
    pub sigma: ComplexMatrix,
    pub model: ArModel,
    pub mode: KalmanMode,
    transition: ComplexMatrix,
    process_cov: ComplexMatrix,
    n_obs: usize,
    innovation: Vec<Complex64>,
    innovation_cov: ComplexMatrix,
}

impl KalmanState {
    /// Per-subcarrier filter. `stationary` holds the correlation lags
    /// `r(0..p)` used for the initial covariance.
    pub fn scalar(model: ScalarAr, stationary: &[f64]) -> Result<Self, EstimateError> {
        let p = model.order();
        if p == 0 || stationary.len() < p {
            return Err(EstimateError::InvalidParameter(format!(
                "need {p} stationary lags for an order-{p} model"
            )));
        }
        let transition = ComplexMatrix::from_fn(p, p, |i, j| {
            if i == 0 {
                Complex64::new(-model.coefficients[j], 0.0)
            } else if i == j + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let mut process_cov = ComplexMatrix::zeros(p, p);
        process_cov[(0, 0)] = Complex64::new(model.innovation_var, 0.0);
        let sigma =
            ComplexMatrix::from_fn(p, p, |i, j| Complex64::new(stationary[i.abs_diff(j)], 0.0));
        Ok(Self::assemble(
            transition,
            process_cov,
            sigma,
            1,
            ArModel::Scalar(model),
            KalmanMode::Scalar,
        ))
    }

    /// Per-subcarrier filter for Jakes fading of the given power, with an
    /// AR(`order`) model fitted to `power · J0(2π f_d T m)`.
    pub fn scalar_from_doppler(
        doppler: f64,
        power: f64,
        order: usize,
    ) -> Result<Self, EstimateError> {
        let corr = |m: usize| {
            let r = power * bessel_j0(2.0 * PI * doppler * m as f64);
            if m == 0 {
                r * (1.0 + DIAGONAL_LOADING)
            } else {
                r
            }
        };
        let model = fit_ar_yule_walker(corr, order)?;
        let lags: Vec<f64> = (0..order).map(corr).collect();
        Self::scalar(model, &lags)
    }

    /// Vector AR(1) filter with stationary covariance `stationary`.
    pub fn vector(model: VectorAr, stationary: ComplexMatrix) -> Result<Self, EstimateError> {
        let n = model.transition.rows();
        let square = |m: &ComplexMatrix| m.rows() == n && m.cols() == n;
        if n == 0
            || !square(&model.transition)
            || !square(&model.innovation_cov)
            || !square(&stationary)
        {
            return Err(EstimateError::InvalidParameter(
                "vector model dimensions disagree".into(),
            ));
        }
        let transition = model.transition.scale(Complex64::new(-1.0, 0.0));
        let process_cov = model.innovation_cov.clone();
        Ok(Self::assemble(
            transition,
            process_cov,
            stationary,
            n,
            ArModel::Vector(model),
            KalmanMode::Vector,
        ))
    }

    /// Vector filter for a channel with frequency correlation `r_hh` whose
    /// taps fade independently with Jakes statistics, so that
    /// `R(m) = J0(2π f_d T m) R_HH`.
    pub fn vector_from_correlation(
        r_hh: &ComplexMatrix,
        doppler: f64,
    ) -> Result<Self, EstimateError> {
        let loading = DIAGONAL_LOADING * r_hh.trace().re;
        let mut r0 = r_hh.clone();
        r0.add_diag(loading);
        let rho = bessel_j0(2.0 * PI * doppler);
        let r1 = r_hh.scale(Complex64::new(rho, 0.0));
        let model = fit_vector_ar(|m| if m == 0 { r0.clone() } else { r1.clone() }, 1)?;
        Self::vector(model, r0)
    }

    fn assemble(
        transition: ComplexMatrix,
        process_cov: ComplexMatrix,
        sigma: ComplexMatrix,
        n_obs: usize,
        model: ArModel,
        mode: KalmanMode,
    ) -> Self {
        let dim = transition.rows();
        Self {
            x: vec![Complex64::new(0.0, 0.0); dim],
            sigma,
            model,
            mode,
            transition,
            process_cov,
            n_obs,
            innovation: Vec::new(),
            innovation_cov: ComplexMatrix::zeros(n_obs, n_obs),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.x.len()
    }

    /// Observations per step: `N` in vector mode, 1 in scalar mode.
    pub fn observation_dim(&self) -> usize {
        self.n_obs
    }

    /// Current channel estimate, the first block of the state.
    pub fn estimate(&self) -> &[Complex64] {
        &self.x[..self.n_obs]
    }

    /// One-step prediction `[I, 0, …] C x` of the next channel value.
    pub fn predicted(&self) -> Vec<Complex64> {
        let n = self.n_obs;
        (0..n)
            .map(|i| {
                (0..self.x.len())
                    .map(|j| self.transition[(i, j)] * self.x[j])
                    .sum()
            })
            .collect()
    }

    /// Innovation `y − D C x` of the last step.
    pub fn last_innovation(&self) -> &[Complex64] {
        &self.innovation
    }

    /// Innovation covariance `Γ` of the last step.
    pub fn last_innovation_cov(&self) -> &ComplexMatrix {
        &self.innovation_cov
    }

    /// One predict and update cycle. Both modes share this routine; the
    /// scalar filter is its one-observation case.
    fn step(
        &mut self,
        y: &[Complex64],
        s: &[Complex64],
        noise_var: f64,
    ) -> Result<(), EstimateError> {
        let n = self.n_obs;
        check_len(n, y.len())?;
        check_len(n, s.len())?;
        if !(noise_var >= 0.0) {
            return Err(EstimateError::InvalidParameter(format!(
                "noise variance {noise_var}"
            )));
        }
        let dim = self.x.len();
        let c = &self.transition;
        let x_pred = c.matvec(&self.x);
        let mut m = c
            .matmul(&self.sigma)
            .matmul(&c.adjoint())
            .add(&self.process_cov);
        m.symmetrize();

        // D M, with D = [S, 0, …]
        let dm = ComplexMatrix::from_fn(n, dim, |i, j| s[i] * m[(i, j)]);
        let mut gamma = ComplexMatrix::from_fn(n, n, |i, k| dm[(i, k)] * s[k].conj());
        gamma.add_diag(noise_var);
        gamma.symmetrize();
        let innovation: Vec<Complex64> = (0..n).map(|i| y[i] - s[i] * x_pred[i]).collect();

        let gain = if n == 1 {
            let g = gamma[(0, 0)].re;
            if !(g > 0.0) || !g.is_finite() {
                return Err(EstimateError::KalmanInnovation(g));
            }
            ComplexMatrix::from_fn(dim, 1, |j, _| dm[(0, j)].conj() / g)
        } else {
            // K = M D^H Γ^{-1} = (Γ^{-1} D M)^H
            hermitian_solve_many(&gamma, &dm)?.adjoint()
        };

        let correction = gain.matvec(&innovation);
        self.x = x_pred.iter().zip(&correction).map(|(a, b)| a + b).collect();
        let mut sigma = m.sub(&gain.matmul(&dm));
        sigma.symmetrize();
        self.sigma = sigma;
        self.innovation = innovation;
        self.innovation_cov = gamma;
        Ok(())
    }
}

/// Vector-mode step on one OFDM symbol; returns `ĥ[n]` over all subcarriers.
pub fn kalman_step_vector(
    state: &mut KalmanState,
    y: &[Complex64],
    s: &[Complex64],
    noise_var: f64,
) -> Result<Vec<Complex64>, EstimateError> {
    if state.mode != KalmanMode::Vector {
        return Err(EstimateError::InvalidParameter(
            "vector step on a scalar-mode state".into(),
        ));
    }
    state.step(y, s, noise_var)?;
    Ok(state.estimate().to_vec())
}

/// Scalar-mode step for one subcarrier; returns `Ĥ_k[n]`.
pub fn kalman_step_scalar(
    state: &mut KalmanState,
    y: Complex64,
    s: Complex64,
    noise_var: f64,
) -> Result<Complex64, EstimateError> {
    if state.mode != KalmanMode::Scalar {
        return Err(EstimateError::InvalidParameter(
            "scalar step on a vector-mode state".into(),
        ));
    }
    state.step(&[y], &[s], noise_var)?;
    Ok(state.x[0])
}

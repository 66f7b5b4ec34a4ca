use std::f64::consts::PI;

use num_complex::Complex64;

use super::{check_len, EstimateError};
use crate::channel::PowerDelayProfile;
use crate::numkernel::{hermitian_solve, ComplexMatrix};

/// MMSE estimator with known power delay profile, evaluated on a fixed set
/// of subcarriers.
///
/// The textbook form `F R_hY R_YY^{-1} Y` inverts an `N×N` matrix that
/// becomes singular as `σ² → 0`. The same estimate is computed in the tap
/// domain through the matrix inversion lemma,
/// `ĥ = R^{1/2} (R^{1/2} F^H X^H X F R^{1/2} + σ² I)^{-1} R^{1/2} F^H X^H Y`,
/// which needs only an `L×L` solve and stays regular in the noiseless limit.
#[derive(Clone, Debug)]
pub struct MmseEstimator {
    positions: Vec<usize>,
    /// `F_P R^{1/2}`, rows at `positions`, one column per tap.
    basis: ComplexMatrix,
}

impl MmseEstimator {
    pub fn new(
        pdp: &PowerDelayProfile,
        n: usize,
        positions: &[usize],
    ) -> Result<Self, EstimateError> {
        if let Some(&k) = positions.iter().find(|&&k| k >= n) {
            return Err(EstimateError::InvalidParameter(format!(
                "subcarrier {k} outside 0..{n}"
            )));
        }
        let taps = pdp.taps();
        let basis = ComplexMatrix::from_fn(positions.len(), taps.len(), |i, l| {
            let phase = -2.0 * PI * ((positions[i] * taps[l].delay) % n) as f64 / n as f64;
            Complex64::from_polar(taps[l].power.sqrt(), phase)
        });
        Ok(Self {
            positions: positions.to_vec(),
            basis,
        })
    }

    pub fn full(pdp: &PowerDelayProfile, n: usize) -> Result<Self, EstimateError> {
        let all: Vec<usize> = (0..n).collect();
        Self::new(pdp, n, &all)
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Estimate at the configured positions from the observations there.
    pub fn estimate(
        &self,
        y: &[Complex64],
        x: &[Complex64],
        noise_var: f64,
    ) -> Result<Vec<Complex64>, EstimateError> {
        let np = self.positions.len();
        check_len(np, y.len())?;
        check_len(np, x.len())?;
        if !(noise_var >= 0.0) {
            return Err(EstimateError::InvalidParameter(format!(
                "noise variance {noise_var}"
            )));
        }
        if let Some(k) = x.iter().position(|v| v.norm_sqr() == 0.0) {
            return Err(EstimateError::ZeroPilot(self.positions[k]));
        }
        let nt = self.basis.cols();
        // Φ = X B, with B = F_P R^{1/2}
        let phi = ComplexMatrix::from_fn(np, nt, |i, l| x[i] * self.basis[(i, l)]);
        let phi_h = phi.adjoint();
        let mut gram = phi_h.matmul(&phi);
        gram.add_diag(noise_var);
        gram.symmetrize();
        let rhs = phi_h.matvec(y);
        let g = hermitian_solve(&gram, &rhs)?;
        Ok(self.basis.matvec(&g))
    }
}

/// MMSE estimate over all `N` subcarriers of a fully known symbol.
pub fn estimate_mmse(
    y: &[Complex64],
    x: &[Complex64],
    pdp: &PowerDelayProfile,
    noise_var: f64,
) -> Result<Vec<Complex64>, EstimateError> {
    check_len(x.len(), y.len())?;
    MmseEstimator::full(pdp, y.len())?.estimate(y, x, noise_var)
}

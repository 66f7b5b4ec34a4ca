use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_len, EstimateError};
use crate::numkernel::dft;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Piecewise linear, wrapping from the last pilot back to subcarrier 0.
    Linear,
    /// Zero-padding in the delay domain; exact for channels no longer than
    /// the pilot count.
    #[default]
    Transform,
}

/// Spreads comb-pilot estimates over all `n` subcarriers.
pub fn interpolate_comb(
    pilot_estimates: &[Complex64],
    positions: &[usize],
    n: usize,
    method: Interpolation,
) -> Result<Vec<Complex64>, EstimateError> {
    check_len(positions.len(), pilot_estimates.len())?;
    let np = positions.len();
    if np == 0 || !n.is_multiple_of(np) {
        return Err(EstimateError::NonUniformSpacing);
    }
    let spacing = n / np;
    if positions.iter().enumerate().any(|(i, &p)| p != i * spacing) {
        return Err(EstimateError::NonUniformSpacing);
    }
    match method {
        Interpolation::Linear => Ok((0..n)
            .map(|k| {
                let i = k / spacing;
                let t = (k % spacing) as f64 / spacing as f64;
                let a = pilot_estimates[i];
                let b = pilot_estimates[(i + 1) % np];
                a * (1.0 - t) + b * t
            })
            .collect()),
        Interpolation::Transform => {
            let mut taps = dft(pilot_estimates, true)?;
            taps.resize(n, Complex64::new(0.0, 0.0));
            let mut out = dft(&taps, false)?;
            let gain = (n as f64 / np as f64).sqrt();
            out.iter_mut().for_each(|z| *z *= gain);
            Ok(out)
        }
    }
}

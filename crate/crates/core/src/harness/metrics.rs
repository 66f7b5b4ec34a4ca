use super::HarnessError;
use crate::estimators::ChannelEstimate;
use crate::numkernel::ComplexMatrix;

/// Fraction of differing bits.
pub fn compute_ber(tx_bits: &[u8], rx_bits: &[u8]) -> Result<f64, HarnessError> {
    if tx_bits.len() != rx_bits.len() {
        return Err(HarnessError::LengthMismatch(tx_bits.len(), rx_bits.len()));
    }
    if tx_bits.is_empty() {
        return Err(HarnessError::Metric("no bits to compare".into()));
    }
    let errors = tx_bits.iter().zip(rx_bits).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / tx_bits.len() as f64)
}

/// `Σ|ĥ − H|² / Σ|H|²` over the symbols flagged valid.
pub fn compute_mse(h_hat: &ChannelEstimate, h_true: &ComplexMatrix) -> Result<f64, HarnessError> {
    let est = &h_hat.h_hat;
    if est.rows() != h_true.rows() || est.cols() != h_true.cols() {
        return Err(HarnessError::LengthMismatch(
            est.rows() * est.cols(),
            h_true.rows() * h_true.cols(),
        ));
    }
    let (mut err, mut power) = (0.0, 0.0);
    for s in 0..est.rows() {
        if !h_hat.per_symbol_valid.get(s).copied().unwrap_or(true) {
            continue;
        }
        for (a, b) in est.row(s).iter().zip(h_true.row(s)) {
            err += (a - b).norm_sqr();
            power += b.norm_sqr();
        }
    }
    if power == 0.0 {
        return Err(HarnessError::Metric(
            "true channel is identically zero".into(),
        ));
    }
    Ok(err / power)
}

pub fn compute_rmse(mse: f64) -> Result<f64, HarnessError> {
    if !(mse >= 0.0) {
        return Err(HarnessError::Metric(format!("mse {mse} is negative")));
    }
    Ok(mse.sqrt())
}

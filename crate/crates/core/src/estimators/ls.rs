use num_complex::Complex64;

use super::{check_len, EstimateError};

/// Elementwise `Y_k / X_k`.
pub fn estimate_ls(y: &[Complex64], x: &[Complex64]) -> Result<Vec<Complex64>, EstimateError> {
    check_len(x.len(), y.len())?;
    y.iter()
        .zip(x)
        .enumerate()
        .map(|(k, (&yk, &xk))| {
            if xk.norm_sqr() == 0.0 {
                Err(EstimateError::ZeroPilot(k))
            } else {
                Ok(yk / xk)
            }
        })
        .collect()
}

/// One-tap complex LMS filter for a single subcarrier.
#[derive(Clone, Debug, PartialEq)]
pub struct LmsTracker {
    estimate: Option<Complex64>,
    step: f64,
}

impl LmsTracker {
    /// Starts empty; the first observation initializes by least squares.
    pub fn new(step: f64) -> Self {
        Self {
            estimate: None,
            step,
        }
    }

    pub fn with_initial(initial: Complex64, step: f64) -> Self {
        Self {
            estimate: Some(initial),
            step,
        }
    }

    pub fn estimate(&self) -> Option<Complex64> {
        self.estimate
    }

    /// `ĥ ← ĥ + μ x* (y − ĥ x)`.
    pub fn update(&mut self, y: Complex64, x: Complex64) -> Result<Complex64, EstimateError> {
        let next = match self.estimate {
            None => {
                if x.norm_sqr() == 0.0 {
                    return Err(EstimateError::ZeroPilot(0));
                }
                y / x
            }
            Some(h) => h + x.conj() * (y - h * x) * self.step,
        };
        self.estimate = Some(next);
        Ok(next)
    }
}

/// Runs an LMS tracker over a sequence of `(y, x)` pilot observations and
/// returns the estimate after each one.
pub fn track_lms(
    observations: &[(Complex64, Complex64)],
    step: f64,
) -> Result<Vec<Complex64>, EstimateError> {
    if !(step > 0.0) {
        return Err(EstimateError::InvalidParameter(format!(
            "LMS step {step} must be positive"
        )));
    }
    let mut tracker = LmsTracker::new(step);
    observations
        .iter()
        .map(|&(y, x)| tracker.update(y, x))
        .collect()
}

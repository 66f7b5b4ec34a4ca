use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use super::{ComplexMatrix, LinalgError};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unitary DFT. Forward uses `e^{-j2πkn/N}`, inverse `e^{+j2πkn/N}`, both
/// scaled by `1/√N`.
pub fn dft(x: &[Complex64], inverse: bool) -> Result<Vec<Complex64>, LinalgError> {
    let mut out = x.to_vec();
    dft_in_place(&mut out, inverse)?;
    Ok(out)
}

pub fn dft_in_place(buf: &mut [Complex64], inverse: bool) -> Result<(), LinalgError> {
    let n = buf.len();
    if n == 0 {
        return Err(LinalgError::Empty);
    }
    let direction = if inverse {
        FftDirection::Inverse
    } else {
        FftDirection::Forward
    };
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction));
    fft.process(buf);
    let scale = 1.0 / (n as f64).sqrt();
    for z in buf.iter_mut() {
        *z *= scale;
    }
    Ok(())
}

/// The `N×N` unitary forward transform matrix, `F[k][n] = e^{-j2πkn/N}/√N`.
pub fn dft_matrix(n: usize) -> ComplexMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    ComplexMatrix::from_fn(n, n, |k, t| {
        let phase = -2.0 * std::f64::consts::PI * ((k * t) % n) as f64 / n as f64;
        Complex64::from_polar(scale, phase)
    })
}

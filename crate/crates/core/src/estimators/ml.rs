use std::f64::consts::PI;

use num_complex::Complex64;

use super::{check_len, EstimateError};
use crate::numkernel::{hermitian_solve_many, ComplexMatrix};

/// Orthogonal projection onto the span of the first `N_h` transform
/// columns, restricted to the observed subcarriers.
#[derive(Clone, Debug)]
pub struct MlProjector {
    n_taps: usize,
    projection: ComplexMatrix,
}

impl MlProjector {
    /// Projection over all `n` subcarriers. `max_taps` is the cyclic prefix
    /// length, the largest admissible channel length.
    pub fn new(n: usize, n_taps: usize, max_taps: usize) -> Result<Self, EstimateError> {
        let all: Vec<usize> = (0..n).collect();
        Self::on_positions(&all, n, n_taps, max_taps)
    }

    pub fn on_positions(
        positions: &[usize],
        n: usize,
        n_taps: usize,
        max_taps: usize,
    ) -> Result<Self, EstimateError> {
        let max = max_taps.min(positions.len());
        if n_taps < 1 || n_taps > max {
            return Err(EstimateError::TapsOutOfRange { taps: n_taps, max });
        }
        let scale = 1.0 / (n as f64).sqrt();
        let f_h = ComplexMatrix::from_fn(positions.len(), n_taps, |i, l| {
            Complex64::from_polar(
                scale,
                -2.0 * PI * ((positions[i] * l) % n) as f64 / n as f64,
            )
        });
        let f_h_adj = f_h.adjoint();
        let mut gram = f_h_adj.matmul(&f_h);
        gram.symmetrize();
        let coef = hermitian_solve_many(&gram, &f_h_adj)?;
        let mut projection = f_h.matmul(&coef);
        projection.symmetrize();
        Ok(Self { n_taps, projection })
    }

    pub fn n_taps(&self) -> usize {
        self.n_taps
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.projection
    }

    pub fn apply(&self, y: &[Complex64]) -> Result<Vec<Complex64>, EstimateError> {
        check_len(self.projection.cols(), y.len())?;
        Ok(self.projection.matvec(y))
    }
}

/// `P_{F_h} y` over all subcarriers.
pub fn estimate_ml(
    y: &[Complex64],
    n_taps: usize,
    max_taps: usize,
) -> Result<Vec<Complex64>, EstimateError> {
    MlProjector::new(y.len(), n_taps, max_taps)?.apply(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::PowerDelayProfile;
    use crate::numkernel::vec_norm;
    use crate::seed::rng_from;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exact_for_short_channels() {
        let pdp = PowerDelayProfile::exponential(4, 2.0).unwrap();
        let h = pdp.frequency_response(&[c(0.3, 0.2), c(-0.5, 0.1), c(0.0, 0.4), c(0.1, 0.1)], 64);
        let est = estimate_ml(&h, 4, 16).unwrap();
        for (a, b) in est.iter().zip(&h) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn projection_is_idempotent_and_hermitian() {
        for positions in [(0..32).collect::<Vec<_>>(), (0..32).step_by(4).collect()] {
            let p = MlProjector::on_positions(&positions, 32, 6, 8).unwrap();
            let m = p.matrix();
            assert!(m.matmul(m).sub(m).frobenius_norm() <= 1e-10);
            assert!(m.sub(&m.adjoint()).frobenius_norm() <= 1e-10);
            assert!((m.trace().re - 6.0).abs() < 1e-10);
        }
    }

    #[test]
    fn white_noise_energy_fraction() {
        let (n, n_h) = (64, 16);
        let p = MlProjector::new(n, n_h, 16).unwrap();
        let mut rng = rng_from(99);
        let (mut num, mut den) = (0.0, 0.0);
        for _ in 0..10_000 {
            let y: Vec<Complex64> = (0..n)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    c(re, im)
                })
                .collect();
            num += vec_norm(&p.apply(&y).unwrap()).powi(2);
            den += vec_norm(&y).powi(2);
        }
        let ratio = num / den;
        let want = n_h as f64 / n as f64;
        assert!((ratio / want - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn tap_range_enforced() {
        assert_eq!(
            estimate_ml(&[c(1.0, 0.0); 8], 0, 2).unwrap_err(),
            EstimateError::TapsOutOfRange { taps: 0, max: 2 }
        );
        assert!(estimate_ml(&[c(1.0, 0.0); 8], 3, 2).is_err());
        assert!(MlProjector::on_positions(&[0, 4], 8, 3, 4).is_err());
    }

    proptest! {
        #[test]
        fn projection_invariance(re in proptest::collection::vec(-1.0f64..1.0, 16), im in proptest::collection::vec(-1.0f64..1.0, 16), n_h in 1usize..=4) {
            let y: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| c(a, b)).collect();
            let once = estimate_ml(&y, n_h, 4).unwrap();
            let twice = estimate_ml(&once, n_h, 4).unwrap();
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).norm() < 1e-10);
            }
        }
    }
}

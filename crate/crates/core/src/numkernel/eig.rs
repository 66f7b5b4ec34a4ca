use num_complex::Complex64;

use super::{check_hermitian, ComplexMatrix, LinalgError};

const MAX_SWEEPS: usize = 100;
const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues ascending; `vectors` column `i` belongs to `values[i]`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Cyclic complex Jacobi eigendecomposition of a Hermitian matrix.
pub fn eig_hermitian(a: &ComplexMatrix) -> Result<HermitianEigen, LinalgError> {
    check_hermitian(a, HERMITIAN_TOL)?;
    let n = a.rows();
    let mut work = a.clone();
    work.symmetrize();
    let mut vecs = ComplexMatrix::identity(n);

    let scale = work.frobenius_norm();
    if scale == 0.0 {
        return Ok(HermitianEigen {
            values: vec![0.0; n],
            vectors: vecs,
        });
    }
    let target = f64::EPSILON * scale;

    let mut converged = n == 1;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| work[(r, c)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut work, &mut vecs, p, q);
            }
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| work[(i, i)].re.total_cmp(&work[(j, j)].re));
    let values = order.iter().map(|&i| work[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| vecs[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Zeroes `(p, q)` with the unitary `V = D R`, where `D = diag(1, e^{-jφ})`
/// makes the 2×2 block real and `R` is the classic real Jacobi rotation.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let b = a[(p, q)];
    let b_abs = b.norm();
    if b_abs == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    if b_abs < 1e-300 || b_abs <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = Complex64::new(0.0, 0.0);
        a[(q, p)] = Complex64::new(0.0, 0.0);
        return;
    }
    let phase = b / b_abs;
    let theta = (aqq - app) / (2.0 * b_abs);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let cos = 1.0 / (t * t + 1.0).sqrt();
    let sin = t * cos;

    let e = phase.conj();
    let v00 = Complex64::new(cos, 0.0);
    let v01 = Complex64::new(sin, 0.0);
    let v10 = -e * sin;
    let v11 = e * cos;

    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * v00 + akq * v10;
        a[(k, q)] = akp * v01 + akq * v11;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = v00.conj() * apk + v10.conj() * aqk;
        a[(q, k)] = v01.conj() * apk + v11.conj() * aqk;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * v00 + vkq * v10;
        v[(k, q)] = vkp * v01 + vkq * v11;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::vec_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn check_residuals(a: &ComplexMatrix, eig: &HermitianEigen) {
        let norm = a.frobenius_norm().max(1e-300);
        for (i, &lambda) in eig.values.iter().enumerate() {
            let v = eig.vectors.column(i);
            assert!((vec_norm(&v) - 1.0).abs() < 1e-12);
            let av = a.matvec(&v);
            let resid: Vec<_> = av.iter().zip(&v).map(|(x, y)| x - y * lambda).collect();
            assert!(
                vec_norm(&resid) <= 1e-9 * norm,
                "residual {}",
                vec_norm(&resid)
            );
        }
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = eig_hermitian(&ComplexMatrix::identity(3)).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_sorted() {
        let eig = eig_hermitian(&ComplexMatrix::from_diag(&[3.0, 2.0])).unwrap();
        assert_eq!(eig.values, vec![2.0, 3.0]);
    }

    #[test]
    fn swap_matrix() {
        let a = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let eig = eig_hermitian(&a).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        check_residuals(&a, &eig);
    }

    #[test]
    fn non_hermitian_rejected() {
        let a = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(0.0, 1.0)],
            vec![c(0.0, 1.0), c(0.0, 0.0)],
        ])
        .unwrap();
        assert!(matches!(
            eig_hermitian(&a),
            Err(LinalgError::NotHermitian { .. })
        ));
    }

    #[test]
    fn random_hermitian_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &n in &[1usize, 2, 5, 12] {
            for _ in 0..200 {
                let b = ComplexMatrix::from_fn(n, n, |_, _| {
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                });
                let a = b.add(&b.adjoint());
                let eig = eig_hermitian(&a).unwrap();
                check_residuals(&a, &eig);
            }
        }
    }

    #[test]
    fn rank_deficient_covariance() {
        // rank-2 matrix of size 16: 14 zero eigenvalues
        let u: Vec<_> = (0..16)
            .map(|i| c((i as f64).cos(), (i as f64 * 0.7).sin()))
            .collect();
        let w: Vec<_> = (0..16).map(|i| c(1.0 / (1.0 + i as f64), 0.3)).collect();
        let a = ComplexMatrix::outer(&u, &u).add(&ComplexMatrix::outer(&w, &w).scale(c(2.0, 0.0)));
        let eig = eig_hermitian(&a).unwrap();
        check_residuals(&a, &eig);
        let norm = a.frobenius_norm();
        assert!(eig.values[..14].iter().all(|l| l.abs() < 1e-12 * norm));
    }
}

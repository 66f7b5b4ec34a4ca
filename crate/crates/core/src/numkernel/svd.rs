use num_complex::Complex64;

use super::{inner, vec_norm, ComplexMatrix, LinalgError};

const MAX_SWEEPS: usize = 100;

/// Thin SVD `A = U diag(s) V^H` with `k = min(rows, cols)` singular values,
/// sorted descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let scaled = ComplexMatrix::from_fn(self.u.rows(), self.u.cols(), |r, c| {
            self.u[(r, c)] * self.singular_values[c]
        });
        scaled.matmul(&self.v.adjoint())
    }
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd_decompose(a: &ComplexMatrix) -> Result<Svd, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    if a.rows() < a.cols() {
        let t = svd_tall(&a.adjoint())?;
        return Ok(Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }
    svd_tall(a)
}

fn svd_tall(a: &ComplexMatrix) -> Result<Svd, LinalgError> {
    let m = a.rows();
    let n = a.cols();
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|c| a.column(c)).collect();
    let mut v: Vec<Vec<Complex64>> = (0..n)
        .map(|c| {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[c] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();

    let tol = 1e-15;
    // pairs of columns at rounding level stop rotating against each other
    let floor = f64::EPSILON * a.frobenius_norm().powi(2);
    let mut converged = n == 1;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma = inner(&cols[p], &cols[q]);
                let g_abs = gamma.norm();
                if g_abs <= floor || g_abs <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let e = (gamma / g_abs).conj();
                let zeta = (beta - alpha) / (2.0 * g_abs);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                apply_pair(&mut cols, p, q, c, s, e);
                apply_pair(&mut v, p, q, c, s, e);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let norms: Vec<f64> = cols.iter().map(|c| vec_norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sigma_max = norms.iter().cloned().fold(0.0, f64::max);
    let negligible = sigma_max * (m.max(n) as f64) * f64::EPSILON;

    let mut u_cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut singular_values = Vec::with_capacity(n);
    let mut v_cols = Vec::with_capacity(n);
    let mut deficient = Vec::new();
    for (slot, &i) in order.iter().enumerate() {
        let s = norms[i];
        singular_values.push(s);
        v_cols.push(v[i].clone());
        if s > negligible && s > 0.0 {
            u_cols.push(cols[i].iter().map(|z| z / s).collect());
        } else {
            u_cols.push(vec![Complex64::new(0.0, 0.0); m]);
            deficient.push(slot);
        }
    }
    complete_orthonormal(&mut u_cols, &deficient, m);

    let mut u = ComplexMatrix::zeros(m, n);
    let mut vm = ComplexMatrix::zeros(n, n);
    for c in 0..n {
        u.set_column(c, &u_cols[c]);
        vm.set_column(c, &v_cols[c]);
    }
    Ok(Svd {
        u,
        singular_values,
        v: vm,
    })
}

/// `[x_p x_q] ← [x_p x_q] [[c, s], [−s e, c e]]`
fn apply_pair(cols: &mut [Vec<Complex64>], p: usize, q: usize, c: f64, s: f64, e: Complex64) {
    let (left, right) = cols.split_at_mut(q);
    let xp = &mut left[p];
    let xq = &mut right[0];
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let old_a = *a;
        let old_b = *b;
        *a = old_a * c - old_b * e * s;
        *b = old_a * s + old_b * e * c;
    }
}

/// Fills the listed (zero) columns with unit vectors orthogonal to all others
/// via Gram-Schmidt against the standard basis.
fn complete_orthonormal(cols: &mut [Vec<Complex64>], slots: &[usize], m: usize) {
    let mut candidate = 0;
    for &slot in slots {
        while candidate < m {
            let mut e = vec![Complex64::new(0.0, 0.0); m];
            e[candidate] = Complex64::new(1.0, 0.0);
            candidate += 1;
            for _ in 0..2 {
                for (j, other) in cols.iter().enumerate() {
                    if j == slot {
                        continue;
                    }
                    let proj = inner(other, &e);
                    for (x, o) in e.iter_mut().zip(other) {
                        *x -= o * proj;
                    }
                }
            }
            let norm = vec_norm(&e);
            if norm > 1e-6 {
                cols[slot] = e.iter().map(|z| z / norm).collect();
                break;
            }
        }
    }
}

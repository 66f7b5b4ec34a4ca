use num_complex::Complex64;

use super::{check_hermitian, ComplexMatrix, LinalgError};

/// 1-norm condition number above which a system is rejected.
pub const CONDITION_LIMIT: f64 = 1e8;

const HERMITIAN_TOL: f64 = 1e-10;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct LuFactor {
    n: usize,
    lu: ComplexMatrix,
    perm: Vec<usize>,
    norm_one: f64,
}

impl LuFactor {
    pub fn new(a: &ComplexMatrix) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        if !a.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let n = a.rows();
        let norm_one = a.norm_one();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (pivot_row, pivot_abs) =
                (k..n)
                    .map(|r| (r, lu[(r, k)].norm()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pivot_abs == 0.0 {
                return Err(LinalgError::IllConditioned {
                    condition: f64::INFINITY,
                });
            }
            if pivot_row != k {
                perm.swap(k, pivot_row);
                for c in 0..n {
                    let tmp = lu[(k, c)];
                    lu[(k, c)] = lu[(pivot_row, c)];
                    lu[(pivot_row, c)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for r in k + 1..n {
                let factor = lu[(r, k)] / pivot;
                lu[(r, k)] = factor;
                if factor.re == 0.0 && factor.im == 0.0 {
                    continue;
                }
                for c in k + 1..n {
                    let upd = factor * lu[(k, c)];
                    lu[(r, c)] -= upd;
                }
            }
        }
        Ok(Self {
            n,
            lu,
            perm,
            norm_one,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                found: b.len(),
            });
        }
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut acc = x[r];
            for c in 0..r {
                acc -= self.lu[(r, c)] * x[c];
            }
            x[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = x[r];
            for c in r + 1..n {
                acc -= self.lu[(r, c)] * x[c];
            }
            x[r] = acc / self.lu[(r, r)];
        }
        Ok(x)
    }

    pub fn solve_matrix(&self, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        if b.rows() != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                found: b.rows(),
            });
        }
        let mut out = ComplexMatrix::zeros(self.n, b.cols());
        for c in 0..b.cols() {
            let x = self.solve(&b.column(c))?;
            out.set_column(c, &x);
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<ComplexMatrix, LinalgError> {
        self.solve_matrix(&ComplexMatrix::identity(self.n))
    }

    /// 1-norm condition number from the explicit inverse. Exact, `O(n³)`.
    pub fn condition(&self) -> f64 {
        match self.inverse() {
            Ok(inv) if inv.is_finite() => self.norm_one * inv.norm_one(),
            _ => f64::INFINITY,
        }
    }
}

fn factor_checked(a: &ComplexMatrix) -> Result<LuFactor, LinalgError> {
    check_hermitian(a, HERMITIAN_TOL)?;
    let lu = LuFactor::new(a)?;
    let condition = lu.condition();
    if !(condition <= CONDITION_LIMIT) {
        return Err(LinalgError::IllConditioned { condition });
    }
    Ok(lu)
}

/// Solves `A x = b` for Hermitian `A`, rejecting systems whose condition
/// number exceeds [`CONDITION_LIMIT`].
pub fn hermitian_solve(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
    if b.len() != a.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.rows(),
            found: b.len(),
        });
    }
    factor_checked(a)?.solve(b)
}

/// Multi right-hand-side variant of [`hermitian_solve`].
pub fn hermitian_solve_many(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
) -> Result<ComplexMatrix, LinalgError> {
    factor_checked(a)?.solve_matrix(b)
}

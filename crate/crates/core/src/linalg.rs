//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Raised when a matrix expected to be symmetric positive definite is not.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("matrix of order {order} is not numerically positive definite")]
pub struct NotPositiveDefinite {
    pub order: usize,
}

fn factor(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>, NotPositiveDefinite> {
    // nalgebra's Cholesky reads only the lower triangle; symmetrize first so
    // both triangles contribute.
    let sym = symmetrize(m);
    Cholesky::new(sym).ok_or(NotPositiveDefinite { order: m.nrows() })
}

/// Solves `M X = R` for symmetric positive definite `M`.
pub fn solve_spd_left(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>, NotPositiveDefinite> {
    let chol = factor(m)?;
    Ok(chol.solve(rhs))
}

/// Solves `X M = R` for symmetric positive definite `M`.
///
/// Uses `M Xᵀ = Rᵀ`, valid because `M = Mᵀ`.
pub fn solve_spd_right(rhs: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<DMatrix<f64>, NotPositiveDefinite> {
    let chol = factor(m)?;
    Ok(chol.solve(&rhs.transpose()).transpose())
}

/// `(M + Mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn frobenius_sq(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum()
}

/// Largest absolute entry; 0 for an empty matrix.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_vec(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Largest absolute entry of `M - Mᵀ`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `11ᵀ` of order `n`.
pub fn ones_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_element(n, n, 1.0)
}

/// Row sums `M1`.
pub fn row_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.nrows(), m.row_iter().map(|r| r.sum()))
}

/// `v1ᵀ`: every column equals `v`.
pub fn outer_ones(v: &DVector<f64>, ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(v.len(), ncols, |i, _| v[i])
}

pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

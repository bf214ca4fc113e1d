//! Graph-filter mathematics: the self-loop normalized Laplacian, the
//! consensus low-pass filter `G = ¾I + ¼C`, feature smoothing and symmetric
//! eigendecomposition.
//!
//! With `Ã = W + I` and `L = I − D̃^{-1/2} Ã D̃^{-1/2}`, eigenvalues of `L` lie
//! in `[0, 2]`, so the response `p(λ) = 1 − λ/2` maps them into `[0, 1]` and
//! `G = I − L/2` attenuates high graph frequencies. When the consensus
//! matrix `C` is symmetric, nonnegative, zero-diagonal and row-stochastic,
//! `D̃ = 2I` and `L = (I − C)/2`, giving `G = ¾I + ¼C`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::linalg;

/// Symmetry tolerance for inputs that should be symmetric up to rounding.
pub const SYMMETRY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max |M - Mᵀ| = {0:e})")]
    Asymmetric(f64),
    #[error("edge weights must be nonnegative (found {0})")]
    NegativeWeight(f64),
    #[error("shape mismatch: filter is {filter}x{filter}, signal has {rows} rows")]
    ShapeMismatch { filter: usize, rows: usize },
}

fn ensure_square(m: &DMatrix<f64>) -> Result<(), GraphError> {
    if m.nrows() != m.ncols() {
        return Err(GraphError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(())
}

/// `L = I − D̃^{-1/2}(W + I)D̃^{-1/2}` with `D̃ᵢᵢ = Σⱼ (W + I)ᵢⱼ`.
pub fn normalized_laplacian(w: &DMatrix<f64>) -> Result<DMatrix<f64>, GraphError> {
    ensure_square(w)?;
    let asym = linalg::asymmetry(w);
    if asym > SYMMETRY_TOL {
        return Err(GraphError::Asymmetric(asym));
    }
    if let Some(neg) = w.iter().copied().find(|x| *x < 0.0) {
        return Err(GraphError::NegativeWeight(neg));
    }
    let n = w.nrows();
    let a = w + DMatrix::<f64>::identity(n, n);
    // every degree is at least 1 because of the self-loop
    let inv_sqrt: Vec<f64> = a.row_iter().map(|r| 1.0 / r.sum().sqrt()).collect();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - inv_sqrt[i] * a[(i, j)] * inv_sqrt[j]
    }))
}

/// The first-order consensus filter `G = ¾I + ¼C`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterMatrix(DMatrix<f64>);

impl FilterMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }
}

/// Builds `G = 0.75·I + 0.25·C`. `C` is not checked against the consensus
/// constraints; use [`check_consensus`] for that.
pub fn consensus_filter(c: &DMatrix<f64>) -> Result<FilterMatrix, GraphError> {
    ensure_square(c)?;
    let n = c.nrows();
    Ok(FilterMatrix(DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { 0.75 } else { 0.0 };
        diag + 0.25 * c[(i, j)]
    })))
}

/// Returns `G·X`.
pub fn smooth_features(g: &FilterMatrix, x: &DMatrix<f64>) -> Result<DMatrix<f64>, GraphError> {
    if x.nrows() != g.order() {
        return Err(GraphError::ShapeMismatch { filter: g.order(), rows: x.nrows() });
    }
    Ok(g.matrix() * x)
}

/// `yᵀLy / yᵀy`; zero for the zero signal.
pub fn rayleigh_quotient(l: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let denom = y.norm_squared();
    if denom == 0.0 {
        return 0.0;
    }
    (y.transpose() * l * y)[(0, 0)] / denom
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct GraphSpectrum {
    pub eigenvalues: DVector<f64>,
    /// Orthonormal eigenvectors as columns, in the same order as `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl GraphSpectrum {
    /// `U diag(λ) Uᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let u = &self.eigenvectors;
        u * DMatrix::from_diagonal(&self.eigenvalues) * u.transpose()
    }
}

/// Symmetric eigendecomposition with ascending eigenvalues. The input is
/// symmetrized before factorization.
pub fn filter_spectrum(m: &DMatrix<f64>) -> Result<GraphSpectrum, GraphError> {
    ensure_square(m)?;
    let asym = linalg::asymmetry(m);
    if asym > SYMMETRY_TOL {
        return Err(GraphError::Asymmetric(asym));
    }
    let eig = SymmetricEigen::new(linalg::symmetrize(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(GraphSpectrum { eigenvalues, eigenvectors })
}

/// How far a matrix is from satisfying the consensus constraints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsensusCheck {
    pub asymmetry: f64,
    /// Most negative entry, reported as a nonnegative magnitude.
    pub negativity: f64,
    pub max_abs_diagonal: f64,
    /// `‖C1 − 1‖_∞`.
    pub row_sum_gap: f64,
}

impl ConsensusCheck {
    pub fn within(&self, tol: f64) -> bool {
        self.asymmetry <= tol && self.negativity <= tol && self.max_abs_diagonal <= tol && self.row_sum_gap <= tol
    }
}

pub fn check_consensus(c: &DMatrix<f64>) -> Result<ConsensusCheck, GraphError> {
    ensure_square(c)?;
    let negativity = c.iter().fold(0.0_f64, |acc, x| acc.max(-x));
    let max_abs_diagonal = c.diagonal().iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let row_sum_gap = linalg::row_sums(c).iter().fold(0.0_f64, |acc, s| acc.max((s - 1.0).abs()));
    Ok(ConsensusCheck { asymmetry: linalg::asymmetry(c), negativity, max_abs_diagonal, row_sum_gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, data.len() / rows, data)
    }

    #[test]
    fn laplacian_of_empty_graph_is_zero() {
        let l = normalized_laplacian(&DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(l, DMatrix::zeros(2, 2));
    }

    #[test]
    fn laplacian_of_single_edge() {
        let l = normalized_laplacian(&m(2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let expected = m(2, &[0.5, -0.5, -0.5, 0.5]);
        assert!((&l - expected).abs().max() < 1e-15);
        let spec = filter_spectrum(&l).unwrap();
        assert!(spec.eigenvalues[0].abs() < 1e-15);
        assert!((spec.eigenvalues[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn laplacian_rejects_invalid_weights() {
        assert!(matches!(normalized_laplacian(&m(2, &[0.0, 1.0, 0.0, 0.0])), Err(GraphError::Asymmetric(_))));
        assert!(matches!(normalized_laplacian(&m(2, &[0.0, -1.0, -1.0, 0.0])), Err(GraphError::NegativeWeight(_))));
        assert!(matches!(normalized_laplacian(&DMatrix::zeros(2, 3)), Err(GraphError::NotSquare { .. })));
    }

    #[test]
    fn filter_examples() {
        assert_eq!(consensus_filter(&DMatrix::zeros(3, 3)).unwrap().into_inner(), DMatrix::identity(3, 3) * 0.75);
        let g = consensus_filter(&m(2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert_eq!(g.matrix(), &m(2, &[0.75, 0.25, 0.25, 0.75]));
        assert!(consensus_filter(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn filter_of_complete_graph_spectrum() {
        // C = (11ᵀ − I)/2 has eigenvalues {1, −½, −½}; G maps them to {1, 0.625, 0.625}.
        let c = (DMatrix::from_element(3, 3, 1.0) - DMatrix::identity(3, 3)) * 0.5;
        let g = consensus_filter(&c).unwrap();
        let spec = filter_spectrum(g.matrix()).unwrap();
        let expected = [0.625, 0.625, 1.0];
        for (got, want) in spec.eigenvalues.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_examples() {
        let x = m(2, &[1.0, 2.0, -3.0, 4.0]);
        // C = I gives G = 0.75 I + 0.25 I = I
        let id = consensus_filter(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(smooth_features(&id, &x).unwrap(), x);
        let scalar = consensus_filter(&DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(smooth_features(&scalar, &x).unwrap(), &x * 0.75);
        let g = consensus_filter(&m(2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let y = smooth_features(&g, &m(2, &[1.0, -1.0])).unwrap();
        assert_eq!(y, m(2, &[0.5, -0.5]));
        assert!(smooth_features(&g, &DMatrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn spectrum_sorting() {
        let spec = filter_spectrum(&DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]))).unwrap();
        assert_eq!(spec.eigenvalues.as_slice(), &[1.0, 2.0, 3.0]);
        let spec = filter_spectrum(&DMatrix::identity(4, 4)).unwrap();
        assert!(spec.eigenvalues.iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!(filter_spectrum(&m(2, &[1.0, 1.0, 0.0, 1.0])).is_err());
    }

    #[test]
    fn consensus_check_flags_violations() {
        let good = m(2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(check_consensus(&good).unwrap().within(0.0));
        let bad = m(2, &[0.5, -0.5, 1.0, 0.0]);
        let chk = check_consensus(&bad).unwrap();
        assert_eq!(chk.negativity, 0.5);
        assert_eq!(chk.max_abs_diagonal, 0.5);
        assert_eq!(chk.asymmetry, 1.5);
        assert_eq!(chk.row_sum_gap, 1.0);
    }
}

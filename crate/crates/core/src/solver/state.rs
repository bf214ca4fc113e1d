use nalgebra::{DMatrix, DVector};

use crate::data::MultiViewDataset;

use super::SolverConfig;

/// Per-view ADMM iterates.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewBlock {
    /// Smoothed features `Yⁱ` (n×dⁱ).
    pub y: DMatrix<f64>,
    /// View coefficients `Cⁱ` (n×n).
    pub c: DMatrix<f64>,
    /// Auxiliary copy `Zⁱ` of `Cⁱ` carrying the symmetric/nonnegative/zero-diagonal constraints.
    pub z: DMatrix<f64>,
    /// Multiplier `Γⁱ` for `4Yⁱ = 3Xⁱ + CXⁱ` (n×dⁱ).
    pub smooth_mult: DMatrix<f64>,
    /// Multiplier `Λⁱ` for `Cⁱ = Zⁱ`.
    pub coupling_mult: DMatrix<f64>,
    /// Multiplier `Ωⁱ` for `Cⁱ1 = 1`.
    pub row_mult: DVector<f64>,
}

/// All ADMM iterates. Confined to the thread running the solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub views: Vec<ViewBlock>,
    /// Consensus coefficients `C`.
    pub c: DMatrix<f64>,
    /// Auxiliary copy `Z` of `C`.
    pub z: DMatrix<f64>,
    /// Multiplier `Θ` for `C = Z`.
    pub consensus_mult: DMatrix<f64>,
    /// Multiplier `Φ` for `C1 = 1`.
    pub consensus_row_mult: DVector<f64>,
    /// View weights `γ` on the simplex.
    pub weights: Vec<f64>,
    /// Current penalty `μ`.
    pub mu: f64,
    /// Completed iterations.
    pub iter: usize,
}

impl SolverState {
    pub fn n_samples(&self) -> usize {
        self.c.nrows()
    }

    /// `(γⁱ)^η`, the effective weight of view `i` in the consensus term.
    pub fn view_weight(&self, i: usize, eta: f64) -> f64 {
        self.weights[i].powf(eta)
    }

    pub fn all_finite(&self) -> bool {
        let fin = |m: &DMatrix<f64>| m.iter().all(|x| x.is_finite());
        self.views.iter().all(|b| {
            fin(&b.y)
                && fin(&b.c)
                && fin(&b.z)
                && fin(&b.smooth_mult)
                && fin(&b.coupling_mult)
                && b.row_mult.iter().all(|x| x.is_finite())
        }) && fin(&self.c)
            && fin(&self.z)
            && fin(&self.consensus_mult)
            && self.consensus_row_mult.iter().all(|x| x.is_finite())
            && self.weights.iter().all(|x| x.is_finite())
            && self.mu.is_finite()
    }
}

/// Zero iterates, uniform weights `1/v`, `μ = mu0`.
pub fn init_state(ds: &MultiViewDataset, cfg: &SolverConfig) -> SolverState {
    let n = ds.n_samples();
    let v = ds.n_views();
    let views = ds
        .views()
        .iter()
        .map(|x| ViewBlock {
            y: DMatrix::zeros(n, x.ncols()),
            c: DMatrix::zeros(n, n),
            z: DMatrix::zeros(n, n),
            smooth_mult: DMatrix::zeros(n, x.ncols()),
            coupling_mult: DMatrix::zeros(n, n),
            row_mult: DVector::zeros(n),
        })
        .collect();
    SolverState {
        views,
        c: DMatrix::zeros(n, n),
        z: DMatrix::zeros(n, n),
        consensus_mult: DMatrix::zeros(n, n),
        consensus_row_mult: DVector::zeros(n),
        weights: vec![1.0 / v as f64; v],
        mu: cfg.mu0,
        iter: 0,
    }
}

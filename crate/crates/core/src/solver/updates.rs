//! Closed-form block updates of the ADMM iteration.
//!
//! Each update minimizes the augmented Lagrangian over one block with the
//! others fixed. Quadratic blocks reduce to linear systems whose matrices are
//! Gram matrices plus positive multiples of `I` (and `11ᵀ`), so they are
//! solved by Cholesky rather than by forming inverses.
//!
//! The two ablation variants reuse the same recipe:
//!
//! * [`Variant::NoSmoothing`] fixes `Yⁱ = Xⁱ` and drops the smoothing
//!   constraint and its multiplier `Γⁱ`.
//! * [`Variant::Frobenius`] replaces `α‖Cⁱ − CZⁱ‖²` by `α‖Cⁱ‖²`, which
//!   decouples `Zⁱ` from `C`; `Zⁱ` becomes `Cⁱ + Λⁱ/μ` before projection.

use nalgebra::{DMatrix, DVector};

use crate::data::MultiViewDataset;
use crate::linalg::{self, NotPositiveDefinite};

use super::state::SolverState;
use super::{SolverConfig, Variant};

/// Which linear system failed to factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    ViewRepresentation,
    ViewCoefficients,
    ViewAuxiliary,
    ConsensusCoefficients,
}

impl std::fmt::Display for Step {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Step::ViewRepresentation => "Y update",
            Step::ViewCoefficients => "view coefficient update",
            Step::ViewAuxiliary => "view auxiliary update",
            Step::ConsensusCoefficients => "consensus update",
        })
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{step} failed: {source}")]
pub struct UpdateError {
    pub step: Step,
    #[source]
    pub source: NotPositiveDefinite,
}

fn at(step: Step) -> impl FnOnce(NotPositiveDefinite) -> UpdateError {
    move |source| UpdateError { step, source }
}

/// Sets `M ← (M + Mᵀ)/2`, then `M ← max(M, 0)`, then `diag(M) ← 0`.
///
/// This is the sequential three-step map, not the Euclidean projection onto
/// the intersection of the three sets.
pub fn project_constraints(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = linalg::symmetrize(m);
    out.apply(|x| *x = x.max(0.0));
    for i in 0..n {
        out[(i, i)] = 0.0;
    }
    out
}

/// Features entering the self-expression term of view `i`: `Yⁱ`, or `Xⁱ`
/// for the no-smoothing variant.
pub fn self_expression_features<'a>(
    state: &'a SolverState,
    ds: &'a MultiViewDataset,
    variant: Variant,
    i: usize,
) -> &'a DMatrix<f64> {
    match variant {
        Variant::NoSmoothing => ds.view(i),
        Variant::Full | Variant::Frobenius => &state.views[i].y,
    }
}

/// `Yⁱ = [2(I−Cⁱ)ᵀ(I−Cⁱ) + 16μI]⁻¹(12μXⁱ + 4μCXⁱ − 4Γⁱ)`.
///
/// Returns `Xⁱ` unchanged for the no-smoothing variant.
pub fn update_view_representation(
    state: &SolverState,
    ds: &MultiViewDataset,
    variant: Variant,
    i: usize,
) -> Result<DMatrix<f64>, UpdateError> {
    let x = ds.view(i);
    if variant == Variant::NoSmoothing {
        return Ok(x.clone());
    }
    let n = state.n_samples();
    let mu = state.mu;
    let block = &state.views[i];
    let resid = DMatrix::<f64>::identity(n, n) - &block.c;
    let lhs = resid.transpose() * &resid * 2.0 + DMatrix::<f64>::identity(n, n) * (16.0 * mu);
    let rhs = x * (12.0 * mu) + (&state.c * x) * (4.0 * mu) - &block.smooth_mult * 4.0;
    linalg::solve_spd_left(&lhs, &rhs).map_err(at(Step::ViewRepresentation))
}

/// `Cⁱ = N · D⁻¹` with
/// `N = 2YYᵀ + 2(αCZⁱ + βwC) + μ(Zⁱ + 11ᵀ) − Λⁱ − Ωⁱ1ᵀ` and
/// `D = 2YYᵀ + 2(α + βw)I + μ(I + 11ᵀ)`, where `w = (γⁱ)^η` and `Y` is the
/// view's self-expression features. The Frobenius variant drops `αCZⁱ` from
/// `N` (its regularizer pulls `Cⁱ` toward 0 instead of `CZⁱ`).
pub fn update_view_coefficients(
    state: &SolverState,
    ds: &MultiViewDataset,
    cfg: &SolverConfig,
    variant: Variant,
    i: usize,
) -> Result<DMatrix<f64>, UpdateError> {
    let n = state.n_samples();
    let mu = state.mu;
    let block = &state.views[i];
    let y = self_expression_features(state, ds, variant, i);
    let w = state.view_weight(i, cfg.eta);
    let gram = y * y.transpose() * 2.0;
    let ones = linalg::ones_matrix(n);

    let mut numer = &gram + &state.c * (2.0 * cfg.beta * w) + (&block.z + &ones) * mu
        - &block.coupling_mult
        - linalg::outer_ones(&block.row_mult, n);
    if variant != Variant::Frobenius {
        numer += (&state.c * &block.z) * (2.0 * cfg.alpha);
    }
    let denom = gram + DMatrix::<f64>::identity(n, n) * (2.0 * (cfg.alpha + cfg.beta * w) + mu) + ones * mu;
    linalg::solve_spd_right(&numer, &denom).map_err(at(Step::ViewCoefficients))
}

/// Unprojected `Zⁱ`: `(2αCᵀC + μI)⁻¹(2αCᵀCⁱ + μCⁱ + Λⁱ)`, or `Cⁱ + Λⁱ/μ`
/// for the Frobenius variant.
pub fn view_auxiliary_unprojected(
    state: &SolverState,
    cfg: &SolverConfig,
    variant: Variant,
    i: usize,
) -> Result<DMatrix<f64>, UpdateError> {
    let n = state.n_samples();
    let mu = state.mu;
    let block = &state.views[i];
    if variant == Variant::Frobenius {
        return Ok(&block.c + &block.coupling_mult / mu);
    }
    let ct = state.c.transpose() * (2.0 * cfg.alpha);
    let lhs = &ct * &state.c + DMatrix::<f64>::identity(n, n) * mu;
    let rhs = ct * &block.c + &block.c * mu + &block.coupling_mult;
    linalg::solve_spd_left(&lhs, &rhs).map_err(at(Step::ViewAuxiliary))
}

/// Projected `Zⁱ` update.
pub fn update_view_auxiliary(
    state: &SolverState,
    cfg: &SolverConfig,
    variant: Variant,
    i: usize,
) -> Result<DMatrix<f64>, UpdateError> {
    view_auxiliary_unprojected(state, cfg, variant, i).map(|z| project_constraints(&z))
}

/// `C = A · B⁻¹`.
///
/// Full model:
/// `A = Σᵢ[2αCⁱZⁱᵀ + 2βwᵢCⁱ + 4μYⁱXⁱᵀ − 3μXⁱXⁱᵀ + ΓⁱXⁱᵀ] + μ(Z + 11ᵀ) − Θ − Φ1ᵀ`,
/// `B = Σᵢ[2αZⁱZⁱᵀ + 2βwᵢI + μXⁱXⁱᵀ] + μ(I + 11ᵀ)`.
/// The no-smoothing variant drops the smoothing-constraint terms (those with
/// `Xⁱ`); the Frobenius variant drops the `α` terms.
pub fn update_consensus_coefficients(
    state: &SolverState,
    ds: &MultiViewDataset,
    cfg: &SolverConfig,
    variant: Variant,
) -> Result<DMatrix<f64>, UpdateError> {
    let n = state.n_samples();
    let mu = state.mu;
    let ones = linalg::ones_matrix(n);
    let mut a = (&state.z + &ones) * mu - &state.consensus_mult - linalg::outer_ones(&state.consensus_row_mult, n);
    let mut b = (DMatrix::<f64>::identity(n, n) + ones) * mu;
    for (i, block) in state.views.iter().enumerate() {
        let w = state.view_weight(i, cfg.eta);
        a += &block.c * (2.0 * cfg.beta * w);
        b += DMatrix::<f64>::identity(n, n) * (2.0 * cfg.beta * w);
        if variant != Variant::Frobenius {
            a += (&block.c * block.z.transpose()) * (2.0 * cfg.alpha);
            b += (&block.z * block.z.transpose()) * (2.0 * cfg.alpha);
        }
        if variant != Variant::NoSmoothing {
            let x = ds.view(i);
            let xxt = x * x.transpose();
            a += (&block.y * x.transpose()) * (4.0 * mu) - &xxt * (3.0 * mu) + &block.smooth_mult * x.transpose();
            b += xxt * mu;
        }
    }
    linalg::solve_spd_right(&a, &b).map_err(at(Step::ConsensusCoefficients))
}

/// Unprojected `Z = C + Θ/μ`.
pub fn consensus_auxiliary_unprojected(state: &SolverState) -> DMatrix<f64> {
    &state.c + &state.consensus_mult / state.mu
}

/// Projected `Z` update.
pub fn update_consensus_auxiliary(state: &SolverState) -> DMatrix<f64> {
    project_constraints(&consensus_auxiliary_unprojected(state))
}

/// `4Yⁱ − 3Xⁱ − CXⁱ`.
pub fn smoothing_residual(state: &SolverState, ds: &MultiViewDataset, i: usize) -> DMatrix<f64> {
    let x = ds.view(i);
    &state.views[i].y * 4.0 - x * 3.0 - &state.c * x
}

fn row_residual(m: &DMatrix<f64>) -> DVector<f64> {
    linalg::row_sums(m).add_scalar(-1.0)
}

/// Dual ascent with the current `μ`, then `μ ← min(μ_max, ρμ)`.
pub fn update_multipliers(state: &mut SolverState, ds: &MultiViewDataset, cfg: &SolverConfig, variant: Variant) {
    let mu = state.mu;
    for i in 0..state.views.len() {
        if variant != Variant::NoSmoothing {
            let r = smoothing_residual(state, ds, i);
            state.views[i].smooth_mult += r * mu;
        }
        let block = &mut state.views[i];
        block.coupling_mult += (&block.c - &block.z) * mu;
        block.row_mult += row_residual(&block.c) * mu;
    }
    state.consensus_mult += (&state.c - &state.z) * mu;
    state.consensus_row_mult += row_residual(&state.c) * mu;
    state.mu = cfg.mu_max.min(cfg.rho * mu);
}

/// `Jⁱ = ‖C − Cⁱ‖²_F` for every view.
pub fn view_disagreements(state: &SolverState) -> Vec<f64> {
    state.views.iter().map(|b| linalg::frobenius_sq(&(&state.c - &b.c))).collect()
}

/// `γⁱ = Jᵢ^{1/(1−η)} / Σⱼ Jⱼ^{1/(1−η)}` with each `J` floored at `j_floor`.
///
/// Evaluated as `exp(e·ln Jᵢ − m) / Σ exp(e·ln Jⱼ − m)` with `m` the largest
/// exponent so that large `|1/(1−η)|` cannot overflow; equal inputs give
/// exactly `1/v`.
pub fn update_view_weights(disagreements: &[f64], eta: f64, j_floor: f64) -> Vec<f64> {
    let exponent = 1.0 / (1.0 - eta);
    let logs: Vec<f64> = disagreements.iter().map(|j| exponent * j.max(j_floor).ln()).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = scaled.iter().sum();
    // strictly positive even when a ratio underflows
    scaled.iter().map(|s| (s / total).max(f64::MIN_POSITIVE)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, data.len() / rows, data)
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_constraints(&DMatrix::identity(3, 3)), DMatrix::zeros(3, 3));
        let valid = m(2, &[0.0, 0.3, 0.3, 0.0]);
        assert_eq!(project_constraints(&valid), valid);
        assert_eq!(project_constraints(&m(2, &[1.0, -4.0, 2.0, 1.0])), DMatrix::zeros(2, 2));
    }

    #[test]
    fn weights_examples() {
        let w = update_view_weights(&[2.0, 2.0, 2.0], 0.5, 1e-12);
        assert_eq!(w, vec![1.0 / 3.0; 3]);
        let w = update_view_weights(&[1.0, 4.0], 2.0, 1e-12);
        assert!((w[0] - 0.8).abs() < 1e-15 && (w[1] - 0.2).abs() < 1e-15);
        let w = update_view_weights(&[1.0, 4.0], 0.5, 1e-12);
        assert!((w[0] - 1.0 / 17.0).abs() < 1e-15 && (w[1] - 16.0 / 17.0).abs() < 1e-15);
        // zero disagreement at the first iteration floors to uniform
        assert_eq!(update_view_weights(&[0.0, 0.0], -5.0, 1e-12), vec![0.5, 0.5]);
        assert_eq!(update_view_weights(&[0.3], 2.0, 1e-12), vec![1.0]);
    }

    #[test]
    fn weights_survive_extreme_exponents() {
        // η = 0.999 gives exponent 1000
        let w = update_view_weights(&[10.0, 1e-3, 1e3], 0.999, 1e-12);
        assert!(w.iter().all(|x| x.is_finite() && *x >= 0.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::MultiViewDataset;
use crate::linalg;

use super::state::SolverState;
use super::updates::{self, smoothing_residual};
use super::{SolverConfig, Variant};

/// Max-norms of the equality-constraint residuals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintGaps {
    /// `max_i ‖4Yⁱ − 3Xⁱ − CXⁱ‖_max` (zero when the variant has no smoothing constraint).
    pub smoothing: f64,
    /// `max_i ‖Cⁱ − Zⁱ‖_max`.
    pub view_coupling: f64,
    /// `max_i ‖Cⁱ1 − 1‖_∞`.
    pub view_rows: f64,
    /// `‖C − Z‖_max`.
    pub consensus_coupling: f64,
    /// `‖C1 − 1‖_∞`.
    pub consensus_rows: f64,
}

impl ConstraintGaps {
    pub fn max(&self) -> f64 {
        self.smoothing.max(self.view_coupling).max(self.view_rows).max(self.consensus_coupling).max(self.consensus_rows)
    }

    pub fn measure(state: &SolverState, ds: &MultiViewDataset, variant: Variant) -> Self {
        let mut gaps = ConstraintGaps::default();
        for (i, block) in state.views.iter().enumerate() {
            if variant != Variant::NoSmoothing {
                gaps.smoothing = gaps.smoothing.max(linalg::max_abs(&smoothing_residual(state, ds, i)));
            }
            gaps.view_coupling = gaps.view_coupling.max(linalg::max_abs(&(&block.c - &block.z)));
            gaps.view_rows = gaps.view_rows.max(row_gap(&block.c));
        }
        gaps.consensus_coupling = linalg::max_abs(&(&state.c - &state.z));
        gaps.consensus_rows = row_gap(&state.c);
        gaps
    }
}

fn row_gap(m: &DMatrix<f64>) -> f64 {
    linalg::max_abs_vec(&linalg::row_sums(m).add_scalar(-1.0))
}

/// One row of the convergence trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub iter: usize,
    /// `‖C_{k+1} − C_k‖²_F`.
    pub residual_c: f64,
    /// `‖Z_{k+1} − Z_k‖²_F`.
    pub residual_z: f64,
    pub gaps: ConstraintGaps,
    pub objective: f64,
    /// `Jⁱ = ‖C − Cⁱ‖²_F` per view.
    pub disagreements: Vec<f64>,
    /// View weights after this iteration's update.
    pub weights: Vec<f64>,
    /// Penalty used during this iteration (before the `ρ` increase).
    pub mu: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub records: Vec<IterationRecord>,
}

impl Diagnostics {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

/// Objective of the model being solved, with `Cⁱ − CZⁱ` in the graph
/// regularizer:
///
/// * full: `Σᵢ ‖Yⁱ − CⁱYⁱ‖² + α‖Cⁱ − CZⁱ‖² + β(γⁱ)^η‖C − Cⁱ‖²`
/// * no smoothing: `Xⁱ` in place of `Yⁱ`
/// * Frobenius: `α‖Cⁱ‖²` in place of the graph regularizer
pub fn objective_value(state: &SolverState, ds: &MultiViewDataset, cfg: &SolverConfig, variant: Variant) -> f64 {
    state
        .views
        .iter()
        .enumerate()
        .map(|(i, block)| {
            let y = updates::self_expression_features(state, ds, variant, i);
            let fit = linalg::frobenius_sq(&(y - &block.c * y));
            let reg = match variant {
                Variant::Frobenius => linalg::frobenius_sq(&block.c),
                Variant::Full | Variant::NoSmoothing => linalg::frobenius_sq(&(&block.c - &state.c * &block.z)),
            };
            let consensus = linalg::frobenius_sq(&(&state.c - &block.c));
            fit + cfg.alpha * reg + cfg.beta * state.view_weight(i, cfg.eta) * consensus
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::state::init_state;

    #[test]
    fn objective_of_zero_state_and_identity_smoothing() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let ds = MultiViewDataset::new("t", vec![x.clone(), x.clone() * 2.0], None, None).unwrap();
        let cfg = SolverConfig::default();
        let mut st = init_state(&ds, &cfg);
        assert_eq!(objective_value(&st, &ds, &cfg, Variant::Full), 0.0);
        for (i, b) in st.views.iter_mut().enumerate() {
            b.y = ds.view(i).clone();
        }
        let expected = linalg::frobenius_sq(ds.view(0)) + linalg::frobenius_sq(ds.view(1));
        assert_eq!(objective_value(&st, &ds, &cfg, Variant::Full), expected);
    }

    #[test]
    fn gaps_of_zero_state() {
        let x = DMatrix::from_element(3, 2, 1.0);
        let ds = MultiViewDataset::new("t", vec![x], None, None).unwrap();
        let st = init_state(&ds, &SolverConfig::default());
        let g = ConstraintGaps::measure(&st, &ds, Variant::Full);
        assert_eq!(g.smoothing, 3.0);
        assert_eq!(g.view_rows, 1.0);
        assert_eq!(g.consensus_rows, 1.0);
        assert_eq!(g.view_coupling, 0.0);
        assert_eq!(g.max(), 3.0);
        assert_eq!(ConstraintGaps::measure(&st, &ds, Variant::NoSmoothing).smoothing, 0.0);
    }
}

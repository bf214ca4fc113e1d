//! ADMM solver for the consensus-graph-filter model.
//!
//! Each iteration performs, in order: for every view `i`, the `Yⁱ`, `Cⁱ` and
//! `Zⁱ` updates; the consensus `C` update; the `Z` update; dual ascent on all
//! multipliers with `μ ← min(μ_max, ρμ)`; and finally the view-weight update.
//! Iteration stops once every equality-constraint gap (see
//! [`ConstraintGaps`]) is at most `eps`, or after `max_iter` iterations.
//!
//! A solve is deterministic: there is no randomness inside it.

mod diagnostics;
mod state;
pub mod updates;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::MultiViewDataset;
use crate::linalg;

pub use diagnostics::{objective_value, ConstraintGaps, Diagnostics, IterationRecord};
pub use state::{init_state, SolverState, ViewBlock};
pub use updates::{project_constraints, update_view_weights, Step, UpdateError};

/// Hyper-parameters and ADMM constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Weight of the graph-filter regularizer.
    pub alpha: f64,
    /// Weight of the consensus term.
    pub beta: f64,
    /// View-weight exponent; must differ from 1.
    pub eta: f64,
    pub mu0: f64,
    pub mu_max: f64,
    pub rho: f64,
    /// Stopping tolerance on the constraint gaps.
    pub eps: f64,
    pub max_iter: usize,
    /// Lower bound applied to each `Jⁱ` before the weight update.
    pub j_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
            eta: 0.5,
            mu0: 1e-6,
            mu_max: 1e30,
            rho: 1.1,
            eps: 1e-4,
            max_iter: 1000,
            j_floor: 1e-12,
        }
    }
}

/// Largest accepted `max_iter`.
pub const MAX_ITER_LIMIT: usize = 10_000;

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(SolverError::InvalidConfig(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("beta", self.beta)?;
        positive("mu0", self.mu0)?;
        positive("mu_max", self.mu_max)?;
        positive("eps", self.eps)?;
        positive("j_floor", self.j_floor)?;
        if !self.eta.is_finite() || self.eta == 1.0 {
            return bad(format!("eta must be finite and different from 1, got {}", self.eta));
        }
        if self.mu0 > self.mu_max {
            return bad(format!("mu0 ({}) exceeds mu_max ({})", self.mu0, self.mu_max));
        }
        if !(self.rho.is_finite() && self.rho >= 1.0) {
            return bad(format!("rho must be >= 1, got {}", self.rho));
        }
        if self.max_iter == 0 || self.max_iter > MAX_ITER_LIMIT {
            return bad(format!("max_iter must be in 1..={MAX_ITER_LIMIT}, got {}", self.max_iter));
        }
        Ok(())
    }
}

/// Which objective to optimize.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Smoothed features and the graph-filter regularizer.
    #[default]
    Full,
    /// Ablation: raw features, no smoothing constraint.
    NoSmoothing,
    /// Ablation: `α‖Cⁱ‖²` in place of the graph-filter regularizer.
    Frobenius,
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Self::Full),
            "no_smoothing" => Ok(Self::NoSmoothing),
            "frobenius" => Ok(Self::Frobenius),
            other => Err(format!("unknown variant {other:?}")),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Full => "full",
            Variant::NoSmoothing => "no_smoothing",
            Variant::Frobenius => "frobenius",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error("iteration {iteration}, view {view:?}: {source}")]
    Numerical {
        iteration: usize,
        view: Option<usize>,
        #[source]
        source: UpdateError,
    },
    #[error("non-finite iterate at iteration {iteration}")]
    NonFinite { iteration: usize, diagnostics: Box<Diagnostics> },
}

#[derive(Clone, Debug)]
pub struct SolverOutput {
    pub variant: Variant,
    /// Consensus coefficient matrix `C`.
    pub consensus: DMatrix<f64>,
    /// Per-view coefficient matrices `Cⁱ`.
    pub view_coefficients: Vec<DMatrix<f64>>,
    /// Per-view smoothed features `Yⁱ` (the raw features for the no-smoothing variant).
    pub smoothed: Vec<DMatrix<f64>>,
    pub weights: Vec<f64>,
    pub diagnostics: Diagnostics,
    pub converged: bool,
    pub iterations: usize,
}

/// Solves the full model.
pub fn solve(ds: &MultiViewDataset, cfg: &SolverConfig) -> Result<SolverOutput, SolverError> {
    solve_variant(ds, cfg, Variant::Full)
}

/// Solves the ablation without feature smoothing (`Yⁱ = Xⁱ`).
pub fn solve_ablation_no_smoothing(ds: &MultiViewDataset, cfg: &SolverConfig) -> Result<SolverOutput, SolverError> {
    solve_variant(ds, cfg, Variant::NoSmoothing)
}

/// Solves the ablation with a Frobenius-norm regularizer on each `Cⁱ`.
pub fn solve_ablation_frobenius(ds: &MultiViewDataset, cfg: &SolverConfig) -> Result<SolverOutput, SolverError> {
    solve_variant(ds, cfg, Variant::Frobenius)
}

pub fn solve_variant(ds: &MultiViewDataset, cfg: &SolverConfig, variant: Variant) -> Result<SolverOutput, SolverError> {
    solve_with_observer(ds, cfg, variant, |_, _| {})
}

/// Runs one full iteration in place. Returns the record for it.
pub fn iterate(
    state: &mut SolverState,
    ds: &MultiViewDataset,
    cfg: &SolverConfig,
    variant: Variant,
) -> Result<IterationRecord, SolverError> {
    let iteration = state.iter + 1;
    let numerical = |view: Option<usize>| move |source| SolverError::Numerical { iteration, view, source };
    let prev_c = state.c.clone();
    let prev_z = state.z.clone();
    let mu = state.mu;

    for i in 0..state.views.len() {
        let y = updates::update_view_representation(state, ds, variant, i).map_err(numerical(Some(i)))?;
        state.views[i].y = y;
        let c = updates::update_view_coefficients(state, ds, cfg, variant, i).map_err(numerical(Some(i)))?;
        state.views[i].c = c;
        let z = updates::update_view_auxiliary(state, cfg, variant, i).map_err(numerical(Some(i)))?;
        state.views[i].z = z;
    }
    state.c = updates::update_consensus_coefficients(state, ds, cfg, variant).map_err(numerical(None))?;
    state.z = updates::update_consensus_auxiliary(state);
    updates::update_multipliers(state, ds, cfg, variant);
    let disagreements = updates::view_disagreements(state);
    state.weights = update_view_weights(&disagreements, cfg.eta, cfg.j_floor);
    state.iter = iteration;

    Ok(IterationRecord {
        iter: iteration,
        residual_c: linalg::frobenius_sq(&(&state.c - prev_c)),
        residual_z: linalg::frobenius_sq(&(&state.z - prev_z)),
        gaps: ConstraintGaps::measure(state, ds, variant),
        objective: objective_value(state, ds, cfg, variant),
        disagreements,
        weights: state.weights.clone(),
        mu,
    })
}

/// Like [`solve_variant`], calling `observer` with the state and record
/// after every iteration.
pub fn solve_with_observer<F>(
    ds: &MultiViewDataset,
    cfg: &SolverConfig,
    variant: Variant,
    mut observer: F,
) -> Result<SolverOutput, SolverError>
where
    F: FnMut(&SolverState, &IterationRecord),
{
    cfg.validate()?;
    let mut state = init_state(ds, cfg);
    let mut diagnostics = Diagnostics::default();
    let mut converged = false;

    while state.iter < cfg.max_iter {
        let record = iterate(&mut state, ds, cfg, variant)?;
        let finite = state.all_finite()
            && record.objective.is_finite()
            && record.residual_c.is_finite()
            && record.residual_z.is_finite()
            && record.gaps.max().is_finite();
        observer(&state, &record);
        let gaps_ok = record.gaps.max() <= cfg.eps;
        diagnostics.records.push(record);
        if !finite {
            return Err(SolverError::NonFinite { iteration: state.iter, diagnostics: Box::new(diagnostics) });
        }
        if gaps_ok {
            converged = true;
            break;
        }
    }

    Ok(SolverOutput {
        variant,
        iterations: state.iter,
        converged,
        weights: state.weights,
        view_coefficients: state.views.iter().map(|b| b.c.clone()).collect(),
        smoothed: state.views.into_iter().map(|b| b.y).collect(),
        consensus: state.c,
        diagnostics,
    })
}

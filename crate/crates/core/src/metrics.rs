//! External clustering metrics: ACC, NMI, ARI and pairwise F-score.
//!
//! Conventions:
//!
//! * NMI is `I(P;T) / sqrt(H(P)·H(T))` with natural logarithms. Two
//!   single-cluster partitions score 1; otherwise a zero entropy gives 0.
//! * ARI is the pair-counting adjusted Rand index. When its denominator
//!   vanishes (both partitions all-singletons, or both a single cluster) it
//!   is 1.
//! * F-score is the harmonic mean of pairwise precision and recall over
//!   same-cluster point pairs, 0 when `P + R = 0`. Two partitions without
//!   any same-cluster pairs score 1.
//!
//! Labels are arbitrary integers; they are densified internally.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("label length mismatch: predicted={pred}, truth={truth}")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("labels are empty")]
    Empty,
    #[error("cost matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("cost matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

/// Optimal assignment of rows to columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// `columns[row]` is the column assigned to `row`.
    pub columns: Vec<usize>,
    pub cost: f64,
}

/// Minimum-cost perfect matching on a square cost matrix (row-major slices).
///
/// Among optimal assignments the lexicographically smallest `columns`
/// vector is returned (costs within `1e-9·(1 + |optimum|)` count as ties).
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Assignment, MetricError> {
    let k = cost.len();
    for (r, row) in cost.iter().enumerate() {
        if row.len() != k {
            return Err(MetricError::NotSquare { rows: k, cols: row.len() });
        }
        if let Some(c) = row.iter().position(|x| !x.is_finite()) {
            return Err(MetricError::NonFinite { row: r, col: c });
        }
    }
    if k == 0 {
        return Ok(Assignment { columns: Vec::new(), cost: 0.0 });
    }
    let optimum = min_cost(cost).1;
    let tol = 1e-9 * (1.0 + optimum.abs());

    // Fix rows in order, each to the smallest column that still admits an
    // optimal completion.
    let mut columns = Vec::with_capacity(k);
    let mut used = vec![false; k];
    let mut prefix = 0.0;
    for r in 0..k {
        let mut placed = false;
        for c in 0..k {
            if used[c] {
                continue;
            }
            let rest_rows: Vec<usize> = ((r + 1)..k).collect();
            let rest_cols: Vec<usize> = (0..k).filter(|&j| !used[j] && j != c).collect();
            let sub: Vec<Vec<f64>> =
                rest_rows.iter().map(|&i| rest_cols.iter().map(|&j| cost[i][j]).collect()).collect();
            let completion = if sub.is_empty() { 0.0 } else { min_cost(&sub).1 };
            if prefix + cost[r][c] + completion <= optimum + tol {
                columns.push(c);
                used[c] = true;
                prefix += cost[r][c];
                placed = true;
                break;
            }
        }
        debug_assert!(placed, "an optimal completion always exists");
        if !placed {
            // numerically impossible; fall back to the plain optimum
            let (cols, total) = min_cost(cost);
            return Ok(Assignment { columns: cols, cost: total });
        }
    }
    let total = columns.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
    Ok(Assignment { columns, cost: total })
}

/// Shortest-augmenting-path Hungarian algorithm with potentials, O(k³).
fn min_cost(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    // 1-based arrays; column 0 is a virtual source
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut columns = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            columns[p[j] - 1] = j - 1;
        }
    }
    let total = columns.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
    (columns, total)
}

/// Contingency counts between two labelings, with densified label ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Contingency {
    /// `table[p][t]` counts points with predicted cluster `p` and true class `t`.
    pub table: Vec<Vec<usize>>,
    pub pred_sizes: Vec<usize>,
    pub truth_sizes: Vec<usize>,
    pub n: usize,
}

fn densify(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    // re-number in ascending label order for stable output
    let ordered: BTreeMap<usize, usize> = ids.keys().enumerate().map(|(i, &l)| (l, i)).collect();
    (labels.iter().map(|l| ordered[l]).collect(), ordered.len())
}

impl Contingency {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self, MetricError> {
        if pred.len() != truth.len() {
            return Err(MetricError::LengthMismatch { pred: pred.len(), truth: truth.len() });
        }
        if pred.is_empty() {
            return Err(MetricError::Empty);
        }
        let (p, kp) = densify(pred);
        let (t, kt) = densify(truth);
        let mut table = vec![vec![0usize; kt]; kp];
        for (&a, &b) in p.iter().zip(&t) {
            table[a][b] += 1;
        }
        let pred_sizes = table.iter().map(|r| r.iter().sum()).collect();
        let truth_sizes = (0..kt).map(|j| table.iter().map(|r| r[j]).sum()).collect();
        Ok(Self { table, pred_sizes, truth_sizes, n: pred.len() })
    }
}

/// Best-bijection accuracy. The contingency table is zero-padded to square
/// when the cluster counts differ.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64, MetricError> {
    let ct = Contingency::new(pred, truth)?;
    let size = ct.pred_sizes.len().max(ct.truth_sizes.len());
    let cost: Vec<Vec<f64>> = (0..size)
        .map(|i| (0..size).map(|j| -(ct.table.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0) as f64)).collect())
        .collect();
    let matched = -hungarian(&cost)?.cost;
    Ok(matched / ct.n as f64)
}

fn entropy(sizes: &[usize], n: usize) -> f64 {
    let n = n as f64;
    -sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Normalized mutual information with geometric-mean normalization.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64, MetricError> {
    let ct = Contingency::new(pred, truth)?;
    let hp = entropy(&ct.pred_sizes, ct.n);
    let ht = entropy(&ct.truth_sizes, ct.n);
    if hp == 0.0 && ht == 0.0 {
        return Ok(1.0);
    }
    if hp == 0.0 || ht == 0.0 {
        return Ok(0.0);
    }
    let n = ct.n as f64;
    let mut mi = 0.0;
    for (i, row) in ct.table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (ct.pred_sizes[i] as f64 * ct.truth_sizes[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (hp * ht).sqrt()).clamp(0.0, 1.0))
}

fn pairs(m: usize) -> u64 {
    let m = m as u64;
    m * m.saturating_sub(1) / 2
}

/// Adjusted Rand index.
pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64, MetricError> {
    let ct = Contingency::new(pred, truth)?;
    let index: u64 = ct.table.iter().flatten().map(|&c| pairs(c)).sum();
    let a: u64 = ct.pred_sizes.iter().map(|&s| pairs(s)).sum();
    let b: u64 = ct.truth_sizes.iter().map(|&s| pairs(s)).sum();
    let total = pairs(ct.n) as f64;
    let (index, a, b) = (index as f64, a as f64, b as f64);
    let expected = if total > 0.0 { a * b / total } else { 0.0 };
    let max_index = (a + b) / 2.0;
    let denom = max_index - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

/// Pairwise F-score.
pub fn f_score(pred: &[usize], truth: &[usize]) -> Result<f64, MetricError> {
    let ct = Contingency::new(pred, truth)?;
    let agree: u64 = ct.table.iter().flatten().map(|&c| pairs(c)).sum();
    let pred_pairs: u64 = ct.pred_sizes.iter().map(|&s| pairs(s)).sum();
    let truth_pairs: u64 = ct.truth_sizes.iter().map(|&s| pairs(s)).sum();
    if pred_pairs == 0 && truth_pairs == 0 {
        return Ok(1.0);
    }
    let precision = if pred_pairs > 0 { agree as f64 / pred_pairs as f64 } else { 0.0 };
    let recall = if truth_pairs > 0 { agree as f64 / truth_pairs as f64 } else { 0.0 };
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub f_score: f64,
    pub n: usize,
    pub k_pred: usize,
    pub k_true: usize,
}

pub fn evaluate(pred: &[usize], truth: &[usize]) -> Result<EvaluationReport, MetricError> {
    let ct = Contingency::new(pred, truth)?;
    Ok(EvaluationReport {
        acc: clustering_accuracy(pred, truth)?,
        nmi: nmi(pred, truth)?,
        ari: ari(pred, truth)?,
        f_score: f_score(pred, truth)?,
        n: ct.n,
        k_pred: ct.pred_sizes.len(),
        k_true: ct.truth_sizes.len(),
    })
}

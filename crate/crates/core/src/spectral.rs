//! Affinity construction, normalized spectral embedding and k-means rounding.
//!
//! Clustering uses the symmetric normalized Laplacian of the affinity itself,
//! `L = I − D^{-1/2} W D^{-1/2}` with `Dᵢᵢ = Σⱼ Wᵢⱼ` and no self-loops
//! (an isolated vertex gets a zero row). The `k` eigenvectors of smallest
//! eigenvalue form an `n×k` embedding whose rows are scaled to unit length
//! (zero rows stay zero) before k-means.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exec::{self, Execution};
use crate::linalg;

/// Lloyd iterations stop when the inertia changes by less than this.
pub const KMEANS_TOL: f64 = 1e-10;
pub const KMEANS_MAX_ITER: usize = 300;
pub const DEFAULT_RESTARTS: usize = 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("affinity is not symmetric (max |W - Wᵀ| = {0:e})")]
    Asymmetric(f64),
    #[error("affinity has a negative or non-finite entry ({0})")]
    InvalidWeight(f64),
    #[error("cannot form {k} clusters from {n} points")]
    TooManyClusters { k: usize, n: usize },
    #[error("cluster count must be at least 1")]
    ZeroClusters,
    #[error("at least one k-means restart is required")]
    ZeroRestarts,
}

/// Symmetric nonnegative similarity matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinityMatrix(DMatrix<f64>);

impl AffinityMatrix {
    /// Wraps `w` after checking exact symmetry and nonnegativity.
    pub fn new(w: DMatrix<f64>) -> Result<Self, SpectralError> {
        if w.nrows() != w.ncols() {
            return Err(SpectralError::NotSquare { rows: w.nrows(), cols: w.ncols() });
        }
        let asym = linalg::asymmetry(&w);
        if asym > 0.0 {
            return Err(SpectralError::Asymmetric(asym));
        }
        if let Some(bad) = w.iter().copied().find(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(SpectralError::InvalidWeight(bad));
        }
        Ok(Self(w))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }
}

/// `W = (|C| + |Cᵀ|)/2`.
pub fn build_affinity(c: &DMatrix<f64>) -> Result<AffinityMatrix, SpectralError> {
    if c.nrows() != c.ncols() {
        return Err(SpectralError::NotSquare { rows: c.nrows(), cols: c.ncols() });
    }
    let n = c.nrows();
    let w = DMatrix::from_fn(n, n, |i, j| (c[(i, j)].abs() + c[(j, i)].abs()) / 2.0);
    AffinityMatrix::new(w)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub k: usize,
    /// Sum of squared distances from points to their centroids.
    pub inertia: f64,
    /// Number of label values in `0..k` that no point received.
    pub empty_clusters: usize,
}

/// `I − D^{-1/2} W D^{-1/2}`. An isolated vertex (zero degree) gets an all-zero
/// row, so the multiplicity of eigenvalue 0 equals the number of connected
/// components, isolated vertices included.
pub fn clustering_laplacian(w: &AffinityMatrix) -> DMatrix<f64> {
    let m = w.matrix();
    let n = m.nrows();
    let inv_sqrt: Vec<f64> = m
        .row_iter()
        .map(|r| {
            let d = r.sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let l = DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j && inv_sqrt[i] > 0.0 { 1.0 } else { 0.0 };
        delta - inv_sqrt[i] * m[(i, j)] * inv_sqrt[j]
    });
    linalg::symmetrize(&l)
}

/// Row-normalized `n×k` embedding from the `k` smallest eigenvectors.
pub fn spectral_embedding(w: &AffinityMatrix, k: usize) -> Result<DMatrix<f64>, SpectralError> {
    let n = w.order();
    check_k(k, n)?;
    let eig = SymmetricEigen::new(clustering_laplacian(w));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut emb = DMatrix::from_fn(n, k, |r, c| eig.eigenvectors[(r, order[c])]);
    for mut row in emb.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok(emb)
}

fn check_k(k: usize, n: usize) -> Result<(), SpectralError> {
    if k == 0 {
        return Err(SpectralError::ZeroClusters);
    }
    if k > n {
        return Err(SpectralError::TooManyClusters { k, n });
    }
    Ok(())
}

/// Normalized-cuts style spectral clustering with `restarts` k-means runs.
pub fn spectral_clustering(
    w: &AffinityMatrix,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterAssignment, SpectralError> {
    spectral_clustering_with(w, k, seed, restarts, Execution::default())
}

pub fn spectral_clustering_with(
    w: &AffinityMatrix,
    k: usize,
    seed: u64,
    restarts: usize,
    exec: Execution,
) -> Result<ClusterAssignment, SpectralError> {
    let n = w.order();
    check_k(k, n)?;
    if k == 1 {
        return Ok(ClusterAssignment { labels: vec![0; n], k, inertia: 0.0, empty_clusters: 0 });
    }
    let emb = spectral_embedding(w, k)?;
    kmeans_with(&emb, k, seed, restarts, exec)
}

/// k-means++ seeding plus Lloyd iterations, best of `restarts` by inertia.
///
/// Restart `r` draws from a ChaCha8 stream seeded with `seed` on stream `r`,
/// so results do not depend on scheduling.
pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64, restarts: usize) -> Result<ClusterAssignment, SpectralError> {
    kmeans_with(points, k, seed, restarts, Execution::default())
}

pub fn kmeans_with(
    points: &DMatrix<f64>,
    k: usize,
    seed: u64,
    restarts: usize,
    exec: Execution,
) -> Result<ClusterAssignment, SpectralError> {
    let n = points.nrows();
    check_k(k, n)?;
    if restarts == 0 {
        return Err(SpectralError::ZeroRestarts);
    }
    let runs = exec::map_indices(exec, restarts, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        lloyd(points, k, &mut rng)
    });
    // first minimum wins, so ties go to the lowest restart index
    let best = runs
        .into_iter()
        .reduce(|best, run| if run.inertia < best.inertia { run } else { best })
        .expect("restarts >= 1");
    Ok(best)
}

fn sq_dist(points: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, c: usize) -> f64 {
    points.row(i).iter().zip(centers.row(c).iter()).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn plus_plus(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = points.nrows();
    let mut centers = DMatrix::zeros(k, points.ncols());
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    centers.row_mut(0).copy_from(&points.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers, 0)).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    pick = Some(i);
                    if target < d {
                        break;
                    }
                    target -= d;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // all remaining points coincide with centers; take an unused one
            let unused: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            unused[rng.random_range(0..unused.len())]
        };
        chosen[pick] = true;
        centers.row_mut(c).copy_from(&points.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, i, &centers, c));
        }
    }
    centers
}

fn assign(points: &DMatrix<f64>, centers: &DMatrix<f64>, labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = (0, f64::INFINITY);
        for c in 0..centers.nrows() {
            let d = sq_dist(points, i, centers, c);
            if d < best.1 {
                best = (c, d);
            }
        }
        *label = best.0;
        inertia += best.1;
    }
    inertia
}

fn lloyd(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> ClusterAssignment {
    let n = points.nrows();
    let dim = points.ncols();
    let mut centers = plus_plus(points, k, rng);
    let mut labels = vec![0; n];
    let mut inertia = assign(points, &centers, &mut labels);
    for _ in 0..KMEANS_MAX_ITER {
        let mut sums = DMatrix::<f64>::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            let mut row = sums.row_mut(l);
            row += points.row(i);
        }
        for (c, &count) in counts.iter().enumerate() {
            // an empty cluster keeps its previous center
            if count > 0 {
                let mean = sums.row(c) / count as f64;
                centers.row_mut(c).copy_from(&mean);
            }
        }
        let next = assign(points, &centers, &mut labels);
        let delta = (inertia - next).abs();
        inertia = next;
        if delta < KMEANS_TOL {
            break;
        }
    }
    let mut used = vec![false; k];
    for &l in &labels {
        used[l] = true;
    }
    ClusterAssignment { labels, k, inertia, empty_clusters: used.iter().filter(|u| !**u).count() }
}

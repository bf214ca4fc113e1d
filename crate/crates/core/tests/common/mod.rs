//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use mvscgf::data::MultiViewDataset;
use mvscgf::solver::{SolverConfig, SolverState, Variant, ViewBlock};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fro2(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum()
}

fn dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn row_resid(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.nrows(), m.row_iter().map(|r| r.sum() - 1.0))
}

/// Augmented Lagrangian written term by term from the model definition.
pub fn lagrangian(s: &SolverState, ds: &MultiViewDataset, cfg: &SolverConfig, variant: Variant) -> f64 {
    let mu = s.mu;
    let mut total = 0.0;
    for (i, b) in s.views.iter().enumerate() {
        let x = ds.view(i);
        let y = if variant == Variant::NoSmoothing { x } else { &b.y };
        total += fro2(&(y - &b.c * y));
        total += match variant {
            Variant::Frobenius => cfg.alpha * fro2(&b.c),
            _ => cfg.alpha * fro2(&(&b.c - &s.c * &b.z)),
        };
        total += cfg.beta * s.weights[i].powf(cfg.eta) * fro2(&(&s.c - &b.c));
        if variant != Variant::NoSmoothing {
            let r = &b.y * 4.0 - x * 3.0 - &s.c * x;
            total += dot(&b.smooth_mult, &r) + mu / 2.0 * fro2(&r);
        }
        let d = &b.c - &b.z;
        total += dot(&b.coupling_mult, &d) + mu / 2.0 * fro2(&d);
        let rr = row_resid(&b.c);
        total += b.row_mult.dot(&rr) + mu / 2.0 * rr.norm_squared();
    }
    let d = &s.c - &s.z;
    total += dot(&s.consensus_mult, &d) + mu / 2.0 * fro2(&d);
    let rr = row_resid(&s.c);
    total += s.consensus_row_mult.dot(&rr) + mu / 2.0 * rr.norm_squared();
    total
}

/// Central finite-difference gradient of `f` with respect to the matrix
/// selected by `slot`.
pub fn fd_gradient<S, F>(state: &SolverState, slot: S, f: F) -> DMatrix<f64>
where
    S: Fn(&mut SolverState) -> &mut DMatrix<f64>,
    F: Fn(&SolverState) -> f64,
{
    let mut work = state.clone();
    let (r, c) = {
        let m = slot(&mut work);
        (m.nrows(), m.ncols())
    };
    let mut grad = DMatrix::zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            let x0 = slot(&mut work)[(i, j)];
            let h = 1e-5 * (1.0 + x0.abs());
            slot(&mut work)[(i, j)] = x0 + h;
            let fp = f(&work);
            slot(&mut work)[(i, j)] = x0 - h;
            let fm = f(&work);
            slot(&mut work)[(i, j)] = x0;
            grad[(i, j)] = (fp - fm) / (2.0 * h);
        }
    }
    grad
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

fn gauss(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| scale * (rng.random::<f64>() * 2.0 - 1.0))
}

/// A random dataset and fully random iterate, including multipliers.
pub fn random_problem(seed: u64, n: usize, dims: &[usize]) -> (MultiViewDataset, SolverState, SolverConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let views: Vec<DMatrix<f64>> = dims.iter().map(|&d| gauss(&mut rng, n, d, 1.0)).collect();
    let ds = MultiViewDataset::new("random", views, None, None).unwrap();
    let blocks = dims
        .iter()
        .map(|&d| ViewBlock {
            y: gauss(&mut rng, n, d, 1.0),
            c: gauss(&mut rng, n, n, 0.5),
            z: gauss(&mut rng, n, n, 0.5),
            smooth_mult: gauss(&mut rng, n, d, 0.5),
            coupling_mult: gauss(&mut rng, n, n, 0.5),
            row_mult: DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5),
        })
        .collect();
    let raw: Vec<f64> = dims.iter().map(|_| rng.random::<f64>() + 0.1).collect();
    let sum: f64 = raw.iter().sum();
    let state = SolverState {
        views: blocks,
        c: gauss(&mut rng, n, n, 0.5),
        z: gauss(&mut rng, n, n, 0.5),
        consensus_mult: gauss(&mut rng, n, n, 0.5),
        consensus_row_mult: DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5),
        weights: raw.iter().map(|w| w / sum).collect(),
        mu: 10f64.powf(rng.random_range(-1.0..1.0)),
        iter: 0,
    };
    let cfg = SolverConfig {
        alpha: 10f64.powf(rng.random_range(-1.0..0.5)),
        beta: 10f64.powf(rng.random_range(-1.0..0.5)),
        eta: [0.5, 2.0, -1.0][rng.random_range(0..3)],
        ..SolverConfig::default()
    };
    (ds, state, cfg)
}

/// Every labeling of `n` points into at most `k` clusters with labels in
/// canonical (restricted growth) form.
pub fn partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, n: usize, k: usize, used: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for l in 0..(used + 1).min(k) {
            cur.push(l);
            rec(cur, n, k, used.max(l + 1), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), n, k, 0, &mut out);
    out
}

pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out
}

fn n_labels(l: &[usize]) -> usize {
    l.iter().max().map_or(0, |m| m + 1)
}

pub fn brute_acc(pred: &[usize], truth: &[usize]) -> f64 {
    let m = n_labels(pred).max(n_labels(truth));
    let best =
        permutations(m).iter().map(|p| pred.iter().zip(truth).filter(|(a, b)| p[**a] == **b).count()).max().unwrap();
    best as f64 / pred.len() as f64
}

pub fn brute_nmi(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len() as f64;
    let (kp, kt) = (n_labels(pred), n_labels(truth));
    let p = |lab: &[usize], c: usize| lab.iter().filter(|&&x| x == c).count() as f64 / n;
    let h = |lab: &[usize], k: usize| -(0..k).map(|c| p(lab, c)).filter(|&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>();
    let (hp, ht) = (h(pred, kp), h(truth, kt));
    if hp == 0.0 && ht == 0.0 {
        return 1.0;
    }
    if hp == 0.0 || ht == 0.0 {
        return 0.0;
    }
    let mut mi = 0.0;
    for a in 0..kp {
        for b in 0..kt {
            let joint = pred.iter().zip(truth).filter(|(x, y)| **x == a && **y == b).count() as f64 / n;
            if joint > 0.0 {
                mi += joint * (joint / (p(pred, a) * p(truth, b))).ln();
            }
        }
    }
    mi / (hp * ht).sqrt()
}

/// Counts of point pairs: (same in both, same in pred only, same in truth only, split in both).
pub fn pair_counts(pred: &[usize], truth: &[usize]) -> (f64, f64, f64, f64) {
    let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..pred.len() {
        for j in (i + 1)..pred.len() {
            match (pred[i] == pred[j], truth[i] == truth[j]) {
                (true, true) => a += 1.0,
                (true, false) => b += 1.0,
                (false, true) => c += 1.0,
                (false, false) => d += 1.0,
            }
        }
    }
    (a, b, c, d)
}

pub fn brute_ari(pred: &[usize], truth: &[usize]) -> f64 {
    let (a, b, c, d) = pair_counts(pred, truth);
    let denom = (a + b) * (b + d) + (a + c) * (c + d);
    if denom == 0.0 {
        return 1.0;
    }
    2.0 * (a * d - b * c) / denom
}

pub fn brute_f(pred: &[usize], truth: &[usize]) -> f64 {
    let (a, b, c, _) = pair_counts(pred, truth);
    if a + b == 0.0 && a + c == 0.0 {
        return 1.0;
    }
    let precision = if a + b > 0.0 { a / (a + b) } else { 0.0 };
    let recall = if a + c > 0.0 { a / (a + c) } else { 0.0 };
    if precision + recall == 0.0 {
        return 0.0;
    }
    2.0 * precision * recall / (precision + recall)
}

/// Minimum assignment cost by enumerating every permutation.
pub fn brute_assignment(cost: &[Vec<f64>]) -> f64 {
    permutations(cost.len())
        .iter()
        .map(|p| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Block-diagonal affinity: every pair within a component gets a weight in
/// `[0.5, 1.5)`, no edges across components.
pub fn block_affinity(sizes: &[usize], seed: u64) -> (DMatrix<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &s)| std::iter::repeat_n(c, s)).collect();
    let n = labels.len();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if labels[i] == labels[j] {
                let v = 0.5 + rng.random::<f64>();
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    (w, labels)
}

/// The synthetic benchmark used for end-to-end checks.
pub fn benchmark(seed: u64) -> MultiViewDataset {
    use mvscgf::data::{generate_synthetic, SyntheticSpec};
    generate_synthetic(&SyntheticSpec { seed, ..SyntheticSpec::default() }).unwrap()
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        (v[m / 2 - 1] + v[m / 2]) / 2.0
    }
}

/// Worst `‖∇‖_∞ / (1 + |L|)` over every closed-form block update, applied in
/// solver order, with each gradient taken at the freshly updated block.
/// Auxiliary blocks are checked before projection.
pub fn stationarity_violation(ds: &MultiViewDataset, state: &SolverState, cfg: &SolverConfig, variant: Variant) -> f64 {
    use mvscgf::solver::updates;
    let lag = |s: &SolverState| lagrangian(s, ds, cfg, variant);
    let mut st = state.clone();
    let mut worst = 0.0_f64;
    let mut record = |st: &SolverState, g: DMatrix<f64>| {
        let v = max_abs(&g) / (1.0 + lag(st).abs());
        worst = worst.max(v);
    };
    for i in 0..st.views.len() {
        if variant != Variant::NoSmoothing {
            st.views[i].y = updates::update_view_representation(&st, ds, variant, i).unwrap();
            record(&st, fd_gradient(&st, |s| &mut s.views[i].y, lag));
        }
        st.views[i].c = updates::update_view_coefficients(&st, ds, cfg, variant, i).unwrap();
        record(&st, fd_gradient(&st, |s| &mut s.views[i].c, lag));
        let z = updates::view_auxiliary_unprojected(&st, cfg, variant, i).unwrap();
        let mut pre = st.clone();
        pre.views[i].z = z;
        record(&pre, fd_gradient(&pre, |s| &mut s.views[i].z, lag));
        st.views[i].z = updates::update_view_auxiliary(&st, cfg, variant, i).unwrap();
    }
    st.c = updates::update_consensus_coefficients(&st, ds, cfg, variant).unwrap();
    record(&st, fd_gradient(&st, |s| &mut s.c, lag));
    let mut pre = st.clone();
    pre.z = updates::consensus_auxiliary_unprojected(&st);
    record(&pre, fd_gradient(&pre, |s| &mut s.z, lag));
    worst
}

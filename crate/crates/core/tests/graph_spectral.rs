mod common;

use common::*;
use mvscgf::graph::{consensus_filter, filter_spectrum, normalized_laplacian, rayleigh_quotient, smooth_features};
use mvscgf::metrics::clustering_accuracy;
use mvscgf::spectral::{build_affinity, kmeans, kmeans_with, spectral_clustering, AffinityMatrix};
use mvscgf::Execution;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;

/// Convex combination of symmetrized cyclic shifts: symmetric, nonnegative,
/// zero diagonal and row-stochastic.
fn doubly_stochastic(n: usize, mix: &[f64]) -> DMatrix<f64> {
    let total: f64 = mix.iter().sum();
    let mut c = DMatrix::zeros(n, n);
    for (s, &w) in mix.iter().enumerate() {
        let shift = s % (n - 1) + 1;
        for i in 0..n {
            c[(i, (i + shift) % n)] += 0.5 * w / total;
            c[((i + shift) % n, i)] += 0.5 * w / total;
        }
    }
    c
}

fn stochastic_case() -> impl Strategy<Value = (DMatrix<f64>, DVector<f64>)> {
    (3usize..10).prop_flat_map(|n| {
        (proptest::collection::vec(0.01f64..1.0, 1..4), proptest::collection::vec(-3.0f64..3.0, n))
            .prop_map(move |(mix, y)| (doubly_stochastic(n, &mix), DVector::from_vec(y)))
    })
}

fn weights() -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..9).prop_flat_map(|n| {
        proptest::collection::vec(0.0f64..2.0, n * n).prop_map(move |v| {
            let m = DMatrix::from_vec(n, n, v);
            (&m + m.transpose()) * 0.5
        })
    })
}

proptest! {
    #[test]
    fn laplacian_spectrum_lies_in_zero_two(w in weights()) {
        let l = normalized_laplacian(&w).unwrap();
        let eig = SymmetricEigen::new(l).eigenvalues;
        prop_assert!(eig.iter().all(|&x| (-1e-12..=2.0 + 1e-12).contains(&x)), "{eig}");
    }

    #[test]
    fn consensus_filter_is_low_pass((c, y) in stochastic_case()) {
        let n = c.nrows();
        let l = normalized_laplacian(&c).unwrap();
        let expected = (DMatrix::<f64>::identity(n, n) - &c) * 0.5;
        prop_assert!(max_abs(&(&l - expected)) < 1e-12);
        let g = consensus_filter(&c).unwrap();
        let spec = filter_spectrum(g.matrix()).unwrap();
        prop_assert!(spec.eigenvalues.iter().all(|&x| (0.5 - 1e-12..=1.0 + 1e-12).contains(&x)));
        prop_assert!(max_abs(&(spec.reconstruct() - g.matrix())) < 1e-12);
        let ym = DMatrix::from_column_slice(n, 1, y.as_slice());
        let smoothed = smooth_features(&g, &ym).unwrap().column(0).into_owned();
        prop_assert!(rayleigh_quotient(&l, &smoothed) <= rayleigh_quotient(&l, &y) + 1e-12);
    }

    #[test]
    fn affinity_is_symmetric_and_nonnegative(v in proptest::collection::vec(-2.0f64..2.0, 16)) {
        let w = build_affinity(&DMatrix::from_vec(4, 4, v)).unwrap();
        prop_assert_eq!(w.matrix(), &w.matrix().transpose());
        prop_assert!(w.matrix().iter().all(|x| *x >= 0.0));
    }
}

fn brute_two_means(points: &DMatrix<f64>) -> f64 {
    let n = points.nrows();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) - 1 {
        let mut total = 0.0;
        for side in [true, false] {
            let members: Vec<usize> = (0..n).filter(|&i| ((mask >> i) & 1 == 1) == side).collect();
            let mut centroid = nalgebra::RowDVector::<f64>::zeros(points.ncols());
            for &i in &members {
                centroid += points.row(i);
            }
            centroid /= members.len() as f64;
            total += members.iter().map(|&i| (points.row(i) - &centroid).norm_squared()).sum::<f64>();
        }
        best = best.min(total);
    }
    best
}

#[test]
fn kmeans_matches_exhaustive_two_partition() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for case in 0..15 {
        let n = 4 + case % 5;
        let points = DMatrix::from_fn(n, 2, |i, _| if i % 2 == 0 { 5.0 } else { -5.0 } + rng.random::<f64>());
        let best = brute_two_means(&points);
        let got = kmeans(&points, 2, case as u64, 20).unwrap();
        assert!((got.inertia - best).abs() <= 1e-9 * (1.0 + best), "{} vs {best}", got.inertia);
        let random = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>());
        let got = kmeans(&random, 2, case as u64, 20).unwrap();
        assert!(got.inertia >= brute_two_means(&random) - 1e-12);
    }
}

#[test]
fn kmeans_is_independent_of_execution_mode() {
    let (w, _) = block_affinity(&[6, 7, 5], 3);
    let w = AffinityMatrix::new(w).unwrap();
    let emb = mvscgf::spectral::spectral_embedding(&w, 3).unwrap();
    let a = kmeans_with(&emb, 3, 9, 16, Execution::Sequential).unwrap();
    let b = kmeans_with(&emb, 3, 9, 16, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn block_diagonal_components_are_recovered() {
    for (case, sizes) in
        [vec![5, 5], vec![3, 12], vec![15, 15], vec![4, 6, 8], vec![10, 10, 10], vec![2, 2, 2]].into_iter().enumerate()
    {
        let (w, truth) = block_affinity(&sizes, case as u64);
        let w = AffinityMatrix::new(w).unwrap();
        for seed in 0..3 {
            let pred = spectral_clustering(&w, sizes.len(), seed, 10).unwrap();
            assert_eq!(clustering_accuracy(&pred.labels, &truth).unwrap(), 1.0, "{sizes:?} seed {seed}");
        }
    }
}

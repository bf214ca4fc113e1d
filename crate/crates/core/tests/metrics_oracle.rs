mod common;

use common::*;
use mvscgf::metrics::{ari, clustering_accuracy, evaluate, f_score, hungarian, nmi};
use proptest::prelude::*;

#[test]
fn metrics_match_brute_force_on_all_small_partitions() {
    for n in 1..=5 {
        let parts = partitions(n, 3);
        for p in &parts {
            for t in &parts {
                let r = evaluate(p, t).unwrap();
                assert!((r.acc - brute_acc(p, t)).abs() <= 1e-12, "acc {p:?} {t:?}");
                assert!((r.nmi - brute_nmi(p, t)).abs() <= 1e-12, "nmi {p:?} {t:?}");
                assert!((r.ari - brute_ari(p, t)).abs() <= 1e-12, "ari {p:?} {t:?}");
                assert!((r.f_score - brute_f(p, t)).abs() <= 1e-12, "f {p:?} {t:?}");
            }
        }
    }
}

#[test]
fn hungarian_matches_permutation_search() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for size in 1..=6 {
        for _ in 0..20 {
            let cost: Vec<Vec<f64>> =
                (0..size).map(|_| (0..size).map(|_| rng.random_range(-3i32..10) as f64).collect()).collect();
            let a = hungarian(&cost).unwrap();
            assert_eq!(a.cost, brute_assignment(&cost));
            let sum: f64 = a.columns.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
            assert_eq!(sum, a.cost);
        }
    }
}

#[test]
fn hand_checked_values() {
    let truth = [0, 0, 0, 1, 1, 1];
    let pred = [0, 0, 1, 1, 2, 2];
    assert!((clustering_accuracy(&pred, &truth).unwrap() - 4.0 / 6.0).abs() < 1e-15);
    // a = 2 agreeing pairs, 3 predicted pairs, 6 true pairs
    let p = 2.0 / 3.0;
    let r = 2.0 / 6.0;
    assert!((f_score(&pred, &truth).unwrap() - 2.0 * p * r / (p + r)).abs() < 1e-15);
    assert_eq!(nmi(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
    assert!((ari(&[0, 1, 0, 1], &[0, 0, 1, 1]).unwrap() + 0.5).abs() < 1e-15);
}

fn labels(n: usize, k: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::vec(0..k, n)
}

fn pair() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (2usize..30, 1usize..5, 1usize..5).prop_flat_map(|(n, kp, kt)| (labels(n, kp), labels(n, kt)))
}

proptest! {
    #[test]
    fn relabeling_predictions_changes_nothing((pred, truth) in pair(), shift in 0usize..5) {
        let k = pred.iter().max().unwrap() + 1;
        let renamed: Vec<usize> = pred.iter().map(|&l| (l + shift) % k + 7).collect();
        let a = evaluate(&pred, &truth).unwrap();
        let b = evaluate(&renamed, &truth).unwrap();
        prop_assert!((a.acc - b.acc).abs() < 1e-12);
        prop_assert!((a.nmi - b.nmi).abs() < 1e-12);
        prop_assert!((a.ari - b.ari).abs() < 1e-12);
        prop_assert!((a.f_score - b.f_score).abs() < 1e-12);
    }

    #[test]
    fn ranges_and_symmetry((pred, truth) in pair()) {
        let r = evaluate(&pred, &truth).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.acc));
        prop_assert!((0.0..=1.0).contains(&r.nmi));
        prop_assert!((0.0..=1.0).contains(&r.f_score));
        prop_assert!(r.ari <= 1.0 + 1e-12);
        prop_assert!((nmi(&pred, &truth).unwrap() - nmi(&truth, &pred).unwrap()).abs() < 1e-12);
        prop_assert!((ari(&pred, &truth).unwrap() - ari(&truth, &pred).unwrap()).abs() < 1e-12);
        prop_assert!((f_score(&pred, &truth).unwrap() - f_score(&truth, &pred).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn identical_labelings_score_one(truth in (2usize..30, 1usize..5).prop_flat_map(|(n, k)| labels(n, k))) {
        let r = evaluate(&truth, &truth).unwrap();
        prop_assert_eq!((r.acc, r.ari, r.f_score), (1.0, 1.0, 1.0));
        prop_assert!((r.nmi - 1.0).abs() < 1e-12);
    }
}

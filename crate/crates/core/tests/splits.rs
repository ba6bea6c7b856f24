use activesplit::split::{
    bootstrap_split, kfold_splits, quantile_bootstrap_indices, quantile_bootstrap_split, SplitKind,
    SplitPlan,
};
use activesplit::surrogate::{self, SurrogateParams};
use proptest::prelude::*;

#[test]
fn kfold_examples() {
    let splits = kfold_splits(10, 5, 7).unwrap();
    assert_eq!(splits.len(), 5);
    for s in &splits {
        assert_eq!(s.test.len(), 2);
        assert_eq!(s.train.len(), 8);
    }
    assert_eq!(splits, kfold_splits(10, 5, 7).unwrap());
    assert!(kfold_splits(10, 10, 0)
        .unwrap()
        .iter()
        .all(|s| s.test.len() == 1));
    assert!(kfold_splits(10, 1, 0).is_err());
    assert!(kfold_splits(10, 11, 0).is_err());
}

#[test]
fn bootstrap_out_of_bag_fraction() {
    let n = 1000;
    let mean: f64 = (0..400u64)
        .map(|seed| bootstrap_split(n, seed).unwrap().test.len() as f64 / n as f64)
        .sum::<f64>()
        / 400.0;
    let limit = (1.0 - 1.0 / n as f64).powi(n as i32);
    assert!((0.33..=0.41).contains(&mean), "{mean}");
    assert!((mean - limit).abs() < 0.04, "{mean} vs {limit}");
}

#[test]
fn quantile_split_on_a2a_sized_data() {
    let e = surrogate::panel_entry("A2a").unwrap();
    let d =
        surrogate::generate(e.name, e.chembl_id, e.size, &SurrogateParams::default(), 0).unwrap();
    let s = quantile_bootstrap_split(&d, 0.4, 11).unwrap();
    assert_eq!(s.train.len(), 81);
    assert_eq!(s.test, (81..203).collect::<Vec<_>>());
    let acts = d.activities();
    let max_train = s.train.iter().map(|&i| acts[i]).fold(f64::MIN, f64::max);
    let min_test = s.test.iter().map(|&i| acts[i]).fold(f64::MAX, f64::min);
    assert!(min_test >= max_train);

    let s = quantile_bootstrap_indices(100, 0.9, 3).unwrap();
    assert_eq!(s.train.len(), 90);
    assert!(s.train.iter().all(|&i| i < 90));
}

#[test]
fn plan_validation() {
    assert!(SplitKind::QuantileBootstrap { q: 0.02 }
        .validate(203)
        .is_err());
    assert!(SplitKind::QuantileBootstrap { q: 0.99 }
        .validate(203)
        .is_err());
    assert!(SplitKind::QuantileBootstrap { q: 0.98 }
        .validate(203)
        .is_ok());
    assert!(SplitKind::QuantileBootstrap { q: 1.0 }
        .validate(203)
        .is_err());
    assert!(SplitKind::Bootstrap.validate(9).is_err());
    assert!(SplitKind::Kfold { k: 5 }.validate(10).is_ok());
}

#[test]
fn plans_are_pure_in_seed() {
    let d = surrogate::generate("t", "T", 60, &SurrogateParams::default(), 1).unwrap();
    for kind in [
        SplitKind::Bootstrap,
        SplitKind::Kfold { k: 5 },
        SplitKind::QuantileBootstrap { q: 0.6 },
    ] {
        let a = SplitPlan { kind, seed: 9 }.generate(&d, 4).unwrap();
        let b = SplitPlan { kind, seed: 9 }.generate(&d, 4).unwrap();
        let c = SplitPlan { kind, seed: 10 }.generate(&d, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}

proptest! {
    #[test]
    fn kfold_partitions(n in 2usize..200, k in 2usize..12, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let splits = kfold_splits(n, k, seed).unwrap();
        let mut seen = vec![0usize; n];
        for s in &splits {
            for &i in &s.test { seen[i] += 1; }
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        let sizes: Vec<usize> = splits.iter().map(|s| s.test.len()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn bootstrap_shape(n in 10usize..500, seed in any::<u64>()) {
        let s = bootstrap_split(n, seed).unwrap();
        prop_assert_eq!(s.train.len(), n);
        prop_assert!(!s.test.is_empty());
        prop_assert!(s.test.iter().all(|i| s.train.binary_search(i).is_err()));
        prop_assert!(s.train.iter().all(|&i| i < n));
    }

    #[test]
    fn quantile_test_is_fixed(n in 20usize..400, q in 0.3f64..0.9, a in any::<u64>(), b in any::<u64>()) {
        let nq = (n as f64 * q).floor() as usize;
        prop_assume!(nq >= 5 && n - nq >= 5);
        let x = quantile_bootstrap_indices(n, q, a).unwrap();
        let y = quantile_bootstrap_indices(n, q, b).unwrap();
        prop_assert_eq!(&x.test, &y.test);
        prop_assert_eq!(x.test, (nq..n).collect::<Vec<_>>());
        prop_assert!(x.train.iter().all(|&i| i < nq));
        prop_assert_eq!(x.train.len(), nq);
    }
}

//! Train/test index generators.
//!
//! Indices refer to positions in an activity-sorted [`Dataset`], so index
//! order is activity order. All generators are pure functions of their
//! arguments.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng;

/// Attempts at drawing a bootstrap sample with a nonempty out-of-bag set.
pub const MAX_BOOTSTRAP_ATTEMPTS: u64 = 100;

/// Minimum size of each side of a quantile split.
pub const MIN_QUANTILE_SIDE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitKind {
    /// K-fold cross-validation over a seeded random permutation.
    Kfold { k: usize },
    /// Size-N bootstrap; the out-of-bag molecules form the test set.
    Bootstrap,
    /// Bootstrap of the ⌊N·q⌋ least active molecules; the rest is the test set.
    QuantileBootstrap { q: f64 },
}

impl SplitKind {
    /// Short label used in result files, e.g. `kfold5`, `bootstrap`, `qboot0.4`.
    pub fn label(&self) -> String {
        match self {
            SplitKind::Kfold { k } => format!("kfold{k}"),
            SplitKind::Bootstrap => "bootstrap".to_string(),
            SplitKind::QuantileBootstrap { q } => format!("qboot{q}"),
        }
    }

    /// Inverse of [`SplitKind::label`].
    pub fn from_label(label: &str) -> Option<Self> {
        if label == "bootstrap" {
            return Some(SplitKind::Bootstrap);
        }
        if let Some(k) = label.strip_prefix("kfold") {
            return k.parse().ok().map(|k| SplitKind::Kfold { k });
        }
        if let Some(q) = label.strip_prefix("qboot") {
            return q.parse().ok().map(|q| SplitKind::QuantileBootstrap { q });
        }
        None
    }

    /// Fraction of the activity range available for training; random
    /// partitioning counts as 1.
    pub fn training_fraction(&self) -> f64 {
        match self {
            SplitKind::QuantileBootstrap { q } => *q,
            _ => 1.0,
        }
    }

    /// Checks the plan against a dataset of size `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            SplitKind::Kfold { k } => {
                if k < 2 || k > n {
                    return Err(Error::domain(format!(
                        "k-fold needs 2 <= k <= N, got k={k}, N={n}"
                    )));
                }
            }
            SplitKind::Bootstrap => {
                if n < crate::data::MIN_DATASET_SIZE {
                    return Err(Error::domain(format!("bootstrap needs N >= 10, got {n}")));
                }
            }
            SplitKind::QuantileBootstrap { q } => {
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::domain(format!("q must lie in (0, 1), got {q}")));
                }
                let nq = quantile_train_size(n, q);
                if nq < MIN_QUANTILE_SIDE || n - nq < MIN_QUANTILE_SIDE {
                    return Err(Error::domain(format!(
                        "quantile split q={q} on N={n} leaves {nq} training and {} test molecules; \
                         both need at least {MIN_QUANTILE_SIDE}",
                        n - nq
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of train/test draws per iteration budget: folds for K-fold,
    /// otherwise the iteration count.
    pub fn draws(&self, iterations: usize) -> usize {
        match self {
            SplitKind::Kfold { k } => *k,
            _ => iterations,
        }
    }
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A split scheme together with its seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    #[serde(flatten)]
    pub kind: SplitKind,
    pub seed: u64,
}

impl SplitPlan {
    /// All splits of the plan for a dataset: K folds, or one draw per iteration.
    /// Iteration `a` of a bootstrap plan uses the sub-seed derived from
    /// (seed, dataset name, a).
    pub fn generate(&self, dataset: &Dataset, iterations: usize) -> Result<Vec<TrainTestSplit>> {
        let n = dataset.len();
        self.kind.validate(n)?;
        match self.kind {
            SplitKind::Kfold { k } => {
                kfold_splits(n, k, rng::derive_seed(self.seed, dataset.name(), 0))
            }
            SplitKind::Bootstrap => (0..iterations)
                .map(|a| bootstrap_split(n, rng::derive_seed(self.seed, dataset.name(), a as u64)))
                .collect(),
            SplitKind::QuantileBootstrap { q } => (0..iterations)
                .map(|a| {
                    quantile_bootstrap_split(
                        dataset,
                        q,
                        rng::derive_seed(self.seed, dataset.name(), a as u64),
                    )
                })
                .collect(),
        }
    }
}

/// Training multiset and test set, as indices into a sorted dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainTestSplit {
    /// May contain repeats.
    pub train: Vec<usize>,
    /// Strictly increasing.
    pub test: Vec<usize>,
}

impl TrainTestSplit {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("index vectors always serialize")
    }

    /// Distinct training indices, ascending.
    pub fn distinct_train(&self) -> Vec<usize> {
        let mut v = self.train.clone();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// `⌊n·q⌋`.
pub fn quantile_train_size(n: usize, q: f64) -> usize {
    (n as f64 * q).floor() as usize
}

pub fn kfold_splits(n: usize, k: usize, seed: u64) -> Result<Vec<TrainTestSplit>> {
    if k < 2 || k > n {
        return Err(Error::domain(format!(
            "k-fold needs 2 <= k <= n, got k={k}, n={n}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    rng::shuffle(&mut rng::rng_from_seed(seed), &mut perm);

    let base = n / k;
    let extra = n % k;
    let mut fold_of = vec![0usize; n];
    let mut start = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &i in &perm[start..start + size] {
            fold_of[i] = fold;
        }
        start += size;
    }
    Ok((0..k)
        .map(|fold| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold_of[i] == fold);
            TrainTestSplit { train, test }
        })
        .collect())
}

pub fn bootstrap_split(n: usize, seed: u64) -> Result<TrainTestSplit> {
    if n < crate::data::MIN_DATASET_SIZE {
        return Err(Error::domain(format!("bootstrap needs n >= 10, got {n}")));
    }
    for attempt in 0..MAX_BOOTSTRAP_ATTEMPTS {
        let sub_seed = if attempt == 0 {
            seed
        } else {
            rng::combine(seed, attempt)
        };
        let mut r = rng::rng_from_seed(sub_seed);
        let mut train: Vec<usize> = (0..n).map(|_| rng::index(&mut r, n)).collect();
        let mut hit = vec![false; n];
        for &i in &train {
            hit[i] = true;
        }
        let test: Vec<usize> = (0..n).filter(|&i| !hit[i]).collect();
        if !test.is_empty() {
            train.sort_unstable();
            return Ok(TrainTestSplit { train, test });
        }
    }
    Err(Error::domain(format!(
        "bootstrap of size {n} covered every index in {MAX_BOOTSTRAP_ATTEMPTS} attempts"
    )))
}

pub fn quantile_bootstrap_split(dataset: &Dataset, q: f64, seed: u64) -> Result<TrainTestSplit> {
    quantile_bootstrap_indices(dataset.len(), q, seed)
}

/// [`quantile_bootstrap_split`] on bare index space `0..n`, which must be
/// activity ordered.
pub fn quantile_bootstrap_indices(n: usize, q: f64, seed: u64) -> Result<TrainTestSplit> {
    SplitKind::QuantileBootstrap { q }.validate(n)?;
    let nq = quantile_train_size(n, q);
    let mut r = rng::rng_from_seed(seed);
    let mut train: Vec<usize> = (0..nq).map(|_| rng::index(&mut r, nq)).collect();
    train.sort_unstable();
    Ok(TrainTestSplit {
        train,
        test: (nq..n).collect(),
    })
}

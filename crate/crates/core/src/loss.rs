//! Out-of-sample losses: mean squared error and the active-rank losses.
//!
//! Ranks run from 0 (highest prediction) to `N_test - 1`. The actives are
//! the `A = max(1, ⌊(1-γ)·N_test⌋)` test molecules with the largest true
//! activity. `L_min` scores the best-ranked active and `L_sum` all of them;
//! both are normalized to `[0, 1]`.
//!
//! Tied predictions are resolved by averaging over every ordering of the
//! tie group. For `L_sum` this is the same as using midranks. For `L_min`
//! it gives the expected minimum rank, which differs from the minimum
//! midrank whenever a tie group holds more than one active.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Predicted and true activities for one test set.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBatch {
    predicted: Vec<f64>,
    truth: Vec<f64>,
}

impl PredictionBatch {
    pub fn new(predicted: Vec<f64>, truth: Vec<f64>) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::domain(format!(
                "{} predictions for {} true values",
                predicted.len(),
                truth.len()
            )));
        }
        if predicted.len() < 2 {
            return Err(Error::domain("a prediction batch needs at least 2 entries"));
        }
        if predicted.iter().chain(&truth).any(|v| !v.is_finite()) {
            return Err(Error::domain(
                "prediction batch contains a non-finite value",
            ));
        }
        Ok(PredictionBatch { predicted, truth })
    }

    pub fn predicted(&self) -> &[f64] {
        &self.predicted
    }

    pub fn truth(&self) -> &[f64] {
        &self.truth
    }

    pub fn len(&self) -> usize {
        self.predicted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicted.is_empty()
    }
}

/// A loss as named in result files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    Mse,
    Min { gamma: f64 },
    Sum { gamma: f64 },
}

impl LossKind {
    /// `mse`, then `lmin@γ` and `lsum@γ` for each γ.
    pub fn standard_set(gammas: &[f64]) -> Vec<LossKind> {
        let mut out = vec![LossKind::Mse];
        for &gamma in gammas {
            out.push(LossKind::Min { gamma });
            out.push(LossKind::Sum { gamma });
        }
        out
    }

    pub fn name(&self) -> String {
        match self {
            LossKind::Mse => "mse".into(),
            LossKind::Min { gamma } => format!("lmin@{gamma}"),
            LossKind::Sum { gamma } => format!("lsum@{gamma}"),
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            LossKind::Mse => None,
            LossKind::Min { gamma } | LossKind::Sum { gamma } => Some(*gamma),
        }
    }

    pub fn evaluate(&self, batch: &PredictionBatch) -> Result<f64> {
        match *self {
            LossKind::Mse => Ok(mse(batch)),
            LossKind::Min { gamma } => loss_min(batch, gamma),
            LossKind::Sum { gamma } => loss_sum(batch, gamma),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "mse" {
            return Ok(LossKind::Mse);
        }
        let parse_gamma = |g: &str| {
            g.parse::<f64>()
                .map_err(|_| Error::domain(format!("bad gamma in loss name {s:?}")))
        };
        if let Some(g) = s.strip_prefix("lmin@") {
            return Ok(LossKind::Min {
                gamma: parse_gamma(g)?,
            });
        }
        if let Some(g) = s.strip_prefix("lsum@") {
            return Ok(LossKind::Sum {
                gamma: parse_gamma(g)?,
            });
        }
        Err(Error::domain(format!("unknown loss {s:?}")))
    }
}

/// Positions sorted by descending prediction, split into runs of equal
/// predictions. Each run is `(first_rank, positions)`.
fn tie_groups(predicted: &[f64]) -> Vec<(usize, Vec<usize>)> {
    let mut order: Vec<usize> = (0..predicted.len()).collect();
    order.sort_by(|&a, &b| predicted[b].total_cmp(&predicted[a]).then(a.cmp(&b)));
    let mut groups = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let v = predicted[order[start]];
        let mut end = start + 1;
        while end < order.len() && predicted[order[end]] == v {
            end += 1;
        }
        groups.push((start, order[start..end].to_vec()));
        start = end;
    }
    groups
}

/// Rank 0 for the highest value; ties share the mean of the ranks they span.
pub fn midranks_descending(predicted: &[f64]) -> Vec<f64> {
    let mut ranks = vec![0.0; predicted.len()];
    for (start, members) in tie_groups(predicted) {
        let mid = start as f64 + (members.len() as f64 - 1.0) / 2.0;
        for p in members {
            ranks[p] = mid;
        }
    }
    ranks
}

/// `max(1, ⌊(1-γ)·n⌋)`.
///
/// The product is nudged by 1e-9 before flooring so that e.g. γ = 0.9,
/// n = 100 yields 10 even though `1.0 - 0.9` is slightly below 0.1.
pub fn active_count(n_test: usize, gamma: f64) -> usize {
    let raw = ((1.0 - gamma) * n_test as f64 + 1e-9).floor();
    (raw.max(0.0) as usize).max(1)
}

/// Positions of the `A` largest true values; among equal values the lower
/// position wins. Returned in ascending position order.
pub fn active_set(truth: &[f64], gamma: f64) -> Result<Vec<usize>> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::domain(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    let n = truth.len();
    let a = active_count(n, gamma);
    if a >= n {
        return Err(Error::domain(format!(
            "gamma={gamma} marks {a} of {n} test molecules active; need fewer than all"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| truth[y].total_cmp(&truth[x]).then(x.cmp(&y)));
    let mut chosen = order[..a].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Normalized rank of the best-ranked active.
pub fn loss_min(batch: &PredictionBatch, gamma: f64) -> Result<f64> {
    let actives = active_set(&batch.truth, gamma)?;
    let n = batch.len();
    let a = actives.len();
    let mut is_active = vec![false; n];
    for &p in &actives {
        is_active[p] = true;
    }
    for (start, members) in tie_groups(&batch.predicted) {
        let m = members.iter().filter(|&&p| is_active[p]).count();
        if m > 0 {
            // Expected minimum slot of m actives placed uniformly in g slots.
            let g = members.len() as f64;
            let expected = start as f64 + (g - m as f64) / (m as f64 + 1.0);
            return Ok(expected / (n - a) as f64);
        }
    }
    unreachable!("active set is nonempty")
}

/// Normalized sum of active ranks.
pub fn loss_sum(batch: &PredictionBatch, gamma: f64) -> Result<f64> {
    let actives = active_set(&batch.truth, gamma)?;
    let n = batch.len() as f64;
    let a = actives.len() as f64;
    let ranks = midranks_descending(&batch.predicted);
    let total: f64 = actives.iter().map(|&p| ranks[p]).sum();
    Ok((total - a * (a - 1.0) / 2.0) / (a * (n - a)))
}

pub fn mse(batch: &PredictionBatch) -> f64 {
    batch
        .predicted
        .iter()
        .zip(&batch.truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / batch.len() as f64
}

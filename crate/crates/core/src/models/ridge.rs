//! Ridge regression with an unpenalized intercept.
//!
//! Columns of X and the targets are centered, then
//! `(XcᵀXc + αI) w = Xcᵀ yc` is solved by Cholesky factorization and the
//! intercept recovered as `ȳ - x̄·w`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Fingerprint, N_BITS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RidgeParams {
    pub alpha: f64,
}

impl Default for RidgeParams {
    fn default() -> Self {
        RidgeParams { alpha: 0.1 }
    }
}

impl RidgeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::domain(format!(
                "ridge alpha must be > 0, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RidgeModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
}

impl RidgeModel {
    pub fn predict_fingerprint(&self, x: Fingerprint) -> f64 {
        let mut acc = self.intercept;
        let mut bits = x.as_u128();
        while bits != 0 {
            let j = bits.leading_zeros() as usize;
            acc += self.coef[j];
            bits &= !(1u128 << (N_BITS - 1 - j));
        }
        acc
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>()
    }
}

pub fn fit(params: &RidgeParams, x: &[Fingerprint], y: &[f64]) -> Result<RidgeModel> {
    let n = x.len() as f64;
    let p = N_BITS;

    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut col_sum = vec![0.0; p];
    let mut xty = vec![0.0; p];
    let mut set: Vec<usize> = Vec::with_capacity(p);
    for (row, &target) in x.iter().zip(y) {
        set.clear();
        set.extend((0..p).filter(|&j| row.bit(j)));
        for &a in &set {
            col_sum[a] += 1.0;
            xty[a] += target;
            for &b in &set {
                gram[(a, b)] += 1.0;
            }
        }
    }
    let y_mean = y.iter().sum::<f64>() / n;
    let x_mean: Vec<f64> = col_sum.iter().map(|s| s / n).collect();

    // XcᵀXc = XᵀX - n·x̄x̄ᵀ and Xcᵀyc = Xᵀy - n·x̄·ȳ.
    for a in 0..p {
        for b in 0..p {
            gram[(a, b)] -= n * x_mean[a] * x_mean[b];
        }
        gram[(a, a)] += params.alpha;
    }
    let rhs = DVector::from_iterator(p, (0..p).map(|a| xty[a] - n * x_mean[a] * y_mean));

    let chol = gram.cholesky().ok_or_else(|| {
        Error::Training("ridge normal equations are not positive definite".into())
    })?;
    let w = chol.solve(&rhs);
    let coef: Vec<f64> = w.iter().copied().collect();
    let intercept = y_mean - coef.iter().zip(&x_mean).map(|(c, m)| c * m).sum::<f64>();
    Ok(RidgeModel { coef, intercept })
}

/// `‖y - Xw - b‖² + α‖w‖²`.
pub fn objective(model: &RidgeModel, alpha: f64, x: &[Fingerprint], y: &[f64]) -> f64 {
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(&r, &t)| {
            let e = t - model.predict_fingerprint(r);
            e * e
        })
        .sum();
    rss + alpha * model.coef.iter().map(|c| c * c).sum::<f64>()
}

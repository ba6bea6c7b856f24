//! The four regressors behind one fit/predict interface.
//!
//! Specs serialize as single-key JSON objects, e.g.
//! `{"ridge": {"alpha": 0.1}}` or `{"rf": {"n_trees": 100, "seed": 7}}`.

pub mod forest;
pub mod mlp;
pub mod ridge;
pub mod svr;

use serde::{Deserialize, Serialize};

use crate::data::{Fingerprint, N_BITS};
use crate::error::{Error, Result};
use crate::rng;

pub use forest::{ForestModel, ForestParams};
pub use mlp::{MlpModel, MlpParams};
pub use ridge::{RidgeModel, RidgeParams};
pub use svr::{SvrModel, SvrParams};

/// Smallest training multiset accepted by [`fit`].
pub const MIN_TRAIN_SIZE: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelSpec {
    #[serde(rename = "ridge")]
    Ridge(RidgeParams),
    #[serde(rename = "svr")]
    LinearSvr(SvrParams),
    #[serde(rename = "rf")]
    RandomForest(ForestParams),
    #[serde(rename = "mlp")]
    Mlp(MlpParams),
}

impl ModelSpec {
    /// The four model classes with default hyperparameters.
    pub fn defaults() -> Vec<ModelSpec> {
        vec![
            ModelSpec::Ridge(RidgeParams::default()),
            ModelSpec::LinearSvr(SvrParams::default()),
            ModelSpec::RandomForest(ForestParams::default()),
            ModelSpec::Mlp(MlpParams::default()),
        ]
    }

    /// JSON key of the model class.
    pub fn key(&self) -> &'static str {
        match self {
            ModelSpec::Ridge(_) => "ridge",
            ModelSpec::LinearSvr(_) => "svr",
            ModelSpec::RandomForest(_) => "rf",
            ModelSpec::Mlp(_) => "mlp",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Ridge(p) => p.validate(),
            ModelSpec::LinearSvr(p) => p.validate(),
            ModelSpec::RandomForest(p) => p.validate(),
            ModelSpec::Mlp(p) => p.validate(),
        }
    }

    /// Copy of the spec whose random seed is mixed with `salt`, for fresh
    /// per-iteration refits. Deterministic models are returned unchanged.
    pub fn reseeded(&self, salt: u64) -> ModelSpec {
        match self {
            ModelSpec::RandomForest(p) => ModelSpec::RandomForest(ForestParams {
                seed: rng::combine(p.seed, salt),
                ..p.clone()
            }),
            ModelSpec::Mlp(p) => ModelSpec::Mlp(MlpParams {
                seed: rng::combine(p.seed, salt),
                ..p.clone()
            }),
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Learned {
    Ridge(RidgeModel),
    Svr(SvrModel),
    Forest(ForestModel),
    Mlp(MlpModel),
}

/// Training bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingMeta {
    pub n_train: usize,
    /// Optimizer iterations (SMO steps, epochs); 0 for closed-form fits.
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub n_features: usize,
    pub learned: Learned,
    pub meta: TrainingMeta,
}

pub fn fit(spec: &ModelSpec, x: &[Fingerprint], y: &[f64]) -> Result<FittedModel> {
    spec.validate()?;
    if x.len() != y.len() {
        return Err(Error::domain(format!(
            "{} feature rows for {} targets",
            x.len(),
            y.len()
        )));
    }
    if x.len() < MIN_TRAIN_SIZE {
        return Err(Error::domain(format!(
            "need at least {MIN_TRAIN_SIZE} training rows, got {}",
            x.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("non-finite training target"));
    }
    let n = x.len();
    let (learned, iterations, converged) = match spec {
        ModelSpec::Ridge(p) => (Learned::Ridge(ridge::fit(p, x, y)?), 0, true),
        ModelSpec::LinearSvr(p) => {
            let m = svr::fit(p, x, y);
            let (it, conv) = (m.iterations, m.converged);
            (Learned::Svr(m), it, conv)
        }
        ModelSpec::RandomForest(p) => (Learned::Forest(forest::fit(p, x, y)), 0, true),
        ModelSpec::Mlp(p) => {
            let m = mlp::fit(p, x, y)?;
            let epochs = m.epochs;
            (Learned::Mlp(m), epochs, true)
        }
    };
    Ok(FittedModel {
        spec: spec.clone(),
        n_features: N_BITS,
        learned,
        meta: TrainingMeta {
            n_train: n,
            iterations,
            converged,
        },
    })
}

impl FittedModel {
    pub fn predict(&self, x: &[Fingerprint]) -> Vec<f64> {
        match &self.learned {
            Learned::Ridge(m) => x.iter().map(|&r| m.predict_fingerprint(r)).collect(),
            Learned::Svr(m) => x.iter().map(|&r| m.predict_fingerprint(r)).collect(),
            Learned::Forest(m) => x.iter().map(|&r| m.predict_fingerprint(r)).collect(),
            Learned::Mlp(m) => x.iter().map(|&r| m.predict_row(&r.to_dense())).collect(),
        }
    }

    /// Predicts row-major dense input with `n_cols` columns.
    pub fn predict_dense(&self, data: &[f64], n_cols: usize) -> Result<Vec<f64>> {
        if n_cols != self.n_features {
            return Err(Error::domain(format!(
                "model expects {} features, got {n_cols}",
                self.n_features
            )));
        }
        if !data.len().is_multiple_of(n_cols) {
            return Err(Error::domain(format!(
                "{} values is not a whole number of {n_cols}-column rows",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite feature value"));
        }
        Ok(data
            .chunks_exact(n_cols)
            .map(|row| match &self.learned {
                Learned::Ridge(m) => m.predict_row(row),
                Learned::Svr(m) => m.predict_row(row),
                Learned::Forest(m) => m.predict_row(row),
                Learned::Mlp(m) => m.predict_row(row),
            })
            .collect())
    }
}

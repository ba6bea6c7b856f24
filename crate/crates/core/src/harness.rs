//! Experiment grid: splits × models × losses, and the aggregate statistics.
//!
//! Within one iteration every model is fitted on the same training multiset
//! and scored on the same test set, so per-iteration losses are paired
//! across models. Iterations run in parallel; each task derives its own
//! seeds, and results are collected in task order, so the output does not
//! depend on the thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{parse_dataset, Dataset, IngestOptions};
use crate::error::{Error, Result};
use crate::loss::{LossKind, PredictionBatch};
use crate::models::{self, ModelSpec};
use crate::rng;
use crate::split::{SplitKind, SplitPlan, TrainTestSplit};

pub const DEFAULT_GAMMAS: [f64; 3] = [0.9, 0.95, 0.99];
pub const DEFAULT_ITERATIONS: usize = 400;

fn default_gammas() -> Vec<f64> {
    DEFAULT_GAMMAS.to_vec()
}

fn default_iterations() -> usize {
    DEFAULT_ITERATIONS
}

fn default_parallelism() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset files; relative paths resolve against the config file.
    pub datasets: Vec<PathBuf>,
    #[serde(default = "ModelSpec::defaults")]
    pub models: Vec<ModelSpec>,
    pub split_plans: Vec<SplitKind>,
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Average activities of rows that share an id.
    #[serde(default)]
    pub dedup_average: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file and resolves dataset paths relative to it.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(dir) = path.parent() {
            for d in cfg.datasets.iter_mut() {
                if d.is_relative() {
                    *d = dir.join(&*d);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() || self.models.is_empty() || self.split_plans.is_empty() {
            return Err(Error::Config(
                "datasets, models and split_plans must be nonempty".into(),
            ));
        }
        if self.gammas.iter().any(|g| !(*g > 0.0 && *g < 1.0)) {
            return Err(Error::Config("every gamma must lie in (0, 1)".into()));
        }
        if self.iterations < 2 {
            return Err(Error::Config(format!(
                "iterations must be >= 2 for a jackknife, got {}",
                self.iterations
            )));
        }
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be >= 1".into()));
        }
        for m in &self.models {
            m.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn losses(&self) -> Vec<LossKind> {
        LossKind::standard_set(&self.gammas)
    }

    /// Result-file labels for the models: the JSON key, with `#2`, `#3`, …
    /// appended to repeats.
    pub fn model_labels(&self) -> Vec<String> {
        model_labels(&self.models)
    }

    pub fn load_datasets(&self) -> Result<Vec<Dataset>> {
        let opts = IngestOptions {
            dedup_average: self.dedup_average,
            name: None,
        };
        let datasets: Vec<Dataset> = self
            .datasets
            .iter()
            .map(|p| parse_dataset(p, &opts))
            .collect::<Result<_>>()?;
        let mut names: Vec<&str> = datasets.iter().map(|d| d.name()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!(
                "dataset name {} appears twice",
                w[0]
            )));
        }
        Ok(datasets)
    }
}

pub fn model_labels(models: &[ModelSpec]) -> Vec<String> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    models
        .iter()
        .map(|m| {
            let c = seen.entry(m.key()).or_insert(0);
            *c += 1;
            if *c == 1 {
                m.key().to_string()
            } else {
                format!("{}#{}", m.key(), c)
            }
        })
        .collect()
}

/// One loss value: a row of the records CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub dataset: String,
    pub model: String,
    pub split: String,
    pub loss: String,
    pub iteration: usize,
    pub value: f64,
}

pub const RECORDS_HEADER: &str = "dataset,model,split,loss,iteration,value";

/// Records as CSV. Values use the shortest representation that reads back
/// to the same f64.
pub fn records_to_csv(records: &[LossRecord]) -> String {
    let mut out = String::with_capacity(48 * (records.len() + 1));
    out.push_str(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.dataset, r.model, r.split, r.loss, r.iteration, r.value
        );
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<LossRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == RECORDS_HEADER => {}
        _ => {
            return Err(Error::Parse {
                path: "records".into(),
                line: 1,
                message: format!("expected header `{RECORDS_HEADER}`"),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let bad = |message: String| Error::Parse {
                path: "records".into(),
                line: i + 1,
                message,
            };
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(bad(format!("expected 6 fields, found {}", f.len())));
            }
            Ok(LossRecord {
                dataset: f[0].into(),
                model: f[1].into(),
                split: f[2].into(),
                loss: f[3].into(),
                iteration: f[4].parse().map_err(|_| bad("bad iteration".into()))?,
                value: f[5].parse().map_err(|_| bad("bad value".into()))?,
            })
        })
        .collect()
}

/// Fits every model on one split and evaluates every loss.
/// Records come out model-major, then in `losses` order.
#[allow(clippy::too_many_arguments)]
fn evaluate_split(
    dataset: &Dataset,
    models: &[(String, ModelSpec)],
    split_label: &str,
    split: &TrainTestSplit,
    losses: &[LossKind],
    iteration: usize,
    model_salt: u64,
) -> Result<Vec<LossRecord>> {
    let (x_train, y_train) = dataset.select(&split.train);
    let (x_test, y_test) = dataset.select(&split.test);
    let mut out = Vec::with_capacity(models.len() * losses.len());
    for (label, spec) in models {
        let context = |e: Error| {
            Error::Training(format!(
                "dataset {}, model {label}, split {split_label}, iteration {iteration}: {e}",
                dataset.name()
            ))
        };
        let fitted =
            models::fit(&spec.reseeded(model_salt), &x_train, &y_train).map_err(context)?;
        let batch =
            PredictionBatch::new(fitted.predict(&x_test), y_test.clone()).map_err(context)?;
        for loss in losses {
            let value = loss.evaluate(&batch).map_err(|e| {
                Error::Domain(format!(
                    "dataset {}, split {split_label}, iteration {iteration}, loss {loss}: {e}",
                    dataset.name()
                ))
            })?;
            out.push(LossRecord {
                dataset: dataset.name().to_string(),
                model: label.clone(),
                split: split_label.to_string(),
                loss: loss.name(),
                iteration,
                value,
            });
        }
    }
    Ok(out)
}

/// All draws of one (dataset, plan) cell, evaluated sequentially.
///
/// Iteration `a` uses split seed `derive_seed(seed, dataset, a)`; model seeds
/// are mixed with the same value so refits start fresh each iteration.
pub fn run_cell(
    dataset: &Dataset,
    models: &[(String, ModelSpec)],
    plan: &SplitPlan,
    gammas: &[f64],
    iterations: usize,
) -> Result<Vec<LossRecord>> {
    let losses = LossKind::standard_set(gammas);
    let label = plan.kind.label();
    let splits = plan.generate(dataset, iterations)?;
    let mut out = Vec::new();
    for (a, split) in splits.iter().enumerate() {
        let salt = rng::derive_seed(plan.seed, dataset.name(), a as u64);
        out.extend(evaluate_split(
            dataset, models, &label, split, &losses, a, salt,
        )?);
    }
    Ok(out)
}

/// Runs the whole grid on already-loaded datasets with `parallelism` threads.
pub fn run_experiment(config: &ExperimentConfig, datasets: &[Dataset]) -> Result<Vec<LossRecord>> {
    config.validate()?;
    let labels = config.model_labels();
    let models: Vec<(String, ModelSpec)> = labels
        .into_iter()
        .zip(config.models.iter().cloned())
        .collect();
    let losses = config.losses();

    struct Task<'a> {
        dataset: &'a Dataset,
        label: String,
        split: TrainTestSplit,
        iteration: usize,
        salt: u64,
    }
    let mut tasks = Vec::new();
    for dataset in datasets {
        for kind in &config.split_plans {
            let plan = SplitPlan {
                kind: *kind,
                seed: config.master_seed,
            };
            let splits = plan.generate(dataset, config.iterations).map_err(|e| {
                Error::Domain(format!("dataset {}, split {kind}: {e}", dataset.name()))
            })?;
            for (a, split) in splits.into_iter().enumerate() {
                tasks.push(Task {
                    dataset,
                    label: kind.label(),
                    split,
                    iteration: a,
                    salt: rng::derive_seed(config.master_seed, dataset.name(), a as u64),
                });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let chunks: Vec<Vec<LossRecord>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                evaluate_split(
                    t.dataset,
                    &models,
                    &t.label,
                    &t.split,
                    &losses,
                    t.iteration,
                    t.salt,
                )
            })
            .collect::<Result<_>>()
    })?;

    // Regroup so each cell's records are contiguous: model, loss, iteration.
    let mut records: Vec<LossRecord> = chunks.into_iter().flatten().collect();
    let order_ds: BTreeMap<&str, usize> = datasets
        .iter()
        .enumerate()
        .map(|(i, d)| (d.name(), i))
        .collect();
    let split_order: Vec<String> = config.split_plans.iter().map(|k| k.label()).collect();
    let model_order = config.model_labels();
    let loss_order: Vec<String> = losses.iter().map(|l| l.name()).collect();
    let pos = |v: &[String], s: &str| v.iter().position(|x| x == s).unwrap_or(usize::MAX);
    records.sort_by_key(|r| {
        (
            order_ds[r.dataset.as_str()],
            pos(&split_order, &r.split),
            pos(&model_order, &r.model),
            pos(&loss_order, &r.loss),
            r.iteration,
        )
    });
    Ok(records)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Delete-one jackknife standard error of the mean.
pub fn jackknife_se(values: &[f64]) -> Result<f64> {
    let a = values.len();
    if a < 2 {
        return Err(Error::domain(format!(
            "jackknife needs at least 2 values, got {a}"
        )));
    }
    let total: f64 = values.iter().sum();
    let loo: Vec<f64> = values
        .iter()
        .map(|v| (total - v) / (a - 1) as f64)
        .collect();
    let loo_mean = mean(&loo);
    let ss: f64 = loo.iter().map(|m| (m - loo_mean).powi(2)).sum();
    Ok(((a - 1) as f64 / a as f64 * ss).sqrt())
}

/// Share of iterations in which each model has the lowest loss. `losses`
/// is iteration-major (`losses[a][t]`); exact ties split the win.
pub fn probability_optimal(losses: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = losses.first() else {
        return Vec::new();
    };
    let t = first.len();
    let mut wins = vec![0.0; t];
    for row in losses {
        let best = row.iter().copied().fold(f64::INFINITY, f64::min);
        let winners: Vec<usize> = (0..t).filter(|&m| row[m] == best).collect();
        let share = 1.0 / winners.len() as f64;
        for w in winners {
            wins[w] += share;
        }
    }
    wins.iter().map(|w| w / losses.len() as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStat {
    pub model: String,
    pub mean: f64,
    pub se: f64,
    pub probability_optimal: f64,
}

/// Summary of one (dataset, split, loss) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub dataset: String,
    pub split: String,
    pub loss: String,
    /// Number of paired draws (iterations or folds).
    pub draws: usize,
    pub models: Vec<ModelStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub model: String,
    pub score: f64,
}

/// Overall scores for one (split, loss): optimality probabilities summed
/// over datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub split: String,
    pub loss: String,
    pub scores: Vec<ModelScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub target_id: String,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool_version: String,
    pub master_seed: u64,
    pub iterations: usize,
    pub gammas: Vec<f64>,
    pub parallelism: usize,
    pub model_specs: BTreeMap<String, ModelSpec>,
    pub split_plans: Vec<SplitKind>,
    pub rng: String,
    pub float_precision: String,
    pub started_at: u64,
    pub finished_at: u64,
}

/// Contents of `aggregates.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub metadata: RunMetadata,
    pub datasets: Vec<DatasetInfo>,
    pub models: Vec<String>,
    pub splits: Vec<String>,
    pub losses: Vec<String>,
    pub cells: Vec<CellSummary>,
    pub scores: Vec<ScoreRow>,
}

impl Aggregates {
    pub fn cell(&self, dataset: &str, split: &str, loss: &str) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.dataset == dataset && c.split == split && c.loss == loss)
    }

    pub fn score_row(&self, split: &str, loss: &str) -> Option<&ScoreRow> {
        self.scores
            .iter()
            .find(|s| s.split == split && s.loss == loss)
    }

    /// Datasets ordered by increasing size (ties by name).
    pub fn datasets_by_size(&self) -> Vec<&DatasetInfo> {
        let mut v: Vec<&DatasetInfo> = self.datasets.iter().collect();
        v.sort_by(|a, b| a.size.cmp(&b.size).then_with(|| a.name.cmp(&b.name)));
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("aggregates always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

type CellKey<'a> = (&'a str, &'a str, &'a str);

/// Per-cell means, jackknife SEs and optimality probabilities.
///
/// Every (dataset, split, loss) cell must hold the same set of draws for
/// every model; otherwise the missing cells are listed in the error.
pub fn summarize_cells(
    records: &[LossRecord],
    datasets: &[String],
    splits: &[String],
    models: &[String],
    losses: &[String],
) -> Result<Vec<CellSummary>> {
    let mut grouped: BTreeMap<CellKey, BTreeMap<&str, BTreeMap<usize, f64>>> = BTreeMap::new();
    for r in records {
        grouped
            .entry((&r.dataset, &r.split, &r.loss))
            .or_default()
            .entry(&r.model)
            .or_default()
            .insert(r.iteration, r.value);
    }

    let mut problems = Vec::new();
    let mut cells = Vec::new();
    for d in datasets {
        for s in splits {
            for l in losses {
                let Some(by_model) = grouped.get(&(d.as_str(), s.as_str(), l.as_str())) else {
                    problems.push(format!("{d}/{s}/{l}: no records"));
                    continue;
                };
                let draws: Vec<usize> = match by_model.get(models[0].as_str()) {
                    Some(it) => it.keys().copied().collect(),
                    None => {
                        problems.push(format!("{d}/{s}/{l}: model {} missing", models[0]));
                        continue;
                    }
                };
                let mut columns = Vec::with_capacity(models.len());
                for m in models {
                    match by_model.get(m.as_str()) {
                        Some(it) if it.keys().copied().eq(draws.iter().copied()) => {
                            columns.push(it.values().copied().collect::<Vec<f64>>())
                        }
                        Some(_) => {
                            problems.push(format!("{d}/{s}/{l}: model {m} has unpaired draws"))
                        }
                        None => problems.push(format!("{d}/{s}/{l}: model {m} missing")),
                    }
                }
                if columns.len() != models.len() {
                    continue;
                }
                if draws.len() < 2 {
                    problems.push(format!("{d}/{s}/{l}: {} draws, need 2", draws.len()));
                    continue;
                }
                let paired: Vec<Vec<f64>> = (0..draws.len())
                    .map(|a| columns.iter().map(|c| c[a]).collect())
                    .collect();
                let p_opt = probability_optimal(&paired);
                let stats = models
                    .iter()
                    .zip(&columns)
                    .zip(&p_opt)
                    .map(|((m, c), &p)| {
                        Ok(ModelStat {
                            model: m.clone(),
                            mean: mean(c),
                            se: jackknife_se(c)?,
                            probability_optimal: p,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                cells.push(CellSummary {
                    dataset: d.clone(),
                    split: s.clone(),
                    loss: l.clone(),
                    draws: draws.len(),
                    models: stats,
                });
            }
        }
    }
    if !problems.is_empty() {
        return Err(Error::Aggregation(problems.join("; ")));
    }
    Ok(cells)
}

/// Sums optimality probabilities over datasets for every (split, loss).
pub fn overall_scores(
    cells: &[CellSummary],
    datasets: &[String],
    splits: &[String],
    models: &[String],
    losses: &[String],
) -> Result<Vec<ScoreRow>> {
    let mut missing = Vec::new();
    let mut rows = Vec::new();
    for s in splits {
        for l in losses {
            let mut totals = vec![0.0; models.len()];
            for d in datasets {
                match cells
                    .iter()
                    .find(|c| &c.dataset == d && &c.split == s && &c.loss == l)
                {
                    Some(cell) => {
                        for (t, m) in models.iter().enumerate() {
                            match cell.models.iter().find(|x| &x.model == m) {
                                Some(stat) => totals[t] += stat.probability_optimal,
                                None => missing.push(format!("{d}/{s}/{l}/{m}")),
                            }
                        }
                    }
                    None => missing.push(format!("{d}/{s}/{l}")),
                }
            }
            rows.push(ScoreRow {
                split: s.clone(),
                loss: l.clone(),
                scores: models
                    .iter()
                    .zip(totals)
                    .map(|(m, score)| ModelScore {
                        model: m.clone(),
                        score,
                    })
                    .collect(),
            });
        }
    }
    if !missing.is_empty() {
        return Err(Error::Aggregation(format!(
            "missing cells: {}",
            missing.join(", ")
        )));
    }
    Ok(rows)
}

/// Builds the aggregates for a completed run.
pub fn aggregate(
    config: &ExperimentConfig,
    datasets: &[Dataset],
    records: &[LossRecord],
    started_at: u64,
    finished_at: u64,
) -> Result<Aggregates> {
    let dataset_names: Vec<String> = datasets.iter().map(|d| d.name().to_string()).collect();
    let splits: Vec<String> = config.split_plans.iter().map(|k| k.label()).collect();
    let models = config.model_labels();
    let losses: Vec<String> = config.losses().iter().map(|l| l.name()).collect();

    for d in datasets {
        for k in &config.split_plans {
            let expected = k.draws(config.iterations) * models.len() * losses.len();
            let got = records
                .iter()
                .filter(|r| r.dataset == d.name() && r.split == k.label())
                .count();
            if got != expected {
                return Err(Error::Aggregation(format!(
                    "{}/{}: {got} records, expected {expected}",
                    d.name(),
                    k.label()
                )));
            }
        }
    }

    let cells = summarize_cells(records, &dataset_names, &splits, &models, &losses)?;
    let scores = overall_scores(&cells, &dataset_names, &splits, &models, &losses)?;
    Ok(Aggregates {
        metadata: RunMetadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: config.master_seed,
            iterations: config.iterations,
            gammas: config.gammas.clone(),
            parallelism: config.parallelism,
            model_specs: models
                .iter()
                .cloned()
                .zip(config.models.iter().cloned())
                .collect(),
            split_plans: config.split_plans.clone(),
            rng: "ChaCha8 (rand_chacha), SplitMix64-derived task seeds".into(),
            float_precision: "f64".into(),
            started_at,
            finished_at,
        },
        datasets: datasets
            .iter()
            .map(|d| DatasetInfo {
                name: d.name().to_string(),
                target_id: d.target_id().to_string(),
                size: d.len(),
            })
            .collect(),
        models,
        splits,
        losses,
        cells,
        scores,
    })
}

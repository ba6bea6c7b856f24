mod common;

use activesplit::harness::{
    self, jackknife_se, probability_optimal, records_from_csv, records_to_csv, run_cell,
    ExperimentConfig,
};
use activesplit::models::{ForestParams, MlpParams, RidgeParams, SvrParams};
use activesplit::surrogate::{self, SurrogateParams};
use activesplit::{Dataset, Error, ModelSpec, SplitKind, SplitPlan};
use proptest::prelude::*;

fn quick_models() -> Vec<ModelSpec> {
    vec![
        ModelSpec::Ridge(RidgeParams::default()),
        ModelSpec::LinearSvr(SvrParams::default()),
        ModelSpec::RandomForest(ForestParams {
            n_trees: 5,
            ..Default::default()
        }),
        ModelSpec::Mlp(MlpParams {
            epochs: 3,
            ..Default::default()
        }),
    ]
}

fn data(name: &str, n: usize) -> Dataset {
    surrogate::generate(name, "T", n, &SurrogateParams::default(), 3).unwrap()
}

fn config(n_datasets: usize, plans: Vec<SplitKind>, iterations: usize) -> ExperimentConfig {
    ExperimentConfig {
        datasets: (0..n_datasets)
            .map(|i| format!("d{i}.csv").into())
            .collect(),
        models: quick_models(),
        split_plans: plans,
        gammas: vec![0.9, 0.95, 0.99],
        iterations,
        master_seed: 17,
        parallelism: 1,
        dedup_average: false,
    }
}

#[test]
fn jackknife_examples() {
    assert_eq!(jackknife_se(&[1.0; 4]).unwrap(), 0.0);
    assert!((jackknife_se(&[0.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
    assert!(jackknife_se(&[1.0]).is_err());
    let v = [0.2, 0.9, 0.4, 1.3, 0.8];
    let scaled: Vec<f64> = v.iter().map(|x| -2.5 * x).collect();
    let (a, b) = (jackknife_se(&v).unwrap(), jackknife_se(&scaled).unwrap());
    assert!((b - 2.5 * a).abs() < 1e-14);
}

#[test]
fn probability_optimal_examples() {
    let dominant: Vec<Vec<f64>> = (0..5)
        .map(|a| vec![0.0, 1.0 + a as f64, 2.0, 3.0])
        .collect();
    assert_eq!(probability_optimal(&dominant), vec![1.0, 0.0, 0.0, 0.0]);
    let tied: Vec<Vec<f64>> = (0..3).map(|_| vec![0.1, 0.1, 0.5, 0.9]).collect();
    assert_eq!(probability_optimal(&tied), vec![0.5, 0.5, 0.0, 0.0]);
    let winners = vec![
        vec![0.0, 1.0, 1.0, 1.0],
        vec![1.0, 0.0, 1.0, 1.0],
        vec![0.0, 1.0, 1.0, 1.0],
        vec![0.0, 1.0, 1.0, 1.0],
    ];
    assert_eq!(probability_optimal(&winners), vec![0.75, 0.25, 0.0, 0.0]);
}

#[test]
fn cell_record_count_and_pairing() {
    let d = data("cell", 80);
    let labels: Vec<(String, ModelSpec)> = harness::model_labels(&quick_models())
        .into_iter()
        .zip(quick_models())
        .collect();
    let plan = SplitPlan {
        kind: SplitKind::QuantileBootstrap { q: 0.4 },
        seed: 5,
    };
    let records = run_cell(&d, &labels, &plan, &[0.9, 0.95, 0.99], 6).unwrap();
    assert_eq!(records.len(), 6 * 4 * 7);
    assert_eq!(
        records,
        run_cell(&d, &labels, &plan, &[0.9, 0.95, 0.99], 6).unwrap()
    );

    let kfold = SplitPlan {
        kind: SplitKind::Kfold { k: 5 },
        seed: 5,
    };
    let records = run_cell(&d, &labels, &kfold, &[0.9], 400).unwrap();
    assert_eq!(records.len(), 5 * 4 * 3);
    assert!(records.iter().all(|r| r.iteration < 5));
}

#[test]
fn experiment_is_independent_of_thread_count() {
    let ds = vec![data("a", 40), data("b", 55)];
    let mut cfg = config(2, vec![SplitKind::Bootstrap, SplitKind::Kfold { k: 3 }], 3);
    let one = harness::run_experiment(&cfg, &ds).unwrap();
    cfg.parallelism = 4;
    let four = harness::run_experiment(&cfg, &ds).unwrap();
    assert_eq!(records_to_csv(&one), records_to_csv(&four));
}

#[test]
fn aggregates_conserve_probability() {
    let ds = vec![data("a", 40), data("b", 55), data("c", 70)];
    let cfg = config(
        3,
        vec![
            SplitKind::Bootstrap,
            SplitKind::QuantileBootstrap { q: 0.6 },
        ],
        4,
    );
    let records = harness::run_experiment(&cfg, &ds).unwrap();
    let agg = harness::aggregate(&cfg, &ds, &records, 1, 2).unwrap();
    assert_eq!(agg.cells.len(), 3 * 2 * 7);
    for c in &agg.cells {
        let total: f64 = c.models.iter().map(|m| m.probability_optimal).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
    for row in &agg.scores {
        let total: f64 = row.scores.iter().map(|s| s.score).sum();
        assert!((total - 3.0).abs() < 1e-12);
    }
    let back = activesplit::Aggregates::from_json(&agg.to_json()).unwrap();
    assert_eq!(back, agg);
    assert_eq!(
        records_from_csv(&records_to_csv(&records)).unwrap(),
        records
    );

    let mut short = records.clone();
    short.pop();
    assert!(matches!(
        harness::aggregate(&cfg, &ds, &short, 1, 2),
        Err(Error::Aggregation(_))
    ));
}

#[test]
fn overall_scores_add_across_datasets() {
    use activesplit::harness::{overall_scores, CellSummary, ModelStat};
    let models: Vec<String> = ["ridge", "svr", "rf", "mlp"].map(String::from).to_vec();
    let cell = |d: &str, p: [f64; 4]| CellSummary {
        dataset: d.into(),
        split: "bootstrap".into(),
        loss: "mse".into(),
        draws: 2,
        models: models
            .iter()
            .zip(p)
            .map(|(m, p)| ModelStat {
                model: m.clone(),
                mean: 0.0,
                se: 0.0,
                probability_optimal: p,
            })
            .collect(),
    };
    let cells = vec![
        cell("x", [1.0, 0.0, 0.0, 0.0]),
        cell("y", [0.0, 1.0, 0.0, 0.0]),
    ];
    let rows = overall_scores(
        &cells,
        &["x".into(), "y".into()],
        &["bootstrap".into()],
        &models,
        &["mse".into()],
    )
    .unwrap();
    let scores: Vec<f64> = rows[0].scores.iter().map(|s| s.score).collect();
    assert_eq!(scores, vec![1.0, 1.0, 0.0, 0.0]);
    let err = overall_scores(
        &cells,
        &["x".into(), "z".into()],
        &["bootstrap".into()],
        &models,
        &["mse".into()],
    );
    assert!(err.unwrap_err().to_string().contains("z/bootstrap/mse"));
}

#[test]
fn config_parsing() {
    let cfg = ExperimentConfig::from_json(
        r#"{"datasets": ["a.csv"], "split_plans": [{"kind": "quantile_bootstrap", "q": 0.4}, {"kind": "kfold", "k": 5}, {"kind": "bootstrap"}]}"#,
    )
    .unwrap();
    assert_eq!(cfg.iterations, 400);
    assert_eq!(cfg.gammas, vec![0.9, 0.95, 0.99]);
    assert_eq!(cfg.models, ModelSpec::defaults());
    assert_eq!(cfg.losses().len(), 7);
    assert!(cfg.validate().is_ok());

    assert!(ExperimentConfig::from_json(r#"{"datasets": []}"#).is_err());
    assert!(
        ExperimentConfig::from_json(r#"{"datasets": ["a"], "split_plans": [], "colour": 1}"#)
            .is_err()
    );
    let mut bad = cfg.clone();
    bad.iterations = 1;
    assert!(matches!(bad.validate(), Err(Error::Config(_))));
    let mut bad = cfg;
    bad.gammas = vec![1.0];
    assert!(bad.validate().is_err());
}

#[test]
fn duplicate_models_get_distinct_labels() {
    let mut models = quick_models();
    models.push(ModelSpec::Ridge(RidgeParams { alpha: 1.0 }));
    let labels = harness::model_labels(&models);
    assert_eq!(labels, ["ridge", "svr", "rf", "mlp", "ridge#2"]);
}

proptest! {
    #[test]
    fn jackknife_matches_closed_form(v in prop::collection::vec(-100.0f64..100.0, 2..200)) {
        let a = v.len() as f64;
        let m = v.iter().sum::<f64>() / a;
        let s = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (a - 1.0)).sqrt();
        let jk = jackknife_se(&v).unwrap();
        prop_assert!((jk - s / a.sqrt()).abs() <= 1e-12 * (s / a.sqrt()).max(1e-300) + 1e-13);
    }

    #[test]
    fn probabilities_sum_to_one(rows in prop::collection::vec(prop::collection::vec(0u8..4, 4), 1..50)) {
        let losses: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
        let p = probability_optimal(&losses);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

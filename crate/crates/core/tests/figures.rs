use activesplit::harness::{self, ExperimentConfig};
use activesplit::models::{ForestParams, MlpParams, RidgeParams, SvrParams};
use activesplit::surrogate::{self, SurrogateParams};
use activesplit::{plot, report, Aggregates, ModelSpec, SplitKind};

fn aggregates() -> Aggregates {
    let datasets: Vec<_> = [("s<1>", 70), ("s&2", 40), ("s3", 55)]
        .iter()
        .map(|(n, size)| {
            surrogate::generate(n, "T", *size, &SurrogateParams::default(), 2).unwrap()
        })
        .collect();
    let cfg = ExperimentConfig {
        datasets: vec!["x".into(); 3],
        models: vec![
            ModelSpec::Ridge(RidgeParams::default()),
            ModelSpec::LinearSvr(SvrParams::default()),
            ModelSpec::RandomForest(ForestParams {
                n_trees: 5,
                ..Default::default()
            }),
            ModelSpec::Mlp(MlpParams {
                epochs: 2,
                ..Default::default()
            }),
        ],
        split_plans: vec![
            SplitKind::QuantileBootstrap { q: 0.4 },
            SplitKind::Kfold { k: 3 },
            SplitKind::Bootstrap,
            SplitKind::QuantileBootstrap { q: 0.8 },
        ],
        gammas: vec![0.9, 0.99],
        iterations: 3,
        master_seed: 1,
        parallelism: 1,
        dedup_average: false,
    };
    let records = harness::run_experiment(&cfg, &datasets).unwrap();
    harness::aggregate(&cfg, &datasets, &records, 0, 0).unwrap()
}

#[test]
fn report_orders_panels_and_splits() {
    let agg = aggregates();
    assert_eq!(
        report::ordered_splits(&agg),
        ["bootstrap", "qboot0.8", "qboot0.4", "kfold3"]
    );
    let panels: Vec<String> = report::loss_panels(&agg)
        .into_iter()
        .map(|(t, _)| t)
        .collect();
    assert_eq!(
        panels,
        ["gamma = 0.9", "gamma = 0.99", "mean squared error"]
    );
    let text = report::render(&agg);
    let order: Vec<usize> = ["== s&2", "== s3", "== s<1>"]
        .iter()
        .map(|h| text.find(h).unwrap())
        .collect();
    assert!(order.windows(2).all(|w| w[0] < w[1]));
    for line in text.lines().filter(|l| l.starts_with("total ")) {
        for v in line.split_whitespace().skip(2) {
            assert_eq!(v, "3.000", "{line}");
        }
    }
}

#[test]
fn svgs_are_well_formed_with_expected_layout() {
    let agg = aggregates();
    let dir = tempfile::tempdir().unwrap();
    let files = plot::write_all(&agg, dir.path()).unwrap();
    assert_eq!(files.len(), 4 * 5 + 5);
    for f in &files {
        let text = std::fs::read_to_string(f).unwrap();
        roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
    }

    let svg = plot::loss_chart(&agg, "qboot0.4", "lmin@0.99").unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let points: Vec<_> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("point"))
        .collect();
    assert_eq!(points.len(), 3 * 4);
    let ticks: Vec<&str> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("xtick"))
        .filter_map(|n| n.text())
        .collect();
    assert_eq!(ticks, ["s&2", "s3", "s<1>"]);

    let svg = plot::score_curve(&agg, "mse").unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let ticks: Vec<&str> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("xtick"))
        .filter_map(|n| n.text())
        .collect();
    assert_eq!(ticks, ["40%", "80%", "100%"]);
    let curves: Vec<_> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("curve"))
        .collect();
    assert_eq!(curves.len(), 4);
    assert_eq!(curves[3].attribute("stroke"), Some("#d62728"));
}

#[test]
fn figures_are_pure_functions_of_aggregates() {
    let agg = aggregates();
    let back = Aggregates::from_json(&agg.to_json()).unwrap();
    assert_eq!(report::render(&agg), report::render(&back));
    assert_eq!(
        plot::loss_chart(&agg, "bootstrap", "mse").unwrap(),
        plot::loss_chart(&back, "bootstrap", "mse").unwrap()
    );
}

//! Plain-text tables from an aggregates file.

use std::fmt::Write as _;

use crate::harness::Aggregates;
use crate::split::SplitKind;

/// Splits ordered by decreasing training fraction, K-fold plans last.
pub fn ordered_splits(agg: &Aggregates) -> Vec<String> {
    let mut v: Vec<(u8, f64, String)> = agg
        .splits
        .iter()
        .map(|s| match SplitKind::from_label(s) {
            Some(SplitKind::Kfold { .. }) | None => (1, 0.0, s.clone()),
            Some(k) => (0, -k.training_fraction(), s.clone()),
        })
        .collect();
    v.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    v.into_iter().map(|(_, _, s)| s).collect()
}

/// Loss panels: for each γ the `lmin` and `lsum` losses, then `mse`.
pub fn loss_panels(agg: &Aggregates) -> Vec<(String, Vec<String>)> {
    let mut panels = Vec::new();
    for g in &agg.metadata.gammas {
        let members: Vec<String> = [format!("lmin@{g}"), format!("lsum@{g}")]
            .into_iter()
            .filter(|l| agg.losses.contains(l))
            .collect();
        if !members.is_empty() {
            panels.push((format!("gamma = {g}"), members));
        }
    }
    if agg.losses.iter().any(|l| l == "mse") {
        panels.push(("mean squared error".to_string(), vec!["mse".to_string()]));
    }
    panels
}

pub fn dataset_tables(agg: &Aggregates) -> String {
    let mut out = String::new();
    for info in agg.datasets_by_size() {
        let _ = writeln!(
            out,
            "== {} ({}, N = {}) ==",
            info.name, info.target_id, info.size
        );
        for split in ordered_splits(agg) {
            for loss in &agg.losses {
                let Some(cell) = agg.cell(&info.name, &split, loss) else {
                    continue;
                };
                let _ = writeln!(out, "-- {split} / {loss} ({} draws)", cell.draws);
                let _ = writeln!(
                    out,
                    "{:<10} {:>10} {:>10} {:>10} {:>10} {:>8}",
                    "model", "mean", "se", "lo(-2se)", "hi(+2se)", "p_opt"
                );
                for m in &cell.models {
                    let _ = writeln!(
                        out,
                        "{:<10} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>8.3}",
                        m.model,
                        m.mean,
                        m.se,
                        m.mean - 2.0 * m.se,
                        m.mean + 2.0 * m.se,
                        m.probability_optimal
                    );
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn score_tables(agg: &Aggregates) -> String {
    let splits = ordered_splits(agg);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Overall scores (sum of optimality probabilities over {} datasets)",
        agg.datasets.len()
    );
    for (title, losses) in loss_panels(agg) {
        let _ = writeln!(out, "\n[{title}]");
        let _ = write!(out, "{:<18}", "model/loss");
        for s in &splits {
            let _ = write!(out, " {s:>12}");
        }
        out.push('\n');
        for loss in &losses {
            for model in &agg.models {
                let _ = write!(out, "{:<18}", format!("{model} {loss}"));
                for s in &splits {
                    let score = agg
                        .score_row(s, loss)
                        .and_then(|r| r.scores.iter().find(|m| &m.model == model))
                        .map(|m| m.score);
                    match score {
                        Some(v) => {
                            let _ = write!(out, " {v:>12.3}");
                        }
                        None => {
                            let _ = write!(out, " {:>12}", "-");
                        }
                    }
                }
                out.push('\n');
            }
            let _ = write!(out, "{:<18}", format!("total {loss}"));
            for s in &splits {
                let total: f64 = agg
                    .score_row(s, loss)
                    .map(|r| r.scores.iter().map(|m| m.score).sum())
                    .unwrap_or(0.0);
                let _ = write!(out, " {total:>12.3}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn render(agg: &Aggregates) -> String {
    let mut out = dataset_tables(agg);
    out.push_str(&score_tables(agg));
    out
}

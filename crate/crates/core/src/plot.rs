//! SVG figures from an aggregates file.
//!
//! * Per (split, loss): mean loss per dataset with ±2 SE error bars, one
//!   marker per model, datasets left to right by increasing size.
//! * Per loss: overall model score against the training fraction q, with
//!   the plain bootstrap plotted at q = 1.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::Aggregates;
use crate::split::SplitKind;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 90.0;

pub fn model_color(model: &str) -> &'static str {
    match model.split('#').next().unwrap_or(model) {
        "mlp" => "#d62728",
        "svr" => "#1f77b4",
        "rf" => "#ff7f0e",
        "ridge" => "#2ca02c",
        _ => "#7f7f7f",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Evenly spaced tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..=count)
        .map(|i| lo + (hi - lo) * i as f64 / count as f64)
        .collect()
}

struct Frame {
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn new(lo: f64, hi: f64) -> Self {
        let (lo, hi) = if (hi - lo).abs() < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        };
        Frame { y_lo: lo, y_hi: hi }
    }

    fn y(&self, v: f64) -> f64 {
        let plot_h = HEIGHT - TOP - BOTTOM;
        TOP + plot_h * (1.0 - (v - self.y_lo) / (self.y_hi - self.y_lo))
    }
}

fn open(out: &mut String, title: &str, y_label: &str, frame: &Frame) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let x1 = WIDTH - RIGHT;
    let y0 = HEIGHT - BOTTOM;
    let _ = writeln!(
        out,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{y0}" stroke="black"/>
<line x1="{LEFT}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#
    );
    for t in ticks(frame.y_lo, frame.y_hi, 5) {
        let y = frame.y(t);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{t:.3}</text>"#,
            LEFT - 4.0,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (TOP + y0) / 2.0,
        (TOP + y0) / 2.0,
        escape(y_label)
    );
}

fn legend(out: &mut String, models: &[String]) {
    let x = WIDTH - RIGHT + 15.0;
    for (i, m) in models.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<g class="legend"><rect x="{x}" y="{:.2}" width="10" height="10" fill="{}"/><text x="{}" y="{:.2}">{}</text></g>"#,
            y - 9.0,
            model_color(m),
            x + 15.0,
            y,
            escape(m)
        );
    }
}

/// Loss per dataset with ±2 SE bars.
pub fn loss_chart(agg: &Aggregates, split: &str, loss: &str) -> Result<String> {
    let datasets = agg.datasets_by_size();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for d in &datasets {
        let cell = agg
            .cell(&d.name, split, loss)
            .ok_or_else(|| Error::Aggregation(format!("no cell {}/{split}/{loss}", d.name)))?;
        for m in &cell.models {
            lo = lo.min(m.mean - 2.0 * m.se);
            hi = hi.max(m.mean + 2.0 * m.se);
        }
    }
    let frame = Frame::new(lo, hi);
    let mut out = String::new();
    open(&mut out, &format!("{loss} under {split}"), loss, &frame);

    let plot_w = WIDTH - LEFT - RIGHT;
    let slot = plot_w / datasets.len() as f64;
    let n_models = agg.models.len() as f64;
    for (i, d) in datasets.iter().enumerate() {
        let cx = LEFT + slot * (i as f64 + 0.5);
        let _ = writeln!(
            out,
            r#"<text class="xtick" x="{cx:.2}" y="{:.2}" text-anchor="end" transform="rotate(-45 {cx:.2} {:.2})">{}</text>"#,
            HEIGHT - BOTTOM + 14.0,
            HEIGHT - BOTTOM + 14.0,
            escape(&d.name)
        );
        let cell = agg.cell(&d.name, split, loss).expect("checked above");
        for (k, m) in cell.models.iter().enumerate() {
            let x = cx + slot * 0.6 * ((k as f64 + 0.5) / n_models - 0.5);
            let color = model_color(&m.model);
            let (y_mean, y_lo, y_hi) = (
                frame.y(m.mean),
                frame.y(m.mean - 2.0 * m.se),
                frame.y(m.mean + 2.0 * m.se),
            );
            let _ = writeln!(
                out,
                r#"<g class="point" data-model="{}" data-dataset="{}"><line x1="{x:.2}" y1="{y_lo:.2}" x2="{x:.2}" y2="{y_hi:.2}" stroke="{color}"/><circle cx="{x:.2}" cy="{y_mean:.2}" r="3" fill="{color}"/></g>"#,
                escape(&m.model),
                escape(&d.name)
            );
        }
    }
    legend(&mut out, &agg.models);
    out.push_str("</svg>\n");
    Ok(out)
}

/// Training fraction of each split that lies on the q axis.
fn q_axis(agg: &Aggregates) -> Vec<(f64, String)> {
    let mut v: Vec<(f64, String)> = agg
        .splits
        .iter()
        .filter_map(|s| match SplitKind::from_label(s)? {
            SplitKind::Kfold { .. } => None,
            k => Some((k.training_fraction(), s.clone())),
        })
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// Overall score against q for one loss. `None` when no split lies on the q axis.
pub fn score_curve(agg: &Aggregates, loss: &str) -> Option<String> {
    let axis = q_axis(agg);
    if axis.is_empty() {
        return None;
    }
    let frame = Frame::new(0.0, agg.datasets.len() as f64);
    let mut out = String::new();
    open(
        &mut out,
        &format!("overall score, {loss}"),
        "sum of optimality probabilities",
        &frame,
    );
    let plot_w = WIDTH - LEFT - RIGHT;
    let x_of = |i: usize| {
        if axis.len() == 1 {
            LEFT + plot_w / 2.0
        } else {
            LEFT + plot_w * (0.05 + 0.9 * i as f64 / (axis.len() - 1) as f64)
        }
    };
    for (i, (q, _)) in axis.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text class="xtick" x="{:.2}" y="{:.2}" text-anchor="middle">{}%</text>"#,
            x_of(i),
            HEIGHT - BOTTOM + 16.0,
            (q * 100.0).round()
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">training fraction q (100% = random bootstrap)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - BOTTOM + 40.0
    );
    let dash = if loss.starts_with("lmin") {
        r#" stroke-dasharray="2,3""#
    } else if loss.starts_with("lsum") {
        r#" stroke-dasharray="6,3,2,3""#
    } else {
        ""
    };
    for model in &agg.models {
        let points: Vec<String> = axis
            .iter()
            .enumerate()
            .filter_map(|(i, (_, split))| {
                let row = agg.score_row(split, loss)?;
                let s = row.scores.iter().find(|m| &m.model == model)?.score;
                Some(format!("{:.2},{:.2}", x_of(i), frame.y(s)))
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="curve" data-model="{}" points="{}" fill="none" stroke="{}" stroke-width="2"{dash}/>"#,
            escape(model),
            points.join(" "),
            model_color(model)
        );
    }
    legend(&mut out, &agg.models);
    out.push_str("</svg>\n");
    Some(out)
}

fn file_stem(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes every chart into `dir`; returns the files written.
pub fn write_all(agg: &Aggregates, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut emit = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    for split in &agg.splits {
        for loss in &agg.losses {
            emit(
                format!("loss_{}_{}.svg", file_stem(split), file_stem(loss)),
                loss_chart(agg, split, loss)?,
            )?;
        }
    }
    for loss in &agg.losses {
        if let Some(svg) = score_curve(agg, loss) {
            emit(format!("scores_{}.svg", file_stem(loss)), svg)?;
        }
    }
    Ok(written)
}

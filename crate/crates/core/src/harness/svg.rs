//! Minimal SVG line chart: one mean line and ±1 std band per task.

use std::fmt::Write;

use super::csv::{summarize, Metric};
use super::metrics::ExperimentRecord;
use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn render_chart(records: &[ExperimentRecord], metric: Metric) -> Result<String> {
    let summary = summarize(records, metric);
    if summary.is_empty() {
        return Err(Error::InvalidArgument("no records to plot".into()));
    }
    let k_min = summary.iter().map(|s| s.k).min().unwrap_or(1) as f64;
    let k_max = summary.iter().map(|s| s.k).max().unwrap_or(1) as f64;
    let mut y_min = summary.iter().map(|s| s.mean - s.std_dev).fold(f64::INFINITY, f64::min);
    let mut y_max = summary.iter().map(|s| s.mean + s.std_dev).fold(f64::NEG_INFINITY, f64::max);
    if !(y_max > y_min) {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let k_span = if k_max > k_min { k_max - k_min } else { 1.0 };
    let px = |k: f64| MARGIN + (k - k_min) / k_span * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (v - y_min) / (y_max - y_min) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let w = &mut out;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .ok();
    writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#).ok();
    writeln!(
        w,
        r#"<path d="M{l:.2} {t:.2} V{b:.2} H{r:.2}" stroke="black" fill="none"/>"#,
        l = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    )
    .ok();
    writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">k</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    )
    .ok();
    writeln!(
        w,
        r#"<text x="16" y="{:.2}" font-size="12" transform="rotate(-90 16 {:.2})" text-anchor="middle">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        metric.name()
    )
    .ok();
    for v in [y_min, y_max] {
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{:.4}</text>"#,
            MARGIN - 4.0,
            py(v) + 3.0,
            v
        )
        .ok();
    }
    for k in [k_min, k_max] {
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#,
            px(k),
            HEIGHT - MARGIN + 14.0,
            k
        )
        .ok();
    }

    let mut tasks: Vec<&str> = summary.iter().map(|s| s.task.as_str()).collect();
    tasks.dedup();
    for (i, task) in tasks.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<_> = summary.iter().filter(|s| s.task == *task).collect();
        let mut band = String::new();
        for s in &pts {
            write!(band, "{:.2},{:.2} ", px(s.k as f64), py(s.mean + s.std_dev)).ok();
        }
        for s in pts.iter().rev() {
            write!(band, "{:.2},{:.2} ", px(s.k as f64), py(s.mean - s.std_dev)).ok();
        }
        writeln!(
            w,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.trim_end()
        )
        .ok();
        let line: Vec<String> = pts
            .iter()
            .map(|s| format!("{:.2},{:.2}", px(s.k as f64), py(s.mean)))
            .collect();
        writeln!(
            w,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        )
        .ok();
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="{color}">{task}</text>"#,
            WIDTH - MARGIN - 120.0,
            MARGIN + 14.0 * (i as f64 + 1.0)
        )
        .ok();
    }
    writeln!(w, "</svg>").ok();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_band_and_line() {
        let recs: Vec<ExperimentRecord> = (1..=3)
            .flat_map(|k| {
                (0..2).map(move |t| ExperimentRecord {
                    task: "demo".into(),
                    k,
                    seed: 0,
                    trial: t,
                    mse: (k as f64 - 2.0).powi(2) + 0.1 * t as f64,
                    psnr_db: 0.0,
                    residual: 0.0,
                    wall_ms: 0.0,
                })
            })
            .collect();
        let svg = render_chart(&recs, Metric::Mse).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg, render_chart(&recs, Metric::Mse).unwrap());
        assert!(render_chart(&[], Metric::Mse).is_err());
    }
}

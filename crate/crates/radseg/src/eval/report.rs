//! Presentation of evaluation results: comparison table, flat CSV, and
//! an SVG chart of metric-versus-SNR curves.
//!
//! The text table shows scores in percent at a few headline SNR bins;
//! the CSV carries every bin at full resolution as raw fractions, one
//! row per (model, metric, bin). The chart draws one mean curve per
//! report with a shaded band of one standard deviation.

use super::{EvalError, EvalReport, MetricStat};
use std::fmt::Write as _;

/// Headline bins for the comparison table, in dB.
pub const SUMMARY_BINS: [f64; 4] = [-20.0, -15.0, -10.0, -5.0];

/// Display-only reference targets (metric, snr_db, score in percent)
/// that the table footer and IoU chart show for orientation. They are
/// not computed from any run.
pub const REFERENCE_TARGETS: &[(&str, f64, f64)] = &[
    ("single-stage reference", -20.0, 66.0),
    ("two-stage reference", -20.0, 78.2),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    F1,
    Dice,
    Iou,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::F1, Metric::Dice, Metric::Iou];

    /// Lowercase key used in CSV rows and file names.
    pub fn key(self) -> &'static str {
        match self {
            Metric::F1 => "f1",
            Metric::Dice => "dice",
            Metric::Iou => "iou",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::F1 => "F1",
            Metric::Dice => "Dice",
            Metric::Iou => "IoU",
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

fn display_name(report: &EvalReport) -> String {
    if report.stages > 1 {
        format!("{} ({} stages)", report.model, report.stages)
    } else {
        report.model.clone()
    }
}

fn check_comparable(reports: &[EvalReport]) -> Result<(), EvalError> {
    let Some(first) = reports.first() else {
        return Err(EvalError::MismatchedReports("no reports given".into()));
    };
    for r in reports {
        if r.threshold != first.threshold {
            return Err(EvalError::MismatchedReports(format!(
                "thresholds differ: {} vs {}",
                first.threshold, r.threshold
            )));
        }
        if r.split != first.split {
            return Err(EvalError::MismatchedReports(format!(
                "splits differ: {} vs {}",
                first.split, r.split
            )));
        }
    }
    Ok(())
}

fn cell(stat: MetricStat) -> String {
    if stat.n == 0 {
        "      --     ".to_string()
    } else {
        format!("{:5.1} ±{:4.1}  ", 100.0 * stat.mean, 100.0 * stat.std)
    }
}

/// Side-by-side comparison of several reports at the headline bins,
/// scores in percent. Fails with [`EvalError::BinMismatch`] when a
/// report lacks one of the requested bins.
pub fn render_text_table(reports: &[EvalReport], bins: &[f64]) -> Result<String, EvalError> {
    check_comparable(reports)?;
    let first = &reports[0];
    let name_w = reports
        .iter()
        .map(|r| display_name(r).len())
        .max()
        .unwrap_or(0)
        .max("model".len());

    let mut out = String::new();
    let _ = writeln!(
        out,
        "segmentation scores on split \"{}\" (threshold {:.2}, mean ± population std, percent)",
        first.split, first.threshold
    );
    let _ = write!(out, "{:<name_w$}  {:>7}", "model", "metric");
    for &b in bins {
        let _ = write!(out, "  {:>9} dB ", b);
    }
    let _ = writeln!(out);
    let rule = name_w + 9 + bins.len() * 14;
    let _ = writeln!(out, "{}", "-".repeat(rule));

    for report in reports {
        let rows = report.summary(bins)?;
        for (mi, metric) in Metric::ALL.iter().enumerate() {
            if mi == 0 {
                let _ = write!(out, "{:<name_w$}", display_name(report));
            } else {
                let _ = write!(out, "{:<name_w$}", "");
            }
            let _ = write!(out, "  {:>7}", metric.label());
            for row in &rows {
                let _ = write!(out, "  {}", cell(row.stat(*metric)));
            }
            let _ = writeln!(out);
        }
    }

    let _ = writeln!(out, "{}", "-".repeat(rule));
    for (label, snr, score) in REFERENCE_TARGETS {
        let _ = writeln!(
            out,
            "reference target: {label} IoU {score:.1} at {snr} dB (display only)"
        );
    }
    Ok(out)
}

/// Flat CSV over every bin of every report, one row per
/// (model, metric, bin); header `model,stages,metric,snr_db,mean,std,n`.
/// Means and standard deviations are raw fractions in [0, 1].
pub fn write_metrics_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("model,stages,metric,snr_db,mean,std,n\n");
    for report in reports {
        for metric in Metric::ALL {
            for row in &report.rows {
                let stat = row.stat(metric);
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    csv_field(&report.model),
                    report.stages,
                    metric.key(),
                    row.snr_db,
                    stat.mean,
                    stat.std,
                    stat.n
                );
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Self-contained SVG line chart of one metric across all reports: mean
/// curve per report with a one-standard-deviation band. Bins whose
/// metric skipped everywhere (`n = 0`) are omitted from the curves.
pub fn render_svg_chart(reports: &[EvalReport], metric: Metric) -> Result<String, EvalError> {
    check_comparable(reports)?;
    let width = 860.0;
    let height = 520.0;
    let (ml, mr, mt, mb) = (70.0, 24.0, 46.0, 64.0);
    let pw = width - ml - mr;
    let ph = height - mt - mb;

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    for r in reports {
        for row in &r.rows {
            x_min = x_min.min(row.snr_db);
            x_max = x_max.max(row.snr_db);
        }
    }
    if !x_min.is_finite() || x_max <= x_min {
        // Degenerate domain (single bin): pad by half a dB each side.
        let center = if x_min.is_finite() { x_min } else { 0.0 };
        x_min = center - 0.5;
        x_max = center + 0.5;
    }
    let x_of = |snr: f64| ml + (snr - x_min) / (x_max - x_min) * pw;
    let y_of = |score: f64| mt + (1.0 - score.clamp(0.0, 1.0)) * ph;

    let first = &reports[0];
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width} {height}\" \
         font-family=\"sans-serif\" font-size=\"13\">"
    );
    let _ = writeln!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"24\" font-size=\"17\" font-weight=\"bold\">{} vs SNR \
         (split \"{}\", threshold {:.2})</text>",
        ml,
        metric.label(),
        xml_escape(&first.split),
        first.threshold
    );

    // Horizontal grid and y labels every 20 percentage points.
    for k in 0..=5 {
        let score = k as f64 / 5.0;
        let y = y_of(score);
        let _ = writeln!(
            svg,
            "<line x1=\"{ml}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>",
            ml + pw
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{:.0}</text>",
            ml - 8.0,
            y + 4.0,
            100.0 * score
        );
    }
    // Vertical grid on whole-dB multiples of 5 inside the domain.
    let mut tick = (x_min / 5.0).ceil() * 5.0;
    while tick <= x_max + 1e-9 {
        let x = x_of(tick);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.1}\" y1=\"{mt}\" x2=\"{x:.1}\" y2=\"{:.1}\" \
             stroke=\"#eeeeee\" stroke-width=\"1\"/>",
            mt + ph
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{tick:.0}</text>",
            mt + ph + 18.0
        );
        tick += 5.0;
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">SNR (dB)</text>",
        ml + pw / 2.0,
        height - 18.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 18 {:.1})\">{} (%)</text>",
        mt + ph / 2.0,
        mt + ph / 2.0,
        metric.label()
    );
    // Axis frame.
    let _ = writeln!(
        svg,
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" \
         stroke=\"#444444\" stroke-width=\"1\"/>"
    );

    for (ri, report) in reports.iter().enumerate() {
        let color = PALETTE[ri % PALETTE.len()];
        let points: Vec<(f64, MetricStat)> = report
            .rows
            .iter()
            .map(|row| (row.snr_db, row.stat(metric)))
            .filter(|(_, s)| s.n > 0)
            .collect();
        if points.is_empty() {
            continue;
        }
        // One-standard-deviation band: upper edge forward, lower edge
        // back.
        let mut band = String::new();
        for (snr, s) in &points {
            let _ = write!(band, "{:.1},{:.1} ", x_of(*snr), y_of(s.mean + s.std));
        }
        for (snr, s) in points.iter().rev() {
            let _ = write!(band, "{:.1},{:.1} ", x_of(*snr), y_of(s.mean - s.std));
        }
        let _ = writeln!(
            svg,
            "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>",
            band.trim_end()
        );
        let mut line = String::new();
        for (snr, s) in &points {
            let _ = write!(line, "{:.1},{:.1} ", x_of(*snr), y_of(s.mean));
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
            line.trim_end()
        );
        // Legend entry.
        let ly = mt + 14.0 + 20.0 * ri as f64;
        let lx = ml + pw - 230.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" \
             stroke=\"{color}\" stroke-width=\"2\"/>",
            lx + 26.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            lx + 32.0,
            ly + 4.0,
            xml_escape(&display_name(report))
        );
    }

    if metric == Metric::Iou {
        for (label, snr, score) in REFERENCE_TARGETS {
            if *snr < x_min - 1e-9 || *snr > x_max + 1e-9 {
                continue;
            }
            let x = x_of(*snr);
            let y = y_of(score / 100.0);
            let _ = writeln!(
                svg,
                "<path d=\"M {x:.1} {:.1} L {:.1} {y:.1} L {x:.1} {:.1} L {:.1} {y:.1} Z\" \
                 fill=\"#555555\"/>",
                y - 5.0,
                x + 5.0,
                y + 5.0,
                x - 5.0
            );
            let _ = writeln!(
                svg,
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" fill=\"#555555\">{}</text>",
                x + 8.0,
                y + 4.0,
                xml_escape(label)
            );
        }
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

use std::collections::BTreeMap;

use super::dataset::ordered_split_names;
use super::metrics::MetricsReport;

/// Row keys in report order.
pub const METRIC_ROWS: [&str; 10] = [
    "overall_precision_micro",
    "overall_recall_micro",
    "overall_f1_micro",
    "overall_precision_macro",
    "overall_recall_macro",
    "overall_f1_macro",
    "overall_accuracy",
    "total_time_in_seconds",
    "samples_per_second",
    "latency_in_seconds",
];

pub fn format_percent(value: f64) -> String {
    format!("{:.2}%", value * 100.0)
}

pub fn format_seconds(value: f64) -> String {
    format!("{value:.4}")
}

fn cell(report: &MetricsReport, row: &str) -> String {
    let pct = format_percent;
    match row {
        "overall_precision_micro" => pct(report.overall_precision_micro),
        "overall_recall_micro" => pct(report.overall_recall_micro),
        "overall_f1_micro" => pct(report.overall_f1_micro),
        "overall_precision_macro" => pct(report.overall_precision_macro),
        "overall_recall_macro" => pct(report.overall_recall_macro),
        "overall_f1_macro" => pct(report.overall_f1_macro),
        "overall_accuracy" => report.overall_accuracy.map_or_else(|| "-".to_string(), pct),
        "total_time_in_seconds" => format_seconds(report.total_time_in_seconds),
        "samples_per_second" => format_seconds(report.samples_per_second),
        "latency_in_seconds" => format_seconds(report.latency_in_seconds),
        _ => unreachable!("unknown metric row {row}"),
    }
}

/// Plain-text table with one row per metric and one column per
/// `(pipeline label, split)`.
pub fn format_report(results: &BTreeMap<String, BTreeMap<String, MetricsReport>>) -> String {
    let mut headers = vec!["Metric".to_string()];
    let mut columns: Vec<&MetricsReport> = Vec::new();
    for (label, splits) in results {
        for split in ordered_split_names(splits.keys()) {
            headers.push(format!("{label} {split}"));
            columns.push(&splits[split]);
        }
    }
    let rows: Vec<Vec<String>> = METRIC_ROWS
        .iter()
        .map(|row| std::iter::once(row.to_string()).chain(columns.iter().map(|r| cell(r, row))).collect())
        .collect();
    let widths: Vec<usize> = (0..headers.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([headers[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (c, text) in cells.iter().enumerate() {
            if c == 0 {
                s.push_str(&format!("{text:<w$}", w = widths[0]));
            } else {
                s.push_str(&format!("  {text:>w$}", w = widths[c]));
            }
        }
        s.push('\n');
        s
    };
    let rule = "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)) + "\n";
    let mut out = String::new();
    out.push_str(&rule);
    out.push_str(&line(&headers));
    out.push_str(&rule);
    for row in &rows {
        out.push_str(&line(row));
    }
    out.push_str(&rule);
    out
}

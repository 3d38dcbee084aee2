use std::fmt::Write as _;
use std::path::Path;

use chartkit::dataset::{compute_stats, read_records, DatasetStats, SubsetStats};

/// Accepts `records.jsonl` or a directory holding one. An empty file gives
/// an all-zero table.
pub fn cmd_stats(dataset: &Path) -> anyhow::Result<DatasetStats> {
    let path = if dataset.is_dir() { dataset.join("records.jsonl") } else { dataset.to_path_buf() };
    Ok(compute_stats(&read_records(&path)?))
}

pub fn stats_text(s: &DatasetStats) -> String {
    let width = s.subsets.keys().map(String::len).chain([8]).max().unwrap_or(8);
    let mut out = format!(
        "{:<width$}  {:>11}  {:>8}  {:>9}  {:>13}\n",
        "subset", "chart_types", "charts", "samples", "samples/chart"
    );
    let mut row = |name: &str, v: &SubsetStats| {
        let _ = writeln!(
            out,
            "{name:<width$}  {:>11}  {:>8}  {:>9}  {:>13.4}",
            v.chart_types, v.charts, v.samples, v.samples_per_chart
        );
    };
    for (k, v) in &s.subsets {
        row(k, v);
    }
    row("total", &s.total);
    out
}

//! Threshold-crossing summaries of trace files.
//!
//! For each method and each gap threshold: how many seeds ever reached the
//! threshold, and the median epochs and queries of the first crossing over
//! the seeds that did.

use super::run::TraceRecord;
use crate::error::Result;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// Suboptimality levels summarized per method.
pub const GAP_THRESHOLDS: [f64; 4] = [1e-2, 1e-4, 1e-6, 1e-8];

/// Crossing statistics of one method at every threshold.
#[derive(Debug, Clone)]
pub struct MethodSummary {
    pub method: String,
    pub seeds: usize,
    pub rows: Vec<ThresholdRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct ThresholdRow {
    pub threshold: f64,
    /// Seeds whose trace ever reached the threshold.
    pub reached: usize,
    /// Medians of the first crossing over the seeds that reached it; `None`
    /// when none did.
    pub median_epochs: Option<f64>,
    pub median_queries: Option<f64>,
}

/// Summarizes records grouped by method (in first-appearance order) and
/// seed. Records of one cell are ordered by query count before scanning for
/// crossings, so shuffled input summarizes identically.
pub fn summarize_records(records: &[TraceRecord]) -> Vec<MethodSummary> {
    let mut methods: Vec<&str> = Vec::new();
    for r in records {
        if !methods.iter().any(|m| *m == r.method) {
            methods.push(&r.method);
        }
    }

    methods
        .iter()
        .map(|&method| {
            let mut by_seed: BTreeMap<u64, Vec<&TraceRecord>> = BTreeMap::new();
            for r in records.iter().filter(|r| r.method == method) {
                by_seed.entry(r.seed).or_default().push(r);
            }
            for cell in by_seed.values_mut() {
                cell.sort_by_key(|r| r.data_queries);
            }
            let rows = GAP_THRESHOLDS
                .iter()
                .map(|&threshold| {
                    let mut epochs = Vec::new();
                    let mut queries = Vec::new();
                    for cell in by_seed.values() {
                        if let Some(hit) =
                            cell.iter().find(|r| r.objective_gap <= threshold)
                        {
                            epochs.push(hit.epoch);
                            queries.push(hit.data_queries as f64);
                        }
                    }
                    ThresholdRow {
                        threshold,
                        reached: epochs.len(),
                        median_epochs: median(&mut epochs),
                        median_queries: median(&mut queries),
                    }
                })
                .collect();
            MethodSummary {
                method: method.to_string(),
                seeds: by_seed.len(),
                rows,
            }
        })
        .collect()
}

/// Reads a trace file and summarizes it.
pub fn summarize_file(path: impl AsRef<Path>) -> Result<Vec<MethodSummary>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut records = Vec::new();
    for record in reader.deserialize::<TraceRecord>() {
        records.push(record?);
    }
    Ok(summarize_records(&records))
}

/// Writes summaries as CSV with header
/// `method,threshold,reached,seeds,median_epochs,median_queries`; the median
/// fields are empty when no seed reached the threshold.
pub fn write_summary_csv(summaries: &[MethodSummary], out: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record([
        "method",
        "threshold",
        "reached",
        "seeds",
        "median_epochs",
        "median_queries",
    ])?;
    for summary in summaries {
        for row in &summary.rows {
            writer.write_record([
                summary.method.clone(),
                format!("{:e}", row.threshold),
                row.reached.to_string(),
                summary.seeds.to_string(),
                row.median_epochs.map(|v| v.to_string()).unwrap_or_default(),
                row.median_queries.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("crossing stats are finite"));
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

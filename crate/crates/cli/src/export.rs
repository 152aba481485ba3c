//! CSV and JSON export of run results with a stable, documented schema.
//!
//! Column order is fixed, floating values are rendered at six significant
//! digits, and row order follows the caller's record order, so identical
//! inputs produce byte-identical files.

use anyhow::{bail, Context, Result};
use leolink::sim::RunResult;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// The CSV header, in schema order.
pub const CSV_HEADER: &str = "experiment,seed,axis,axis_value,class,mean_aoi_ticks,violation_rate,epsilon,compliant,mean_power_w,forced_ho,disc_ho,pingpong_events";

/// One exported row: a single (run, class) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    /// Experiment label (for example `simulate` or the sweep axis name).
    pub experiment: String,
    /// Seed of the run.
    pub seed: u64,
    /// Sweep axis name, or `-` for single runs.
    pub axis: String,
    /// Sweep axis value, or 0 for single runs.
    pub axis_value: f64,
    /// Priority class, 1-based.
    pub class: usize,
    /// Mean age, ticks.
    pub mean_aoi_ticks: f64,
    /// Violation rate.
    pub violation_rate: f64,
    /// Violation budget.
    pub epsilon: f64,
    /// Whether the budget held.
    pub compliant: bool,
    /// Mean slot-total power, watts.
    pub mean_power_w: f64,
    /// Forced handovers.
    pub forced_ho: u64,
    /// Discretionary handovers.
    pub disc_ho: u64,
    /// Ping-pong events detected.
    pub pingpong_events: usize,
}

/// Builds the three per-class records of one run.
pub fn records_from_run(
    experiment: &str,
    seed: u64,
    axis: &str,
    axis_value: f64,
    result: &RunResult,
) -> Vec<Record> {
    result
        .classes
        .iter()
        .enumerate()
        .map(|(m, c)| Record {
            experiment: experiment.to_string(),
            seed,
            axis: axis.to_string(),
            axis_value,
            class: m + 1,
            mean_aoi_ticks: c.mean_aoi_ticks,
            violation_rate: c.violation_rate,
            epsilon: c.epsilon,
            compliant: c.compliant,
            mean_power_w: result.mean_power_w,
            forced_ho: result.forced_handovers,
            disc_ho: result.discretionary_handovers,
            pingpong_events: result.pingpong_events.len(),
        })
        .collect()
}

/// Rounds to six significant digits and renders the shortest round-trip
/// decimal form.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(5 - exponent);
    let rounded = (x * scale).round() / scale;
    format!("{rounded}")
}

/// Renders records as CSV bytes.
///
/// # Errors
/// Fails on an empty record set: writing a headerless result file would
/// hide an upstream mistake.
pub fn render_csv(records: &[Record]) -> Result<Vec<u8>> {
    if records.is_empty() {
        bail!("refusing to export an empty record set");
    }
    let mut out = Vec::with_capacity(64 * (records.len() + 1));
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.seed,
            r.axis,
            fmt_sig6(r.axis_value),
            r.class,
            fmt_sig6(r.mean_aoi_ticks),
            fmt_sig6(r.violation_rate),
            fmt_sig6(r.epsilon),
            r.compliant,
            fmt_sig6(r.mean_power_w),
            r.forced_ho,
            r.disc_ho,
            r.pingpong_events
        )?;
    }
    Ok(out)
}

/// Writes the CSV and JSON mirrors of a record set.
pub fn export_results(records: &[Record], dir: &Path, stem: &str) -> Result<()> {
    let csv = render_csv(records)?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    std::fs::write(&csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;
    let json_path = dir.join(format!("{stem}.json"));
    let json = serde_json::to_vec_pretty(records)?;
    std::fs::write(&json_path, json).with_context(|| format!("writing {}", json_path.display()))?;
    Ok(())
}

/// Compliance record mirrored to JSON.
#[derive(Debug, Clone, Serialize)]
pub struct ComplianceRecord {
    /// Priority class, 1-based.
    pub class: usize,
    /// Empirical violation rate.
    pub rate: f64,
    /// Budget.
    pub epsilon: f64,
    /// Whether the budget held.
    pub compliant: bool,
    /// Trailing-half backlog slope (stability diagnostic).
    pub z_slope: f64,
}

/// Serializes a run's compliance report as JSON records.
pub fn compliance_records(result: &RunResult) -> Vec<ComplianceRecord> {
    result
        .compliance
        .classes
        .iter()
        .enumerate()
        .map(|(m, c)| ComplianceRecord {
            class: m + 1,
            rate: c.violation_rate,
            epsilon: c.epsilon,
            compliant: c.compliant,
            z_slope: c.z_slope,
        })
        .collect()
}

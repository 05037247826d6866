//! Per-round experiment records and their CSV/JSON persistence.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::env::{OcoLoss, Setting};
use crate::Result;

/// One CSV row. Fields a given algorithm does not produce stay `None`
/// and serialize as empty cells.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub round: u64,
    /// `b_t`.
    pub observed_scale: f64,
    /// `B_t`.
    pub scale_max: f64,
    pub active_slaves: Option<usize>,
    pub potential: Option<f64>,
    pub restarted: bool,
    /// Cumulative regret against the run's reference comparator.
    pub regret_best: f64,
    pub bound: Option<f64>,
    pub slack: Option<f64>,
}

/// End-of-run summary, serialized as JSON next to the CSV.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub algorithm: String,
    pub rounds: u64,
    pub comparator: String,
    pub final_regret: f64,
    pub final_bound: Option<f64>,
    pub final_slack: Option<f64>,
    pub restart_count: u64,
    pub restart_rounds: Vec<u64>,
    /// Whether the iterated-log clamp in the expert bound was active.
    pub bound_clamped: bool,
    pub wall_time_ms: f64,
}

/// Everything one run produced: rows, the raw stream, and the played
/// points, enough to recompute any regret quantity offline.
#[derive(Debug, Clone)]
pub struct ExperimentTrace {
    pub name: String,
    pub algorithm: String,
    pub setting: Setting,
    pub rows: Vec<TraceRow>,
    /// Played weight vectors (expert) or points (optimization).
    pub played: Vec<Vec<f64>>,
    /// Expert setting: the raw loss vectors.
    pub expert_losses: Vec<Vec<f64>>,
    /// Optimization setting: the loss stream.
    pub oco_losses: Vec<OcoLoss>,
    /// Optimization setting: the true gradient at the played point.
    pub gradients: Vec<Vec<f64>>,
    pub summary: ExperimentSummary,
}

pub const CSV_HEADER: &str = "t,b_t,B_t,active_slaves,potential,restart,regret_best,bound,slack";

fn push_float(out: &mut String, value: f64) {
    // Shortest-roundtrip formatting: deterministic across platforms.
    out.push_str(&format!("{value}"));
}

impl ExperimentTrace {
    pub fn csv_string(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 64);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{}", row.round));
            out.push(',');
            push_float(&mut out, row.observed_scale);
            out.push(',');
            push_float(&mut out, row.scale_max);
            out.push(',');
            if let Some(n) = row.active_slaves {
                out.push_str(&format!("{n}"));
            }
            out.push(',');
            if let Some(p) = row.potential {
                push_float(&mut out, p);
            }
            out.push(',');
            out.push(if row.restarted { '1' } else { '0' });
            out.push(',');
            push_float(&mut out, row.regret_best);
            out.push(',');
            if let Some(b) = row.bound {
                push_float(&mut out, b);
            }
            out.push(',');
            if let Some(s) = row.slack {
                push_float(&mut out, s);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(self.csv_string().as_bytes())?;
        Ok(())
    }

    /// Writes `<name>.csv` and `<name>.summary.json` into `directory`;
    /// returns both paths.
    pub fn write_outputs(&self, directory: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(directory)?;
        let csv_path = directory.join(format!("{}.csv", self.name));
        std::fs::write(&csv_path, self.csv_string())?;
        let json_path = directory.join(format!("{}.summary.json", self.name));
        std::fs::write(&json_path, serde_json::to_string_pretty(&self.summary)?)?;
        Ok((csv_path, json_path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_trace() -> ExperimentTrace {
        ExperimentTrace {
            name: "sample".to_string(),
            algorithm: "squint+l".to_string(),
            setting: Setting::Expert,
            rows: vec![TraceRow {
                round: 1,
                observed_scale: 0.5,
                scale_max: 0.5,
                active_slaves: None,
                potential: Some(0.0),
                restarted: false,
                regret_best: 0.25,
                bound: Some(10.0),
                slack: Some(9.75),
            }],
            played: vec![vec![0.5, 0.5]],
            expert_losses: vec![vec![0.0, 1.0]],
            oco_losses: vec![],
            gradients: vec![],
            summary: ExperimentSummary {
                name: "sample".to_string(),
                algorithm: "squint+l".to_string(),
                rounds: 1,
                comparator: "expert 0".to_string(),
                final_regret: 0.25,
                final_bound: Some(10.0),
                final_slack: Some(9.75),
                restart_count: 0,
                restart_rounds: vec![],
                bound_clamped: true,
                wall_time_ms: 1.0,
            },
        }
    }

    #[test]
    fn csv_has_the_fixed_schema_and_empty_cells() {
        let trace = sample_trace();
        let csv = trace.csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(lines.next().unwrap(), "1,0.5,0.5,,0,0,0.25,10,9.75");
    }

    #[test]
    fn summary_serializes() {
        let trace = sample_trace();
        let json = serde_json::to_string(&trace.summary).unwrap();
        assert!(json.contains("\"restart_count\":0"));
        assert!(json.contains("\"bound_clamped\":true"));
    }
}

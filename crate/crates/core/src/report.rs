//! JSON run reports and CSV plot series.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::ErrorReport;
use crate::error::{MessError, Result};
use crate::metrics::EntropyTrace;
use crate::sampler::{EpsilonRule, HorizonEstimate, SampleResult};

/// Wall-clock seconds per named stage (`sampling`, `factorization`, ...).
pub type StageTimes = BTreeMap<String, f64>;

/// Top-level document written to `report.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_abs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_rule: Option<EpsilonRule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_snapshots: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected_indices: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_rel_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_satisfied: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<HorizonEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_exact: Option<bool>,
    pub cpu_seconds: StageTimes,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
}

impl RunReport {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            ..Default::default()
        }
    }

    /// Fills the sampling fields from a sampler result.
    pub fn with_sample(mut self, r: &SampleResult) -> Self {
        self.epsilon_abs = Some(r.epsilon_abs);
        self.epsilon_rule = Some(r.epsilon_rule);
        self.n_snapshots = Some(r.n_seen);
        self.selected_indices = Some(r.selected.clone());
        self.ell = Some(r.ell());
        self.stop_index = r.stop_index;
        self.horizon = r.horizon();
        self.trace_exact = Some(r.trace_exact);
        self
    }

    /// Fills the error fields from a reconstruction report.
    pub fn with_errors(mut self, e: &ErrorReport) -> Self {
        self.max_abs_error = Some(e.max_abs);
        self.max_rel_error = Some(e.max_rel);
        self.bound_satisfied = Some(e.within_radius());
        self
    }
}

/// One method's figures in a matched-size comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub ell: usize,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub cpu_seconds: StageTimes,
}

impl Branch {
    pub fn offline_seconds(&self) -> f64 {
        self.cpu_seconds.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub mess: Branch,
    pub svd: Branch,
}

/// Writes any serializable record as pretty-printed JSON.
pub fn write_report<T: Serialize>(record: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(record)
        .map_err(|e| MessError::Validation(format!("report not serializable: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| MessError::io(path, e))
}

/// Writes a numeric table with a header row.
pub fn write_table(path: impl AsRef<Path>, headers: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |e: csv::Error| MessError::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(headers).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:.16e}")))
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| MessError::io(path, e))
}

/// Writes `j, v_j, eta_j, h_j` rows; `h` is blank on the final row.
pub fn write_trace(trace: &EntropyTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |e: csv::Error| MessError::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["j", "v", "eta", "h"]).map_err(csv_err)?;
    for (i, (v, eta)) in trace.v.iter().zip(&trace.eta).enumerate() {
        let h = trace
            .h
            .get(i)
            .map(|h| format!("{h:.16e}"))
            .unwrap_or_default();
        w.write_record([
            (i + 1).to_string(),
            format!("{v:.16e}"),
            format!("{eta:.16e}"),
            h,
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| MessError::io(path, e))
}

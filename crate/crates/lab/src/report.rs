use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};

pub const REPORT_FILE: &str = "report.json";
pub const CONFIG_ECHO_FILE: &str = "config.effective.toml";

/// A named boolean check with the measured values it was decided on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub measured: BTreeMap<String, f64>,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            measured: BTreeMap::new(),
            detail: detail.into(),
        }
    }

    /// Records a measured value; non-finite values are left out because
    /// JSON cannot carry them.
    pub fn with(mut self, key: &str, value: f64) -> Self {
        if value.is_finite() {
            self.measured.insert(key.to_string(), value);
        }
        self
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: ExperimentKind,
    pub claim: String,
    pub inequality: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    /// CSV files (relative to the report) the verdicts are computed from
    pub files: Vec<String>,
    /// verdict inputs that are not CSV rows: frozen scales, slacks, grid data
    pub params: serde_json::Value,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    pub wall_time_s: f64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

/// Each consecutive value at most `(1 + slack)` times its predecessor.
pub fn monotone_within(v: &[f64], slack: f64) -> (bool, f64) {
    let worst = v
        .windows(2)
        .map(|w| w[1] / w[0])
        .fold(0.0f64, f64::max);
    (v.windows(2).all(|w| w[1] <= (1.0 + slack) * w[0]), worst)
}

pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

//! The five experiments. Each one writes typed CSV rows and derives its
//! verdicts from those rows plus a small parameter record kept in the
//! report, so `lab check` recomputes verdicts with the same functions.

use std::path::{Path, PathBuf};
use std::time::Instant;

use scorelab_core::density::{realize_density, DensityField};
use scorelab_core::grid::Grid;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::{DensityConfig, ExperimentConfig, ExperimentKind};
use crate::error::{Context, LabError, Result};
use crate::io;
use crate::report::{Report, Verdict, CONFIG_ECHO_FILE, REPORT_FILE};

pub mod moser_exact;
pub mod ode_vs_sde;
pub mod osc_converge;
pub mod score_sweep;
pub mod t_decay;

/// What an experiment hands back for report assembly.
pub struct Outcome {
    pub files: Vec<String>,
    pub params: serde_json::Value,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
}

pub(crate) fn to_value<T: Serialize>(p: &T) -> serde_json::Value {
    serde_json::to_value(p).expect("params serialize")
}

pub(crate) fn from_value<T: DeserializeOwned>(v: &serde_json::Value) -> Result<T> {
    serde_json::from_value(v.clone())
        .map_err(|e| LabError::Check(format!("report params do not parse: {e}")))
}

pub(crate) fn realize(d: &DensityConfig, grid: &Grid, what: &str) -> Result<DensityField> {
    realize_density(&d.to_spec(), grid).context(|| format!("realizing {what}"))
}

/// Runs the configured experiment into `out_dir` on the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    io::create_dir(out_dir)?;
    io::write_atomic(&out_dir.join(CONFIG_ECHO_FILE), cfg.to_toml().as_bytes())?;
    let start = Instant::now();
    log::info!("running {} into {}", cfg.experiment, out_dir.display());
    let out = match cfg.experiment {
        ExperimentKind::ScoreSweep => score_sweep::run(cfg, out_dir)?,
        ExperimentKind::TDecay => t_decay::run(cfg, out_dir)?,
        ExperimentKind::MoserExact => moser_exact::run(cfg, out_dir)?,
        ExperimentKind::OscConverge => osc_converge::run(cfg, out_dir)?,
        ExperimentKind::OdeVsSde => ode_vs_sde::run(cfg, out_dir)?,
    };
    let report = Report {
        experiment: cfg.experiment,
        claim: cfg.experiment.claim().to_string(),
        inequality: cfg.experiment.inequality().to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        files: out.files,
        params: out.params,
        verdicts: out.verdicts,
        notes: out.notes,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    io::write_json(&out_dir.join(REPORT_FILE), &report)?;
    Ok(report)
}

/// Result of re-deriving a report's verdicts from its CSVs.
pub struct CheckOutcome {
    pub report: Report,
    pub recomputed: Vec<Verdict>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.recomputed.iter().all(|v| v.passed)
    }
}

pub fn check_report(report_path: &Path) -> Result<CheckOutcome> {
    let report: Report = io::read_json(report_path)?;
    let dir: PathBuf = report_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    for f in &report.files {
        if !dir.join(f).exists() {
            return Err(LabError::Check(format!("missing output file {f}")));
        }
    }
    let mut recomputed = match report.experiment {
        ExperimentKind::ScoreSweep => score_sweep::check(&dir, &report.params)?,
        ExperimentKind::TDecay => t_decay::check(&dir, &report.params)?,
        ExperimentKind::MoserExact => moser_exact::check(&dir, &report.params)?,
        ExperimentKind::OscConverge => osc_converge::check(&dir, &report.params)?,
        ExperimentKind::OdeVsSde => ode_vs_sde::check(&dir, &report.params)?,
    };
    let names = |v: &[Verdict]| v.iter().map(|x| (x.name.clone(), x.passed)).collect::<Vec<_>>();
    if names(&recomputed) != names(&report.verdicts) {
        recomputed.push(Verdict::new(
            "stored verdicts agree with the CSVs",
            false,
            "the report's verdicts differ from those recomputed from its CSV files",
        ));
    }
    Ok(CheckOutcome { report, recomputed })
}

//! Experiment harness around `scorelab-core`: strict TOML configs, the five
//! experiments, CSV/JSON outputs, verdict re-checking and the golden
//! regression manifest. The `lab` binary is a thin clap front end.

use std::path::Path;

pub mod config;
pub mod error;
pub mod experiments;
pub mod golden;
pub mod io;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{LabError, Result};
pub use experiments::{check_report, run_experiment, CheckOutcome};
pub use report::{Report, Verdict};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "LAB_WORKERS";

/// Runs `cfg` into `out_dir` on a pool of `workers` threads (rayon's
/// default when `None`). Outputs do not depend on the worker count.
pub fn run_with_workers(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<Report> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = workers {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| LabError::Pool(e.to_string()))?;
    pool.install(|| run_experiment(cfg, out_dir))
}

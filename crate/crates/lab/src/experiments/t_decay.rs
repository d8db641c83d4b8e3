//! Terminal error of the exact-score reverse run started from uniform,
//! as a function of the horizon.

use std::path::Path;

use rayon::prelude::*;
use scorelab_core::density::uniform_density;
use scorelab_core::grid::neumann_spectral_gap;
use scorelab_core::score::{reverse_solve, run_forward, score_field};
use serde::{Deserialize, Serialize};

use super::{from_value, realize, to_value, Outcome};
use crate::config::ExperimentConfig;
use crate::error::{Context, Result};
use crate::io;
use crate::report::{slope, strictly_decreasing, Verdict};

pub const ROWS_FILE: &str = "t_decay.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub horizon: f64,
    /// `||rho_terminal - rho_d||` for the reverse run started from uniform
    pub terminal_error: f64,
    /// the same error when the reverse run starts from the exact `rho^f_T`
    pub exact_start_error: f64,
    /// `||rho^f_T - uniform||`
    pub noise_gap: f64,
    /// gap between the two reverse terminal densities
    pub init_component: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub spectral_gap: f64,
    pub tail_points: usize,
    pub rate_tolerance: f64,
}

/// Decay rate fitted to the last `k` rows of `column`.
pub fn tail_rate(rows: &[Row], k: usize, column: impl Fn(&Row) -> f64) -> f64 {
    let tail = &rows[rows.len().saturating_sub(k)..];
    let t: Vec<f64> = tail.iter().map(|r| r.horizon).collect();
    let y: Vec<f64> = tail.iter().map(|r| column(r).ln()).collect();
    -slope(&t, &y)
}

pub fn verdicts(rows: &[Row], p: &Params) -> Vec<Verdict> {
    if rows.len() < p.tail_points || p.tail_points < 2 {
        return vec![Verdict::new("tail rows present", false, "fewer rows than tail points")];
    }
    let tail = &rows[rows.len() - p.tail_points..];
    let errs: Vec<f64> = tail.iter().map(|r| r.terminal_error).collect();
    let lambda = tail_rate(rows, p.tail_points, |r| r.terminal_error);
    let rel = (lambda - p.spectral_gap).abs() / p.spectral_gap;
    let list = rows
        .iter()
        .map(|r| format!("T={}: {:.4e}", r.horizon, r.terminal_error))
        .collect::<Vec<_>>()
        .join(", ");
    vec![
        Verdict::new(
            "terminal error eventually decreasing",
            strictly_decreasing(&errs),
            format!("last {} of {list}", p.tail_points),
        )
        .with("tail_first", errs[0])
        .with("tail_last", *errs.last().unwrap()),
        Verdict::new(
            "tail decay rate matches the spectral gap",
            rel <= p.rate_tolerance,
            format!(
                "fitted rate {lambda:.4e} vs gap {:.6}, relative gap {rel:.3} (tolerance {})",
                p.spectral_gap, p.rate_tolerance
            ),
        )
        .with("fitted_rate", lambda)
        .with("spectral_gap", p.spectral_gap)
        .with("relative_error", rel),
    ]
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let solver = cfg.solver.to_config();
    let rho_d = realize(&cfg.densities.rho_d, &grid, "densities.rho_d")?;
    let uniform = uniform_density(&grid);
    let gap = neumann_spectral_gap(&grid).context(|| "spectral gap".into())?;
    let results = cfg
        .sweep
        .horizons
        .par_iter()
        .map(|&t| {
            let who = || format!("horizon {t}");
            let record = run_forward(&rho_d, t, &solver, 1).context(who)?;
            let score = score_field(&record).context(who)?;
            let h = record.reverse_horizon();
            let from_u = reverse_solve(&score, &uniform, h, &solver).context(who)?;
            let from_x = reverse_solve(&score, record.noise(), h, &solver).context(who)?;
            let dist = |a: &scorelab_core::density::DensityField,
                        b: &scorelab_core::density::DensityField| {
                a.field().sub(b.field()).context(who).map(|d| d.l2_norm())
            };
            let row = Row {
                horizon: t,
                terminal_error: dist(from_u.terminal(), &rho_d)?,
                exact_start_error: dist(from_x.terminal(), &rho_d)?,
                noise_gap: dist(record.noise(), &uniform)?,
                init_component: dist(from_u.terminal(), from_x.terminal())?,
            };
            Ok((row, from_u.terminal().clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut files = vec![ROWS_FILE.to_string()];
    for (row, terminal) in &results {
        let name = format!("terminal_T{}.csv", row.horizon);
        io::write_cell_field(&out.join(&name), terminal.field())?;
        files.push(name);
    }
    let rows: Vec<Row> = results.into_iter().map(|(r, _)| r).collect();
    io::write_csv(&out.join(ROWS_FILE), &rows)?;
    let params = Params {
        spectral_gap: gap,
        tail_points: cfg.sweep.tail_points,
        rate_tolerance: cfg.slack.rate_tolerance,
    };
    // the noise gap reaches rounding level within a few time units, so its
    // rate is read off the two shortest horizons
    let head = &rows[..rows.len().min(2)];
    let noise_rate = if head.len() == 2 {
        (head[0].noise_gap / head[1].noise_gap).ln() / (head[1].horizon - head[0].horizon)
    } else {
        f64::NAN
    };
    let notes = vec![
        format!(
            "noise gap ||rho^f_T - u|| decays at rate {noise_rate:.4} between the two shortest horizons (spectral gap {gap:.4})"
        ),
        format!(
            "terminal errors from uniform and from rho^f_T differ by at most {:.3e}",
            rows.iter()
                .map(|r| (r.terminal_error - r.exact_start_error).abs())
                .fold(0.0, f64::max)
        ),
    ];
    Ok(Outcome {
        files,
        verdicts: verdicts(&rows, &params),
        params: to_value(&params),
        notes,
    })
}

pub fn check(dir: &Path, params: &serde_json::Value) -> Result<Vec<Verdict>> {
    let rows: Vec<Row> = io::read_csv(&dir.join(ROWS_FILE))?;
    Ok(verdicts(&rows, &from_value(params)?))
}

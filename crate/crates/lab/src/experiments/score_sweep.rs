//! Perturbed-score ladder against the exact reverse densities.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use scorelab_core::grid::FaceField;
use scorelab_core::score::{
    perturbed_score_ladder, reverse_solve, run_forward, score_field, score_matching_loss_against,
    DENSITY_REVERSE_DRIFT_FACTOR,
};
use serde::{Deserialize, Serialize};

use super::{from_value, realize, to_value, Outcome};
use crate::config::ExperimentConfig;
use crate::error::{Context, Result};
use crate::io;
use crate::report::{strictly_decreasing, Verdict};

pub const ROWS_FILE: &str = "score_sweep.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub amplitude: f64,
    /// score-matching loss of the rung's score against the exact one
    pub loss: f64,
    pub sup_t_l2_error: f64,
    pub supnorm_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub reverse_horizon: f64,
    /// lowest cell value over the forward trajectory
    pub floor_min: f64,
    /// largest cell value over the forward trajectory
    pub rho_sup: f64,
    /// multiplier between score and density drift; the loss and sup-norm
    /// enter the bound through the drift, so `L -> f^2 L`, `sup -> f sup`
    pub drift_factor: f64,
}

/// `ln` of the right-hand side `(4/l) L exp(4 sup T) max||rho||_inf`.
pub fn log_bound(row: &Row, p: &Params) -> f64 {
    let f = p.drift_factor;
    (4.0 / p.floor_min).ln()
        + (f * f * row.loss).ln()
        + 4.0 * f * row.supnorm_bound * p.reverse_horizon
        + p.rho_sup.ln()
}

pub fn verdicts(rows: &[Row], p: &Params) -> Vec<Verdict> {
    if rows.is_empty() {
        return vec![Verdict::new("ladder rows present", false, "no rows")];
    }
    let errors: Vec<f64> = rows.iter().map(|r| r.sup_t_l2_error).collect();
    let losses: Vec<f64> = rows.iter().map(|r| r.loss).collect();
    let list = |v: &[f64]| v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(" > ");
    let mut out = vec![
        Verdict::new(
            "sup_t L2 error strictly decreasing along the ladder",
            rows.len() >= 2 && strictly_decreasing(&errors),
            format!("errors {}", list(&errors)),
        )
        .with("error_first", errors[0])
        .with("error_last", *errors.last().unwrap()),
        Verdict::new(
            "score-matching loss strictly decreasing along the ladder",
            rows.len() >= 2 && strictly_decreasing(&losses),
            format!("losses {}", list(&losses)),
        )
        .with("loss_first", losses[0])
        .with("loss_last", *losses.last().unwrap()),
    ];
    // margin = ln(bound) - ln(E^2); E = 0 satisfies any bound
    let margins: Vec<f64> = rows
        .iter()
        .map(|r| {
            if r.sup_t_l2_error == 0.0 {
                f64::INFINITY
            } else {
                log_bound(r, p) - 2.0 * r.sup_t_l2_error.ln()
            }
        })
        .collect();
    let worst = margins.iter().copied().fold(f64::INFINITY, f64::min);
    out.push(
        Verdict::new(
            "every rung satisfies E^2 <= (4/l) L exp(4 supnorm T) max_t ||rho||_inf",
            margins.iter().all(|m| *m >= 0.0),
            format!(
                "l = {:.4e}, T = {}, max rho = {:.4e}, factor {}; smallest log10(bound / E^2) = {:.2}",
                p.floor_min,
                p.reverse_horizon,
                p.rho_sup,
                p.drift_factor,
                worst / std::f64::consts::LN_10
            ),
        )
        .with("floor_min", p.floor_min)
        .with("rho_sup", p.rho_sup)
        .with("reverse_horizon", p.reverse_horizon)
        .with("min_log10_margin", worst / std::f64::consts::LN_10),
    );
    out
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let solver = cfg.solver.to_config();
    let rho_d = realize(&cfg.densities.rho_d, &grid, "densities.rho_d")?;
    let record = run_forward(&rho_d, cfg.horizon, &solver, 1).context(|| "forward run".into())?;
    let exact = score_field(&record).context(|| "exact score".into())?;
    let h = record.reverse_horizon();
    let reference = reverse_solve(&exact, record.noise(), h, &solver)
        .context(|| "reverse run with the exact score".into())?;
    let d = grid.dim();
    let shape = FaceField::from_vector_fn(grid, |x| {
        let mut v = [0.0; 2];
        for a in 0..d {
            v[a] = (PI * x[a]).sin();
        }
        v
    });
    let ladder = perturbed_score_ladder(&record, &cfg.sweep.amplitudes, &shape)
        .context(|| "building the score ladder".into())?;
    let rows = ladder
        .rungs
        .par_iter()
        .map(|rung| {
            let who = || format!("rung amplitude {}", rung.amplitude);
            let loss = score_matching_loss_against(&rung.field, &exact, &record).context(who)?;
            let traj = reverse_solve(&rung.field, record.noise(), h, &solver).context(who)?;
            Ok(Row {
                amplitude: rung.amplitude,
                loss,
                sup_t_l2_error: traj.sup_l2_distance(&reference).context(who)?,
                supnorm_bound: ladder.sup_norm_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fwd = &record.trajectory.densities;
    let params = Params {
        reverse_horizon: h,
        floor_min: fwd.iter().map(|r| r.floor()).fold(f64::INFINITY, f64::min),
        rho_sup: fwd.iter().map(|r| r.sup()).fold(0.0, f64::max),
        drift_factor: DENSITY_REVERSE_DRIFT_FACTOR,
    };
    io::write_csv(&out.join(ROWS_FILE), &rows)?;
    io::write_trajectory(&out.join("reference"), &reference, cfg.output.snapshot_stride)?;
    let notes = vec![format!(
        "score truncation epsilon = {}, exact score sup-norm = {:.4e}",
        record.score_floor_epsilon,
        exact.sup_norm()
    )];
    Ok(Outcome {
        files: vec![ROWS_FILE.into(), "reference/meta.csv".into()],
        verdicts: verdicts(&rows, &params),
        params: to_value(&params),
        notes,
    })
}

pub fn check(dir: &Path, params: &serde_json::Value) -> Result<Vec<Verdict>> {
    let rows: Vec<Row> = io::read_csv(&dir.join(ROWS_FILE))?;
    Ok(verdicts(&rows, &from_value(params)?))
}

//! Oscillating width-d schedules against the wide net they average to.

use std::path::Path;

use rayon::prelude::*;
use scorelab_core::fpe::{solve, Trajectory};
use scorelab_core::grid::Point;
use scorelab_core::metrics::log_log_slope;
use scorelab_core::moser::build_moser_field;
use scorelab_core::neural::{
    fit_wide_with, oscillation_schedule, schedule_as_timefield, weak_pairing_defect,
    wide_as_timefield,
};
use serde::{Deserialize, Serialize};

use super::{from_value, realize, to_value, Outcome};
use crate::config::ExperimentConfig;
use crate::error::{Context, Result};
use crate::io;
use crate::report::{monotone_within, Verdict};

pub const ROWS_FILE: &str = "osc_converge.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub periods: usize,
    pub sup_l2_error: f64,
    pub weak_defect_1: f64,
    pub weak_defect_2: f64,
    pub weak_defect_3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub monotone_slack: f64,
    pub min_reduction: f64,
    pub min_weak_order: f64,
}

/// Test functions of the weak pairing. They are affine in time, so the
/// four-point Gauss rule integrates each schedule piece exactly and the
/// defect isolates the oscillation.
pub fn test_function(k: usize, t: f64, x: Point) -> Point {
    use std::f64::consts::PI;
    let f = |v: f64| match k {
        0 => (1.0 + t) * (PI * v).cos(),
        1 => (2.0 - t) * (v - 0.5),
        _ => (0.5 + t) * v * v,
    };
    [f(x[0]), f(x[1])]
}

/// Largest L2 gap between `a` and the snapshots of `b` nearest in time.
pub fn sup_gap(a: &Trajectory, b: &Trajectory) -> f64 {
    a.times
        .iter()
        .zip(&a.densities)
        .map(|(t, rho)| {
            let (_, other) = b.nearest(*t);
            rho.field().sub(other.field()).map_or(f64::INFINITY, |d| d.l2_norm())
        })
        .fold(0.0, f64::max)
}

pub fn weak_orders(rows: &[Row]) -> [f64; 3] {
    let n: Vec<f64> = rows.iter().map(|r| r.periods as f64).collect();
    let col = |f: fn(&Row) -> f64| -log_log_slope(&n, &rows.iter().map(f).collect::<Vec<_>>());
    [
        col(|r| r.weak_defect_1),
        col(|r| r.weak_defect_2),
        col(|r| r.weak_defect_3),
    ]
}

pub fn verdicts(rows: &[Row], p: &Params) -> Vec<Verdict> {
    if rows.len() < 2 {
        return vec![Verdict::new("period sweep rows present", false, "need at least two N")];
    }
    let e: Vec<f64> = rows.iter().map(|r| r.sup_l2_error).collect();
    let (mono, worst) = monotone_within(&e, p.monotone_slack);
    let reduction = e[0] / e[e.len() - 1];
    let orders = weak_orders(rows);
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let listing = rows
        .iter()
        .map(|r| format!("N={}: {:.4e}", r.periods, r.sup_l2_error))
        .collect::<Vec<_>>()
        .join(", ");
    let (n0, n1) = (rows[0].periods, rows[rows.len() - 1].periods);
    vec![
        Verdict::new(
            "sup_t trajectory error monotone nonincreasing within slack",
            mono,
            format!("{listing}; largest step ratio {worst:.4} (allowed {})", 1.0 + p.monotone_slack),
        )
        .with("worst_step_ratio", worst),
        Verdict::new(
            "trajectory error reduction from first to last N",
            reduction >= p.min_reduction,
            format!("error(N={n0}) / error(N={n1}) = {reduction:.3} (required {})", p.min_reduction),
        )
        .with("reduction", reduction),
        Verdict::new(
            "weak-* pairing defect order in 1/N",
            orders.iter().all(|o| *o >= p.min_weak_order),
            format!(
                "fitted orders {:.3} / {:.3} / {:.3} (required {})",
                orders[0], orders[1], orders[2], p.min_weak_order
            ),
        )
        .with("order_1", orders[0])
        .with("order_2", orders[1])
        .with("order_3", orders[2])
        .with("min_order", min_order),
    ]
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let solver = cfg.solver.to_config();
    let t_end = cfg.horizon;
    let rho0 = realize(&cfg.densities.rho_0, &grid, "densities.rho_0")?;
    let rhod = realize(&cfg.densities.rho_d, &grid, "densities.rho_d")?;
    let moser = build_moser_field(&rho0, &rhod).context(|| "Moser target field".into())?;
    let target = moser.drift(0.5);
    let (net, fit) = fit_wide_with(
        &grid,
        |x| target.interpolate(x),
        cfg.fit.width,
        cfg.fit.activation(),
        cfg.seed,
        &cfg.fit.options(),
    )
    .context(|| format!("fitting the width-{} net", cfg.fit.width))?;
    let wide = wide_as_timefield(&net, &grid, t_end).context(|| "wide net drift".into())?;
    let reference = solve(&rho0, &wide, t_end, &solver).context(|| "wide net reference".into())?;
    let rows = cfg
        .sweep
        .periods
        .par_iter()
        .map(|&n| {
            let who = || format!("N = {n}");
            let schedule = oscillation_schedule(&net, n, t_end).context(who)?;
            let drift = schedule_as_timefield(&schedule, &grid).context(who)?;
            let traj = solve(&rho0, &drift, t_end, &solver).context(who)?;
            let mut weak = [0.0; 3];
            for (k, w) in weak.iter_mut().enumerate() {
                *w = weak_pairing_defect(&schedule, &net, &grid, |t, x| test_function(k, t, x))
                    .context(who)?;
            }
            io::write_schedule(&out.join(format!("schedule_N{n}.csv")), &schedule)?;
            Ok(Row {
                periods: n,
                sup_l2_error: sup_gap(&reference, &traj),
                weak_defect_1: weak[0],
                weak_defect_2: weak[1],
                weak_defect_3: weak[2],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    io::write_csv(&out.join(ROWS_FILE), &rows)?;
    io::write_trajectory(&out.join("reference"), &reference, cfg.output.snapshot_stride)?;
    let params = Params {
        monotone_slack: cfg.slack.monotone,
        min_reduction: cfg.slack.min_reduction,
        min_weak_order: cfg.slack.min_weak_order,
    };
    let mut notes = vec![format!(
        "fit: width {}, max residual {:.4e}, ridge {:.1e}, net Lipschitz bound {:.4e}, target sup-norm {:.4e}",
        net.width(),
        fit.residual,
        fit.ridge,
        net.lipschitz(),
        target.sup_norm()
    )];
    notes.extend(fit.warnings.iter().cloned());
    let mut files = vec![ROWS_FILE.to_string(), "reference/meta.csv".into()];
    files.extend(cfg.sweep.periods.iter().map(|n| format!("schedule_N{n}.csv")));
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

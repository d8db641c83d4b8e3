//! Moser transfer from `rho_0` to `rho_d` (and to every extra density).

use std::path::Path;

use rayon::prelude::*;
use scorelab_core::density::DensityField;
use scorelab_core::fpe::{solve, SolverConfig};
use scorelab_core::moser::{build_moser_field, MoserField};
use serde::{Deserialize, Serialize};

use super::{from_value, realize, to_value, Outcome};
use crate::config::ExperimentConfig;
use crate::error::{Context, Result};
use crate::golden;
use crate::io;
use crate::report::Verdict;

pub const PATH_FILE: &str = "moser_path.csv";
pub const SUMMARY_FILE: &str = "moser_summary.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub t: f64,
    /// `||rho_t - ((1 - t) rho_0 + t rho_d)||`
    pub interpolation_defect: f64,
    pub mass: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub pair: usize,
    pub sup_norm: f64,
    pub empirical_2c: f64,
    pub transfer_defect: f64,
    pub path_defect: f64,
    pub mean_shift: f64,
    pub poisson_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub dx: f64,
    pub dt: f64,
    /// frozen calibration constant from the golden manifest
    pub scale: f64,
    pub budget_factor: f64,
    pub stability_ratio: f64,
}

impl Params {
    pub fn budget(&self) -> f64 {
        self.budget_factor * (self.dx * self.dx + self.dt) * self.scale
    }
}

pub fn verdicts(path: &[PathRow], summary: &[SummaryRow], p: &Params) -> Vec<Verdict> {
    let Some(primary) = summary.iter().find(|r| r.pair == 0) else {
        return vec![Verdict::new("primary pair present", false, "no summary row for pair 0")];
    };
    let budget = p.budget();
    let path_max = path
        .iter()
        .map(|r| r.interpolation_defect)
        .fold(0.0f64, f64::max);
    let c: Vec<f64> = summary
        .iter()
        .map(|r| r.empirical_2c)
        .filter(|v| v.is_finite())
        .collect();
    let (lo, hi) = c
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let ratio = if c.is_empty() { 1.0 } else { hi / lo };
    let budget_text = format!(
        "{} (dx^2 + dt) scale = {} ({:.4e} + {}) {:.4} = {budget:.4e}",
        p.budget_factor,
        p.budget_factor,
        p.dx * p.dx,
        p.dt,
        p.scale
    );
    vec![
        Verdict::new(
            "unit-time transfer defect within budget",
            primary.transfer_defect <= budget,
            format!(
                "||rho_1 - rho_d|| = {:.4e} <= {budget_text}",
                primary.transfer_defect
            ),
        )
        .with("transfer_defect", primary.transfer_defect)
        .with("budget", budget),
        Verdict::new(
            "pathwise interpolation defect within budget at every stored instant",
            !path.is_empty() && path_max <= budget,
            format!("max_t ||rho_t - interpolant_t|| = {path_max:.4e} over {} instants", path.len()),
        )
        .with("path_defect", path_max)
        .with("budget", budget),
        Verdict::new(
            "empirical 2C stable across density pairs",
            ratio <= p.stability_ratio,
            format!(
                "2C over {} pairs in [{lo:.4e}, {hi:.4e}], max/min = {ratio:.3} (allowed {})",
                c.len(),
                p.stability_ratio
            ),
        )
        .with("min_2c", lo)
        .with("max_2c", hi)
        .with("ratio", ratio),
    ]
}

pub struct Transfer {
    pub field: MoserField,
    pub path: Vec<PathRow>,
    pub summary: SummaryRow,
}

/// Builds the field and integrates it over unit time.
pub fn transfer(
    pair: usize,
    rho0: &DensityField,
    rhod: &DensityField,
    solver: &SolverConfig,
) -> Result<Transfer> {
    let who = || format!("density pair {pair}");
    let field = build_moser_field(rho0, rhod).context(who)?;
    let drift = field.as_timefield().context(who)?;
    let traj = solve(rho0, &drift, 1.0, solver).context(who)?;
    let mut path = Vec::with_capacity(traj.len());
    for (t, rho) in traj.times.iter().zip(&traj.densities) {
        path.push(PathRow {
            t: *t,
            interpolation_defect: rho.field().sub(&field.interpolant(*t)).context(who)?.l2_norm(),
            mass: rho.mass(),
            floor: rho.floor(),
        });
    }
    let summary = SummaryRow {
        pair,
        sup_norm: field.sup_norm,
        empirical_2c: field.empirical_2c,
        transfer_defect: traj.terminal().field().sub(rhod.field()).context(who)?.l2_norm(),
        path_defect: path.iter().map(|r| r.interpolation_defect).fold(0.0, f64::max),
        mean_shift: field.mean_shift,
        poisson_residual: field.poisson_residual,
    };
    Ok(Transfer {
        field,
        path,
        summary,
    })
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let solver = cfg.solver.to_config();
    let rho0 = realize(&cfg.densities.rho_0, &grid, "densities.rho_0")?;
    let mut targets = vec![realize(&cfg.densities.rho_d, &grid, "densities.rho_d")?];
    for (i, e) in cfg.densities.extra.iter().enumerate() {
        targets.push(realize(e, &grid, &format!("densities.extra[{i}]"))?);
    }
    let mut runs = targets
        .par_iter()
        .enumerate()
        .map(|(k, rhod)| transfer(k, &rho0, rhod, &solver))
        .collect::<Result<Vec<_>>>()?;
    let primary = runs.remove(0);
    let mut summary = vec![primary.summary.clone()];
    summary.extend(runs.iter().map(|r| r.summary.clone()));
    io::write_csv(&out.join(PATH_FILE), &primary.path)?;
    io::write_csv(&out.join(SUMMARY_FILE), &summary)?;
    io::write_cell_field(&out.join("potential.csv"), &primary.field.phi)?;
    let params = Params {
        dx: grid.max_cell_width(),
        dt: solver.dt,
        scale: golden::manifest().moser.scale,
        budget_factor: cfg.slack.budget_factor,
        stability_ratio: cfg.slack.stability_ratio,
    };
    let mut notes = Vec::new();
    for r in &summary {
        if r.mean_shift.abs() > 1e-12 {
            notes.push(format!(
                "pair {}: removed mean {:.3e} from rho_d - rho_0 before the Poisson solve",
                r.pair, r.mean_shift
            ));
        }
    }
    Ok(Outcome {
        files: vec![PATH_FILE.into(), SUMMARY_FILE.into(), "potential.csv".into()],
        verdicts: verdicts(&primary.path, &summary, &params),
        params: to_value(&params),
        notes,
    })
}

pub fn check(dir: &Path, params: &serde_json::Value) -> Result<Vec<Verdict>> {
    let path: Vec<PathRow> = io::read_csv(&dir.join(PATH_FILE))?;
    let summary: Vec<SummaryRow> = io::read_csv(&dir.join(SUMMARY_FILE))?;
    Ok(verdicts(&path, &summary, &from_value(params)?))
}

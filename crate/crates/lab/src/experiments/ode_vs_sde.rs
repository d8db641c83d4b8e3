//! Flow ODE against the diffusive reverse equation on the same perturbed
//! score, and reflected particles against both PDEs. A demonstration: the
//! verdicts cover the particle-PDE consistency only.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use scorelab_core::density::DensityField;
use scorelab_core::fpe::{solve_continuity, SolverConfig, TimeField};
use scorelab_core::grid::{FaceField, Grid};
use scorelab_core::metrics::{l2_distance, w1_distance};
use scorelab_core::particles::{
    histogram_density, sample_from_density, step_plan, ParticleConfig, ParticleEnsemble,
};
use scorelab_core::score::{reverse_solve, run_forward, score_field, ForwardRecord};
use scorelab_core::Error as CoreError;
use serde::{Deserialize, Serialize};

use super::{from_value, realize, to_value, Outcome};
use crate::config::ExperimentConfig;
use crate::error::{Context, Result};
use crate::io;
use crate::report::Verdict;

pub const PARTICLES_FILE: &str = "ode_vs_sde_particles.csv";
pub const PDE_FILE: &str = "ode_vs_sde_pde.csv";
/// fraction of the CFL limit used by the transport solves
pub const CFL_FRACTION: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    ReverseSde,
    FlowOde,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::ReverseSde => "reverse-sde",
            Mode::FlowOde => "flow-ode",
        }
    }

    fn particle_config(self, dt: f64) -> ParticleConfig {
        match self {
            Mode::ReverseSde => ParticleConfig::reverse_sde(dt),
            Mode::FlowOde => ParticleConfig::flow_ode(dt),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleRow {
    pub case: usize,
    pub mode: Mode,
    pub n_particles: usize,
    pub w1: f64,
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeRow {
    pub case: usize,
    pub amplitude: f64,
    pub flow_l2_error: f64,
    pub diffusion_l2_error: f64,
    /// flow error over diffusion error
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub cell_width: f64,
    pub particle_noise: f64,
    pub particle_cells: f64,
}

impl Params {
    pub fn budget(&self, n: usize) -> f64 {
        self.particle_noise / (n as f64).sqrt() + self.particle_cells * self.cell_width
    }
}

pub fn verdicts(rows: &[ParticleRow], p: &Params) -> Vec<Verdict> {
    if rows.is_empty() {
        return vec![Verdict::new("particle rows present", false, "no rows")];
    }
    rows.iter()
        .map(|r| {
            let budget = p.budget(r.n_particles);
            Verdict::new(
                format!("case {} {}: W1(histogram, PDE terminal) within budget", r.case, r.mode.name()),
                r.w1 <= budget,
                format!(
                    "W1 = {:.4e} <= {} / sqrt({}) + {} * {} = {budget:.4e}",
                    r.w1, p.particle_noise, r.n_particles, p.particle_cells, p.cell_width
                ),
            )
            .with("w1", r.w1)
            .with("budget", budget)
        })
        .collect()
}

/// Advances every particle through all steps, particles in parallel. Each
/// particle owns its random stream, so the result matches the serial
/// `simulate` bit for bit.
pub fn simulate_parallel(
    ens: &mut ParticleEnsemble,
    drift: &TimeField,
    horizon: f64,
    cfg: &ParticleConfig,
) -> scorelab_core::Result<()> {
    if !(cfg.dt > 0.0) {
        return Err(CoreError::InvalidArgument("particle dt must be positive".into()));
    }
    if horizon > drift.horizon() * (1.0 + 1e-12) {
        return Err(CoreError::HorizonMismatch {
            expected: drift.horizon(),
            got: horizon,
        });
    }
    let (n, h) = step_plan(horizon, cfg.dt);
    let dim = ens.dim;
    ens.particles.par_iter_mut().for_each(|p| {
        for s in 0..n {
            let field = drift.at(s as f64 * h);
            p.sde_step(dim, field.as_ref(), h, cfg.reverse_drift_factor, cfg.diffusion_scale);
        }
    });
    for _ in 0..n {
        ens.t += h;
    }
    Ok(())
}

/// Step satisfying the transport CFL restriction with margin.
pub fn transport_config(drift: &TimeField, grid: &Grid, solver: &SolverConfig) -> SolverConfig {
    let h_min = (0..grid.dim()).map(|a| grid.cell_width(a)).fold(f64::INFINITY, f64::min);
    let s = drift.sup_norm();
    let dt = if s > 0.0 {
        solver.dt.min(CFL_FRACTION * h_min / s)
    } else {
        solver.dt
    };
    SolverConfig { dt, ..*solver }
}

struct Case {
    record: ForwardRecord,
    score: TimeField,
}

fn pde_terminal(
    case: &Case,
    drift: &TimeField,
    mode: Mode,
    grid: &Grid,
    solver: &SolverConfig,
) -> scorelab_core::Result<DensityField> {
    let h = case.record.reverse_horizon();
    let traj = match mode {
        Mode::ReverseSde => reverse_solve(drift, case.record.noise(), h, solver)?,
        Mode::FlowOde => {
            let cfg = transport_config(drift, grid, solver);
            solve_continuity(case.record.noise(), drift, h, &cfg)?
        }
    };
    Ok(traj.terminal().clone())
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let solver = cfg.solver.to_config();
    let mut data = vec![realize(&cfg.densities.rho_d, &grid, "densities.rho_d")?];
    for (i, e) in cfg.densities.extra.iter().enumerate() {
        data.push(realize(e, &grid, &format!("densities.extra[{i}]"))?);
    }
    let cases = data
        .par_iter()
        .enumerate()
        .map(|(k, rho_d)| {
            let who = || format!("case {k}: forward run");
            let record = run_forward(rho_d, cfg.horizon, &solver, 1).context(who)?;
            let score = score_field(&record).context(who)?;
            Ok(Case { record, score })
        })
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, Mode)> = (0..cases.len())
        .flat_map(|k| [(k, Mode::ReverseSde), (k, Mode::FlowOde)])
        .collect();
    let n = cfg.particles.count;
    let params = Params {
        cell_width: grid.max_cell_width(),
        particle_noise: cfg.slack.particle_noise,
        particle_cells: cfg.slack.particle_cells,
    };
    let particle_rows = jobs
        .par_iter()
        .map(|&(k, mode)| {
            let who = || format!("case {k} {}", mode.name());
            let case = &cases[k];
            let pde = pde_terminal(case, &case.score, mode, &grid, &solver).context(who)?;
            let seed = cfg.seed.wrapping_add(2 * k as u64 + (mode == Mode::FlowOde) as u64);
            let mut ens = sample_from_density(case.record.noise(), n, seed);
            let pc = mode.particle_config(cfg.particles.dt);
            simulate_parallel(&mut ens, &case.score, case.record.reverse_horizon(), &pc)
                .context(who)?;
            let hist = histogram_density(&ens, &grid).context(who)?;
            let w1 = w1_distance(&hist, &pde).context(who)?.value;
            let stem = format!("case{k}_{}", mode.name());
            io::write_ensemble(&out.join(format!("{stem}_particles.csv")), &ens)?;
            io::write_cell_field(&out.join(format!("{stem}_histogram.csv")), hist.field())?;
            io::write_cell_field(&out.join(format!("{stem}_pde.csv")), pde.field())?;
            Ok(ParticleRow {
                case: k,
                mode,
                n_particles: n,
                w1,
                budget: params.budget(n),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let d = grid.dim();
    let shape = FaceField::from_vector_fn(grid, |x| {
        let mut v = [0.0; 2];
        for a in 0..d {
            v[a] = (PI * x[a]).sin();
        }
        v
    });
    let pde_jobs: Vec<(usize, f64)> = (0..cases.len())
        .flat_map(|k| cfg.sweep.amplitudes.iter().map(move |&a| (k, a)))
        .collect();
    let pde_rows = pde_jobs
        .par_iter()
        .map(|&(k, a)| {
            let who = || format!("case {k} amplitude {a}");
            let case = &cases[k];
            let drift = case.score.offset(&shape, a).context(who)?;
            let flow = pde_terminal(case, &drift, Mode::FlowOde, &grid, &solver).context(who)?;
            let diff = pde_terminal(case, &drift, Mode::ReverseSde, &grid, &solver).context(who)?;
            let fe = l2_distance(&flow.into_field(), data[k].field()).context(who)?;
            let de = l2_distance(&diff.into_field(), data[k].field()).context(who)?;
            Ok(PdeRow {
                case: k,
                amplitude: a,
                flow_l2_error: fe,
                diffusion_l2_error: de,
                ratio: fe / de,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    io::write_csv(&out.join(PARTICLES_FILE), &particle_rows)?;
    io::write_csv(&out.join(PDE_FILE), &pde_rows)?;
    let notes = cases
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let t = transport_config(&c.score, &grid, &solver);
            format!(
                "case {k}: exact score sup-norm {:.4e}, transport dt {:.4e}, particle dt {}",
                c.score.sup_norm(),
                t.dt,
                cfg.particles.dt
            )
        })
        .collect();
    Ok(Outcome {
        files: vec![PARTICLES_FILE.into(), PDE_FILE.into()],
        verdicts: verdicts(&particle_rows, &params),
        params: to_value(&params),
        notes,
    })
}

pub fn check(dir: &Path, params: &serde_json::Value) -> Result<Vec<Verdict>> {
    let rows: Vec<ParticleRow> = io::read_csv(&dir.join(PARTICLES_FILE))?;
    Ok(verdicts(&rows, &from_value(params)?))
}

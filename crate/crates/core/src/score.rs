//! Forward heat process, its exact score, the weighted score-matching loss
//! and the reverse density evolution.

use alloc::vec::Vec;
// libm-backed f64 methods; rustc misreports this import as unused
#[allow(unused_imports)]
use num_traits::Float;

use crate::density::{log_gradient, DensityField};
use crate::error::{Error, Result};
use crate::fpe::{integrate, solve_heat, SolverConfig, TimeField, Trajectory};
use crate::grid::FaceField;
use crate::metrics::weighted_l2_sq;

/// Drift multiplier turning the score into the reverse drift of the
/// diffusive density equation. With unit diffusion kept in the reverse
/// equation, a factor of one leaves the forward density stationary instead
/// of reversing it.
pub const DENSITY_REVERSE_DRIFT_FACTOR: f64 = 2.0;

/// Reverse integration stops this many solver steps short of `T`.
pub const EPSILON_STEPS: f64 = 2.0;

/// Stored forward heat trajectory started from the data density.
#[derive(Debug, Clone)]
pub struct ForwardRecord {
    pub trajectory: Trajectory,
    pub horizon: f64,
    /// first stored forward time at or after `2 dt`; reverse time stops at
    /// `horizon - score_floor_epsilon`
    pub score_floor_epsilon: f64,
    /// index of that snapshot in the trajectory
    eps_index: usize,
}

impl ForwardRecord {
    pub fn data(&self) -> &DensityField {
        self.trajectory.initial()
    }

    pub fn noise(&self) -> &DensityField {
        self.trajectory.terminal()
    }

    /// Last reverse time at which the score is available.
    pub fn reverse_horizon(&self) -> f64 {
        self.horizon - self.score_floor_epsilon
    }

    /// Forward snapshot used at reverse time `t`.
    pub fn forward_at_reverse(&self, t: f64) -> &DensityField {
        self.trajectory.nearest(self.horizon - t).1
    }

    /// Reverse-time instants at which a snapshot is stored, increasing, from
    /// `0` to the reverse horizon.
    pub fn reverse_instants(&self) -> Vec<f64> {
        let times = &self.trajectory.times;
        (self.eps_index..times.len())
            .rev()
            .map(|k| self.horizon - times[k])
            .collect()
    }

    fn reverse_snapshots(&self) -> impl Iterator<Item = &DensityField> {
        self.trajectory.densities[self.eps_index..].iter().rev()
    }
}

/// Runs the heat equation from `rho_d` to `horizon`, storing every
/// `stride`-th step.
pub fn run_forward(
    rho_d: &DensityField,
    horizon: f64,
    cfg: &SolverConfig,
    stride: usize,
) -> Result<ForwardRecord> {
    let cfg = SolverConfig {
        diffusion: true,
        ..*cfg
    };
    let trajectory = if stride <= 1 {
        solve_heat(rho_d, horizon, &cfg)?
    } else {
        let zero = TimeField::zero(*rho_d.grid(), horizon)?;
        integrate(rho_d, &zero, horizon, &cfg, stride)?
    };
    let target = EPSILON_STEPS * cfg.dt * (1.0 - 1e-9);
    let eps_index = trajectory
        .times
        .iter()
        .position(|&t| t >= target)
        .filter(|&k| k + 1 < trajectory.len())
        .ok_or_else(|| {
            Error::InvalidArgument(alloc::format!(
                "horizon {horizon} leaves no room for the score truncation 2dt"
            ))
        })?;
    Ok(ForwardRecord {
        score_floor_epsilon: trajectory.times[eps_index],
        trajectory,
        horizon,
        eps_index,
    })
}

/// Score of the stored snapshot nearest to forward time `T - t`, evaluated
/// on faces as the log-gradient.
pub fn exact_score(record: &ForwardRecord, t: f64) -> Result<FaceField> {
    let limit = record.reverse_horizon();
    if !(t >= 0.0) || t > limit * (1.0 + 1e-12) {
        return Err(Error::ScoreHorizon { t, limit });
    }
    log_gradient(record.forward_at_reverse(t).field())
}

/// The exact score as a reverse-time drift on `[0, T - eps]`: on each
/// interval between stored instants, the score of the snapshot at the
/// interval's right end, which is the density an implicit step lands on.
pub fn score_field(record: &ForwardRecord) -> Result<TimeField> {
    let instants = record.reverse_instants();
    let fields = record
        .reverse_snapshots()
        .skip(1)
        .map(|rho| log_gradient(rho.field()))
        .collect::<Result<Vec<_>>>()?;
    TimeField::piecewise(instants, fields)
}

/// Trapezoid rule over the stored reverse instants of the
/// `rho^f_{T-t}`-weighted squared face distance between `candidate` and the
/// exact score field.
pub fn score_matching_loss(candidate: &TimeField, record: &ForwardRecord) -> Result<f64> {
    let exact = score_field(record)?;
    score_matching_loss_against(candidate, &exact, record)
}

/// As [`score_matching_loss`] with a precomputed exact score field.
pub fn score_matching_loss_against(
    candidate: &TimeField,
    exact: &TimeField,
    record: &ForwardRecord,
) -> Result<f64> {
    let h = record.reverse_horizon();
    if (candidate.horizon() - h).abs() > 1e-9 * h.max(1.0) {
        return Err(Error::HorizonMismatch {
            expected: h,
            got: candidate.horizon(),
        });
    }
    if candidate.grid() != record.data().grid() {
        return Err(Error::GridMismatch);
    }
    let instants = record.reverse_instants();
    let mut values = Vec::with_capacity(instants.len());
    for (t, rho) in instants.iter().zip(record.reverse_snapshots()) {
        let diff = candidate.at(*t).sub(&exact.at(*t))?;
        values.push(weighted_l2_sq(&diff, rho.field())?);
    }
    Ok(instants
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum())
}

#[derive(Debug, Clone)]
pub struct LadderRung {
    pub amplitude: f64,
    pub field: TimeField,
}

/// Exact score plus decreasing multiples of a fixed shape.
#[derive(Debug, Clone)]
pub struct ScoreLadder {
    pub rungs: Vec<LadderRung>,
    /// common bound on the sup-norm of every rung
    pub sup_norm_bound: f64,
}

pub fn perturbed_score_ladder(
    record: &ForwardRecord,
    amplitudes: &[f64],
    shape: &FaceField,
) -> Result<ScoreLadder> {
    if amplitudes.is_empty() {
        return Err(Error::InvalidArgument("empty amplitude list".into()));
    }
    if amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::InvalidArgument(
            "amplitudes must be finite and nonnegative".into(),
        ));
    }
    if amplitudes.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(
            "amplitudes must be strictly decreasing".into(),
        ));
    }
    let s = shape.sup_norm();
    if !s.is_finite() {
        return Err(Error::InvalidArgument("shape is not bounded".into()));
    }
    let exact = score_field(record)?;
    let rungs = amplitudes
        .iter()
        .map(|&a| {
            Ok(LadderRung {
                amplitude: a,
                field: exact.offset(shape, a)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreLadder {
        sup_norm_bound: exact.sup_norm() + amplitudes[0] * s,
        rungs,
    })
}

/// Solves the diffusive density equation forward in the solver clock with
/// drift `DENSITY_REVERSE_DRIFT_FACTOR * score` on `[0, horizon]`.
pub fn reverse_solve(
    score: &TimeField,
    rho_start: &DensityField,
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    reverse_solve_strided(score, rho_start, horizon, cfg, 1)
}

pub fn reverse_solve_strided(
    score: &TimeField,
    rho_start: &DensityField,
    horizon: f64,
    cfg: &SolverConfig,
    stride: usize,
) -> Result<Trajectory> {
    let cfg = SolverConfig {
        diffusion: true,
        ..*cfg
    };
    let drift = score.scaled(DENSITY_REVERSE_DRIFT_FACTOR);
    integrate(rho_start, &drift, horizon, &cfg, stride)
}

/// Largest L2 gap between a reverse trajectory and the forward snapshots it
/// should retrace.
pub fn retrace_defect(reverse: &Trajectory, record: &ForwardRecord) -> Result<f64> {
    let mut m = 0.0f64;
    for (t, rho) in reverse.times.iter().zip(&reverse.densities) {
        let target = record.forward_at_reverse(*t);
        m = m.max(rho.field().sub(target.field())?.l2_norm());
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundTrip {
    /// sup over stored instants of the L2 gap to the forward snapshot
    pub sup_defect: f64,
    /// L2 gap between the reverse terminal density and the data
    pub terminal_defect: f64,
    pub epsilon: f64,
    pub score_sup: f64,
}

/// Forward to `horizon`, then reverse with the exact score from the
/// stored terminal density.
pub fn round_trip(rho_d: &DensityField, horizon: f64, cfg: &SolverConfig) -> Result<RoundTrip> {
    let record = run_forward(rho_d, horizon, cfg, 1)?;
    let score = score_field(&record)?;
    let rev = reverse_solve(&score, record.noise(), record.reverse_horizon(), cfg)?;
    Ok(RoundTrip {
        sup_defect: retrace_defect(&rev, &record)?,
        terminal_defect: rev.terminal().field().sub(rho_d.field())?.l2_norm(),
        epsilon: record.score_floor_epsilon,
        score_sup: score.sup_norm(),
    })
}

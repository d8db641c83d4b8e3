//! Declarative experiment configs.
//!
//! Configs are TOML. Every table rejects unknown keys, missing optional
//! values are filled from the defaults below, and validation reports every
//! violated field at once. The effective config (defaults included) is
//! echoed next to the outputs as `config.effective.toml`.

use std::fmt;
use std::path::{Path, PathBuf};

use scorelab_core::density::{Component, DensitySpec, Family};
use scorelab_core::fpe::{Scheme, SolverConfig};
use scorelab_core::grid::Grid;
use scorelab_core::neural::{Activation, ActivationKind, FitOptions};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const DEFAULT_CELLS: usize = 128;
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "SCORE-SWEEP")]
    ScoreSweep,
    #[serde(rename = "T-DECAY")]
    TDecay,
    #[serde(rename = "MOSER-EXACT")]
    MoserExact,
    #[serde(rename = "OSC-CONVERGE")]
    OscConverge,
    #[serde(rename = "ODE-VS-SDE")]
    OdeVsSde,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::ScoreSweep,
        ExperimentKind::TDecay,
        ExperimentKind::MoserExact,
        ExperimentKind::OscConverge,
        ExperimentKind::OdeVsSde,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ScoreSweep => "SCORE-SWEEP",
            ExperimentKind::TDecay => "T-DECAY",
            ExperimentKind::MoserExact => "MOSER-EXACT",
            ExperimentKind::OscConverge => "OSC-CONVERGE",
            ExperimentKind::OdeVsSde => "ODE-VS-SDE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// The result under test, in words.
    pub fn claim(self) -> &'static str {
        match self {
            ExperimentKind::ScoreSweep => {
                "score approximation: as a perturbed score tends to the exact score, the \
                 reverse densities converge uniformly in time in L2"
            }
            ExperimentKind::TDecay => {
                "samplable class: for a density with a positive floor, the terminal error of \
                 the reverse process started from uniform decays like exp(-lambda T)"
            }
            ExperimentKind::MoserExact => {
                "exact controllability: the Moser field transfers rho_0 to rho_d in unit time \
                 along the linear interpolation, with a drift bounded by 2C"
            }
            ExperimentKind::OscConverge => {
                "trajectory approximation: T/N-periodic piecewise-constant width-d weights \
                 track the density driven by a wide network as N grows"
            }
            ExperimentKind::OdeVsSde => {
                "demonstration (not a theorem test): flow ODE versus diffusive reverse \
                 equation under the same perturbed drift, plus particle-level consistency"
            }
        }
    }

    /// The inequality or check verdicted by the experiment.
    pub fn inequality(self) -> &'static str {
        match self {
            ExperimentKind::ScoreSweep => {
                "E^2 <= (4/l) L exp(4 supnorm T) max_t ||rho||_inf per rung, E strictly decreasing"
            }
            ExperimentKind::TDecay => {
                "terminal error eventually decreasing; tail rate within tolerance of the spectral gap"
            }
            ExperimentKind::MoserExact => {
                "||rho_1 - rho_d|| and sup_t ||rho_t - interpolant_t|| <= factor (dx^2 + dt) scale; 2C stable across pairs"
            }
            ExperimentKind::OscConverge => {
                "sup_t error monotone within slack, reduced by the minimum factor, weak defect order >= minimum"
            }
            ExperimentKind::OdeVsSde => {
                "W1(histogram, PDE terminal) <= noise / sqrt(n) + cells * cell_width"
            }
        }
    }

    pub fn default_horizon(self) -> f64 {
        match self {
            ExperimentKind::OdeVsSde => 0.5,
            _ => 1.0,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    ChangCooper,
    Upwind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Uniform,
    Bump,
    Tilted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationName {
    Relu,
    Logistic,
    Tanh,
}

// Raw tables: everything optional so missing fields can be listed together.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<String>,
    seed: Option<u64>,
    horizon: Option<f64>,
    output_dir: Option<PathBuf>,
    grid: Option<RawGrid>,
    solver: Option<RawSolver>,
    densities: Option<RawDensities>,
    sweep: Option<RawSweep>,
    fit: Option<RawFit>,
    particles: Option<RawParticles>,
    slack: Option<RawSlack>,
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    dim: Option<usize>,
    cells: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    dt: Option<f64>,
    scheme: Option<SchemeName>,
    linear_solver_tol: Option<f64>,
    max_linear_iters: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDensities {
    rho_d: Option<DensityConfig>,
    rho_0: Option<DensityConfig>,
    #[serde(default)]
    extra: Vec<DensityConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    amplitudes: Option<Vec<f64>>,
    horizons: Option<Vec<f64>>,
    periods: Option<Vec<usize>>,
    tail_points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFit {
    width: Option<usize>,
    activation: Option<ActivationName>,
    feature_scale: Option<f64>,
    ridge: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParticles {
    count: Option<usize>,
    dt: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlack {
    budget_factor: Option<f64>,
    rate_tolerance: Option<f64>,
    monotone: Option<f64>,
    min_reduction: Option<f64>,
    min_weak_order: Option<f64>,
    stability_ratio: Option<f64>,
    particle_noise: Option<f64>,
    particle_cells: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    snapshot_stride: Option<usize>,
}

// Effective config.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    /// one coordinate per axis; a single value in 2D is used for both axes
    pub center: Vec<f64>,
    pub width: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub family: FamilyName,
    #[serde(default)]
    pub floor: Option<f64>,
    #[serde(default)]
    pub components: Vec<ComponentConfig>,
}

impl DensityConfig {
    pub fn uniform() -> Self {
        Self {
            family: FamilyName::Uniform,
            floor: None,
            components: Vec::new(),
        }
    }

    pub fn bump(center: &[f64], width: f64, floor: f64) -> Self {
        Self {
            family: FamilyName::Bump,
            floor: Some(floor),
            components: vec![ComponentConfig {
                center: center.to_vec(),
                width,
                weight: 1.0,
            }],
        }
    }

    fn check(&self, at: &str, dim: usize, errs: &mut Vec<String>) {
        if self.family == FamilyName::Uniform {
            if !self.components.is_empty() {
                errs.push(format!("{at}.components: a uniform density takes no components"));
            }
            return;
        }
        match self.floor {
            None => errs.push(format!("{at}.floor: required for family {:?}", self.family)),
            Some(f) if !(0.0..=1.0).contains(&f) => {
                errs.push(format!("{at}.floor: must lie in [0, 1], got {f}"))
            }
            _ => {}
        }
        if self.components.is_empty() {
            errs.push(format!("{at}.components: at least one component required"));
        }
        for (i, c) in self.components.iter().enumerate() {
            let here = format!("{at}.components[{i}]");
            if c.center.is_empty() || c.center.len() > dim.max(1) {
                errs.push(format!(
                    "{here}.center: expected 1..={} coordinates, got {}",
                    dim.max(1),
                    c.center.len()
                ));
            }
            if c.center.iter().any(|x| !(0.0..=1.0).contains(x)) {
                errs.push(format!("{here}.center: coordinates must lie in [0, 1]"));
            }
            if !(c.width > 0.0 && c.width.is_finite()) {
                errs.push(format!("{here}.width: must be positive, got {}", c.width));
            }
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                errs.push(format!("{here}.weight: must be positive, got {}", c.weight));
            }
        }
    }

    pub fn to_spec(&self) -> DensitySpec {
        let family = match self.family {
            FamilyName::Uniform => return DensitySpec::uniform(),
            FamilyName::Bump => Family::BumpMixture,
            FamilyName::Tilted => Family::Tilted,
        };
        DensitySpec {
            family,
            components: self
                .components
                .iter()
                .map(|c| {
                    let x = c.center.first().copied().unwrap_or(0.5);
                    let y = c.center.get(1).copied().unwrap_or(x);
                    Component {
                        center: [x, y],
                        width: c.width,
                        weight: c.weight,
                    }
                })
                .collect(),
            floor_fraction: self.floor.unwrap_or(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub dim: usize,
    pub cells: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        let cells = vec![self.cells; self.dim];
        Grid::new(self.dim, &cells).map_err(|e| LabError::Config(vec![format!("grid: {e}")]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSection {
    pub dt: f64,
    pub scheme: SchemeName,
    pub linear_solver_tol: f64,
    pub max_linear_iters: usize,
}

impl SolverSection {
    pub fn to_config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.dt,
            scheme: match self.scheme {
                SchemeName::ChangCooper => Scheme::ChangCooper,
                SchemeName::Upwind => Scheme::Upwind,
            },
            diffusion: true,
            linear_solver_tol: self.linear_solver_tol,
            max_linear_iters: self.max_linear_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Densities {
    pub rho_d: DensityConfig,
    pub rho_0: DensityConfig,
    pub extra: Vec<DensityConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    /// perturbation amplitudes, strictly decreasing
    pub amplitudes: Vec<f64>,
    /// horizons, strictly increasing
    pub horizons: Vec<f64>,
    /// period counts N, strictly increasing
    pub periods: Vec<usize>,
    /// number of largest horizons used for the decay-rate fit
    pub tail_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSection {
    pub width: usize,
    pub activation: ActivationName,
    pub feature_scale: f64,
    pub ridge: f64,
}

impl FitSection {
    pub fn activation(&self) -> Activation {
        Activation::new(match self.activation {
            ActivationName::Relu => ActivationKind::Relu,
            ActivationName::Logistic => ActivationKind::Logistic,
            ActivationName::Tanh => ActivationKind::Tanh,
        })
    }

    pub fn options(&self) -> FitOptions {
        FitOptions {
            feature_scale: self.feature_scale,
            ridge: self.ridge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleSection {
    pub count: usize,
    pub dt: f64,
}

/// Slack parameters of the verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    /// multiplier of `(dx^2 + dt) * scale` in discretization budgets
    pub budget_factor: f64,
    /// relative tolerance between fitted decay rate and spectral gap
    pub rate_tolerance: f64,
    /// relative increase tolerated between consecutive errors
    pub monotone: f64,
    /// required ratio first error / last error
    pub min_reduction: f64,
    /// required fitted order of the weak defect in 1/N
    pub min_weak_order: f64,
    /// allowed max/min ratio of the empirical 2C across pairs
    pub stability_ratio: f64,
    /// coefficient of 1/sqrt(n) in the particle budget
    pub particle_noise: f64,
    /// coefficient of the cell width in the particle budget
    pub particle_cells: f64,
}

impl Default for Slack {
    fn default() -> Self {
        Self {
            budget_factor: 5.0,
            rate_tolerance: 0.25,
            monotone: 0.05,
            min_reduction: 4.0,
            min_weak_order: 0.8,
            stability_ratio: 1.5,
            particle_noise: 3.0,
            particle_cells: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    /// every how many solver steps a snapshot file is written
    pub snapshot_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub horizon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub grid: GridConfig,
    pub solver: SolverSection,
    pub densities: Densities,
    pub sweep: Sweep,
    pub fit: FitSection,
    pub particles: ParticleSection,
    pub slack: Slack,
    pub output: OutputSection,
}

fn sorted<T: PartialOrd + Copy + fmt::Debug>(
    name: &str,
    v: &[T],
    increasing: bool,
    errs: &mut Vec<String>,
) {
    if v.is_empty() {
        errs.push(format!("{name}: must be nonempty"));
    } else if v
        .windows(2)
        .any(|w| if increasing { !(w[0] < w[1]) } else { !(w[0] > w[1]) })
    {
        let dir = if increasing { "increasing" } else { "decreasing" };
        errs.push(format!("{name}: must be strictly {dir}, got {v:?}"));
    }
}

fn positive(name: &str, v: f64, errs: &mut Vec<String>) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("{name}: must be positive, got {v}"));
    }
}

impl ExperimentConfig {
    /// Parses and validates TOML text.
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| LabError::Config(vec![e.message().to_string()]))?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| LabError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let mut errs = Vec::new();
        let experiment = match raw.experiment.as_deref() {
            None => {
                errs.push(format!(
                    "experiment: required, one of {}",
                    ExperimentKind::ALL.map(|k| k.name()).join(", ")
                ));
                None
            }
            Some(s) => {
                let k = ExperimentKind::parse(s);
                if k.is_none() {
                    errs.push(format!(
                        "experiment: unknown experiment {s:?}, expected one of {}",
                        ExperimentKind::ALL.map(|k| k.name()).join(", ")
                    ));
                }
                k
            }
        };
        let dens = raw.densities.unwrap_or_default();
        if dens.rho_d.is_none() {
            errs.push("densities.rho_d: required".to_string());
        }

        let g = raw.grid.unwrap_or_default();
        let grid = GridConfig {
            dim: g.dim.unwrap_or(1),
            cells: g.cells.unwrap_or(DEFAULT_CELLS),
        };
        if !(1..=2).contains(&grid.dim) {
            errs.push(format!("grid.dim: must be 1 or 2, got {}", grid.dim));
        }
        if grid.cells < scorelab_core::grid::MIN_CELLS {
            errs.push(format!(
                "grid.cells: need at least {} cells per axis, got {}",
                scorelab_core::grid::MIN_CELLS,
                grid.cells
            ));
        }

        let s = raw.solver.unwrap_or_default();
        let solver = SolverSection {
            dt: s.dt.unwrap_or(DEFAULT_DT),
            scheme: s.scheme.unwrap_or(SchemeName::ChangCooper),
            linear_solver_tol: s.linear_solver_tol.unwrap_or(1e-10),
            max_linear_iters: s.max_linear_iters.unwrap_or(50),
        };
        positive("solver.dt", solver.dt, &mut errs);
        positive("solver.linear_solver_tol", solver.linear_solver_tol, &mut errs);
        if solver.scheme == SchemeName::Upwind {
            errs.push(
                "solver.scheme: experiments integrate diffusive equations, which need chang-cooper"
                    .to_string(),
            );
        }

        let horizon = raw
            .horizon
            .unwrap_or_else(|| experiment.map_or(1.0, |k| k.default_horizon()));
        positive("horizon", horizon, &mut errs);
        if experiment == Some(ExperimentKind::MoserExact) && horizon != 1.0 {
            errs.push(format!("horizon: the Moser transfer runs on unit time, got {horizon}"));
        }

        let sw = raw.sweep.unwrap_or_default();
        let sweep = Sweep {
            amplitudes: sw.amplitudes.unwrap_or_else(|| vec![0.4, 0.2, 0.1, 0.05]),
            horizons: sw.horizons.unwrap_or_else(|| vec![0.5, 1.0, 2.0, 4.0]),
            periods: sw.periods.unwrap_or_else(|| vec![1, 2, 4, 8, 16]),
            tail_points: sw.tail_points.unwrap_or(2),
        };
        sorted("sweep.amplitudes", &sweep.amplitudes, false, &mut errs);
        if sweep.amplitudes.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            errs.push("sweep.amplitudes: must be finite and nonnegative".to_string());
        }
        sorted("sweep.horizons", &sweep.horizons, true, &mut errs);
        if sweep.horizons.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            errs.push("sweep.horizons: must be positive".to_string());
        }
        sorted("sweep.periods", &sweep.periods, true, &mut errs);
        if sweep.periods.contains(&0) {
            errs.push("sweep.periods: must be at least 1".to_string());
        }
        if sweep.tail_points < 2 || sweep.tail_points > sweep.horizons.len() {
            errs.push(format!(
                "sweep.tail_points: must lie in 2..={}, got {}",
                sweep.horizons.len(),
                sweep.tail_points
            ));
        }

        let f = raw.fit.unwrap_or_default();
        let fit = FitSection {
            width: f.width.unwrap_or(16),
            activation: f.activation.unwrap_or(ActivationName::Logistic),
            feature_scale: f.feature_scale.unwrap_or(8.0),
            ridge: f.ridge.unwrap_or(1e-2),
        };
        if fit.width == 0 {
            errs.push("fit.width: must be at least 1".to_string());
        }
        positive("fit.feature_scale", fit.feature_scale, &mut errs);
        if !(fit.ridge >= 0.0 && fit.ridge.is_finite()) {
            errs.push(format!("fit.ridge: must be nonnegative, got {}", fit.ridge));
        }

        let p = raw.particles.unwrap_or_default();
        let particles = ParticleSection {
            count: p.count.unwrap_or(100_000),
            dt: p.dt.unwrap_or(solver.dt),
        };
        if particles.count == 0 {
            errs.push("particles.count: must be at least 1".to_string());
        }
        if p.dt.is_some() {
            positive("particles.dt", particles.dt, &mut errs);
        }

        let d = Slack::default();
        let sl = raw.slack.unwrap_or_default();
        let slack = Slack {
            budget_factor: sl.budget_factor.unwrap_or(d.budget_factor),
            rate_tolerance: sl.rate_tolerance.unwrap_or(d.rate_tolerance),
            monotone: sl.monotone.unwrap_or(d.monotone),
            min_reduction: sl.min_reduction.unwrap_or(d.min_reduction),
            min_weak_order: sl.min_weak_order.unwrap_or(d.min_weak_order),
            stability_ratio: sl.stability_ratio.unwrap_or(d.stability_ratio),
            particle_noise: sl.particle_noise.unwrap_or(d.particle_noise),
            particle_cells: sl.particle_cells.unwrap_or(d.particle_cells),
        };
        for (name, v) in [
            ("slack.budget_factor", slack.budget_factor),
            ("slack.rate_tolerance", slack.rate_tolerance),
            ("slack.min_reduction", slack.min_reduction),
            ("slack.min_weak_order", slack.min_weak_order),
            ("slack.stability_ratio", slack.stability_ratio),
            ("slack.particle_noise", slack.particle_noise),
            ("slack.particle_cells", slack.particle_cells),
        ] {
            positive(name, v, &mut errs);
        }
        if !(slack.monotone >= 0.0) {
            errs.push(format!("slack.monotone: must be nonnegative, got {}", slack.monotone));
        }

        let o = raw.output.unwrap_or_default();
        let output = OutputSection {
            snapshot_stride: o.snapshot_stride.unwrap_or(100),
        };
        if output.snapshot_stride == 0 {
            errs.push("output.snapshot_stride: must be at least 1".to_string());
        }

        let rho_0 = dens.rho_0.unwrap_or_else(DensityConfig::uniform);
        if let Some(rd) = &dens.rho_d {
            rd.check("densities.rho_d", grid.dim, &mut errs);
        }
        rho_0.check("densities.rho_0", grid.dim, &mut errs);
        for (i, e) in dens.extra.iter().enumerate() {
            e.check(&format!("densities.extra[{i}]"), grid.dim, &mut errs);
        }

        if !errs.is_empty() {
            return Err(LabError::Config(errs));
        }
        Ok(Self {
            experiment: experiment.expect("checked"),
            seed: raw.seed.unwrap_or(0),
            horizon,
            output_dir: raw.output_dir,
            grid,
            solver,
            densities: Densities {
                rho_d: dens.rho_d.expect("checked"),
                rho_0,
                extra: dens.extra,
            },
            sweep,
            fit,
            particles,
            slack,
            output,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "T-DECAY"
[densities.rho_d]
family = "bump"
floor = 0.1
components = [{ center = [0.3], width = 0.3 }]
"#;

    fn errors(text: &str) -> Vec<String> {
        match ExperimentConfig::from_toml(text) {
            Err(LabError::Config(e)) => e,
            other => panic!("expected config errors, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_lists_required_fields() {
        let e = errors("");
        assert_eq!(e.len(), 2, "{e:?}");
        assert!(e[0].starts_with("experiment: required"));
        assert!(e[1].starts_with("densities.rho_d: required"));
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.solver.dt, 1e-3);
        assert_eq!(c.grid.cells, 128);
        assert_eq!(c.sweep.horizons, vec![0.5, 1.0, 2.0, 4.0]);
        let echo = c.to_toml();
        assert!(echo.contains("dt = 0.001"), "{echo}");
        assert!(echo.contains("cells = 128"), "{echo}");
        assert_eq!(ExperimentConfig::from_toml(&echo).unwrap(), c);
    }

    #[test]
    fn negative_dt_gives_one_error() {
        let e = errors(&format!("{MINIMAL}\n[solver]\ndt = -0.001\n"));
        assert_eq!(e, vec!["solver.dt: must be positive, got -0.001".to_string()]);
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = errors(&format!("{MINIMAL}\n[solver]\ndtt = 0.001\n"));
        assert_eq!(e.len(), 1);
        assert!(e[0].contains("unknown field `dtt`"), "{e:?}");
        let e = errors(&format!("horizn = 1.0\n{MINIMAL}"));
        assert!(e[0].contains("unknown field `horizn`"), "{e:?}");
    }

    #[test]
    fn every_violation_is_listed() {
        let text = format!(
            "{MINIMAL}\n[sweep]\namplitudes = [0.1, 0.2]\nhorizons = []\n[grid]\ndim = 3\n"
        );
        let e = errors(&text);
        assert!(e.iter().any(|m| m.starts_with("grid.dim")), "{e:?}");
        assert!(e.iter().any(|m| m.starts_with("sweep.amplitudes: must be strictly decreasing")));
        assert!(e.iter().any(|m| m == "sweep.horizons: must be nonempty"));
        assert!(e.iter().any(|m| m.starts_with("sweep.tail_points")));
    }

    #[test]
    fn density_specs_are_checked() {
        let text = r#"
experiment = "SCORE-SWEEP"
[densities.rho_d]
family = "bump"
components = [{ center = [1.5], width = 0.0 }]
"#;
        let e = errors(text);
        assert_eq!(e.len(), 3, "{e:?}");
    }

    #[test]
    fn unknown_experiment_is_named() {
        let e = errors(&MINIMAL.replace("T-DECAY", "T-DECAYS"));
        assert!(e[0].contains("\"T-DECAYS\""));
    }
}

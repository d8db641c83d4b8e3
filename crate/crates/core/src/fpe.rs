//! Conservative, positivity-preserving implicit solver for
//!
//! ```text
//!   d rho / dt = laplacian(rho) - div(V_t rho)     no-flux on the boundary
//! ```
//!
//! and its diffusion-free counterpart `d rho / dt = -div(V_t rho)`.
//!
//! Each step is one implicit Euler step of a finite-volume scheme whose face
//! flux is `J = alpha * rho_left - beta * rho_right`. With Chang-Cooper
//! (Scharfetter-Gummel) exponential fitting, `alpha = B(-V h) / h` and
//! `beta = B(V h) / h` with the Bernoulli function `B(z) = z / (e^z - 1)`.
//! The system matrix `I - dt A` is then a column diagonally dominant
//! M-matrix: its columns sum to one (mass is conserved) and elimination
//! without pivoting maps nonnegative data to nonnegative solutions exactly,
//! even in floating point.

// libm-backed f64 methods; rustc misreports this import as unused
#[allow(unused_imports)]
use num_traits::Float;
use alloc::borrow::Cow;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::density::DensityField;
use crate::error::{Error, Result};
use crate::grid::{CellField, FaceField, Grid};
use crate::linalg::{BandLu, BandMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ChangCooper,
    Upwind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub diffusion: bool,
    pub linear_solver_tol: f64,
    pub max_linear_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            scheme: Scheme::ChangCooper,
            diffusion: true,
            linear_solver_tol: 1e-10,
            max_linear_iters: 50,
        }
    }
}

impl SolverConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.linear_solver_tol > 0.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "linear_solver_tol must be positive, got {}",
                self.linear_solver_tol
            )));
        }
        if self.scheme == Scheme::ChangCooper && !self.diffusion {
            return Err(Error::InvalidArgument(
                "Chang-Cooper fluxes need diffusion; use the upwind scheme".into(),
            ));
        }
        Ok(())
    }
}

type DriftFn = dyn Fn(f64) -> FaceField + Send + Sync;

#[derive(Clone)]
enum Source {
    Piecewise(Vec<FaceField>),
    Continuous(Arc<DriftFn>),
}

/// Time-dependent face drift on `[0, T]`, either piecewise constant between
/// breakpoints or given by a closure evaluated on demand.
#[derive(Clone)]
pub struct TimeField {
    grid: Grid,
    breakpoints: Vec<f64>,
    source: Source,
    sup_norm: f64,
    lipschitz: Option<f64>,
}

impl fmt::Debug for TimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeField")
            .field("horizon", &self.horizon())
            .field("intervals", &(self.breakpoints.len() - 1))
            .field("piecewise", &self.is_piecewise())
            .field("sup_norm", &self.sup_norm)
            .finish()
    }
}

impl TimeField {
    /// Field `fields[k]` on `[breakpoints[k], breakpoints[k + 1])`.
    pub fn piecewise(breakpoints: Vec<f64>, fields: Vec<FaceField>) -> Result<Self> {
        if fields.is_empty() || breakpoints.len() != fields.len() + 1 {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} breakpoints for {} intervals",
                breakpoints.len(),
                fields.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidArgument("breakpoints must start at 0".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let grid = *fields[0].grid();
        if fields.iter().any(|f| *f.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        let sup_norm = fields.iter().map(FaceField::sup_norm).fold(0.0, f64::max);
        if !sup_norm.is_finite() {
            return Err(Error::InvalidArgument("drift is not bounded".into()));
        }
        Ok(Self {
            grid,
            breakpoints,
            source: Source::Piecewise(fields),
            sup_norm,
            lipschitz: None,
        })
    }

    pub fn constant(field: FaceField, horizon: f64) -> Result<Self> {
        Self::piecewise(alloc::vec![0.0, horizon], alloc::vec![field])
    }

    pub fn zero(grid: Grid, horizon: f64) -> Result<Self> {
        Self::constant(FaceField::zeros(grid), horizon)
    }

    /// Drift evaluated by `f` at the left endpoint of every solver step. The
    /// cached sup-norm is the maximum over `probes + 1` equispaced instants.
    pub fn continuous<F>(grid: Grid, horizon: f64, probes: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> FaceField + Send + Sync + 'static,
    {
        if !(horizon > 0.0) {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        let probes = probes.max(1);
        let mut sup_norm = 0.0f64;
        for k in 0..=probes {
            let field = f(horizon * k as f64 / probes as f64);
            if *field.grid() != grid {
                return Err(Error::GridMismatch);
            }
            sup_norm = sup_norm.max(field.sup_norm());
        }
        if !sup_norm.is_finite() {
            return Err(Error::InvalidArgument("drift is not bounded".into()));
        }
        Ok(Self {
            grid,
            breakpoints: alloc::vec![0.0, horizon],
            source: Source::Continuous(Arc::new(f)),
            sup_norm,
            lipschitz: None,
        })
    }

    pub fn with_lipschitz(mut self, lipschitz: f64) -> Self {
        self.lipschitz = Some(lipschitz);
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn num_intervals(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn is_piecewise(&self) -> bool {
        matches!(self.source, Source::Piecewise(_))
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    /// Index of the interval containing `t`; the final instant belongs to
    /// the last interval.
    pub fn interval_index(&self, t: f64) -> usize {
        let k = self.breakpoints.partition_point(|&b| b <= t);
        k.saturating_sub(1).min(self.num_intervals() - 1)
    }

    /// Stored field of interval `k` (piecewise fields only).
    pub fn interval_field(&self, k: usize) -> Option<&FaceField> {
        match &self.source {
            Source::Piecewise(f) => f.get(k),
            Source::Continuous(_) => None,
        }
    }

    pub fn at(&self, t: f64) -> Cow<'_, FaceField> {
        match &self.source {
            Source::Piecewise(f) => Cow::Borrowed(&f[self.interval_index(t)]),
            Source::Continuous(f) => Cow::Owned(f(t)),
        }
    }

    pub fn scaled(&self, s: f64) -> TimeField {
        let source = match &self.source {
            Source::Piecewise(f) => Source::Piecewise(f.iter().map(|x| x.scale(s)).collect()),
            Source::Continuous(f) => {
                let f = f.clone();
                Source::Continuous(Arc::new(move |t| f(t).scale(s)))
            }
        };
        TimeField {
            grid: self.grid,
            breakpoints: self.breakpoints.clone(),
            source,
            sup_norm: self.sup_norm * s.abs(),
            lipschitz: self.lipschitz.map(|l| l * s.abs()),
        }
    }

    /// `self + amplitude * shape`, with `shape` constant in time.
    pub fn offset(&self, shape: &FaceField, amplitude: f64) -> Result<TimeField> {
        if *shape.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        match &self.source {
            Source::Piecewise(f) => {
                let fields = f
                    .iter()
                    .map(|x| x.axpy(amplitude, shape))
                    .collect::<Result<Vec<_>>>()?;
                TimeField::piecewise(self.breakpoints.clone(), fields)
            }
            Source::Continuous(f) => {
                let f = f.clone();
                let shape = shape.clone();
                let g = self.grid;
                let h = self.horizon();
                TimeField::continuous(g, h, 64, move |t| {
                    f(t).axpy(amplitude, &shape).expect("grids checked")
                })
            }
        }
    }
}

/// Densities recorded at solver step boundaries.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub densities: Vec<DensityField>,
    pub config: SolverConfig,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial(&self) -> &DensityField {
        &self.densities[0]
    }

    pub fn terminal(&self) -> &DensityField {
        self.densities.last().unwrap()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Snapshot recorded closest to `t`.
    pub fn nearest(&self, t: f64) -> (f64, &DensityField) {
        let k = self.times.partition_point(|&s| s < t);
        let k = if k == 0 {
            0
        } else if k >= self.times.len() {
            self.times.len() - 1
        } else if (self.times[k] - t).abs() < (t - self.times[k - 1]).abs() {
            k
        } else {
            k - 1
        };
        (self.times[k], &self.densities[k])
    }

    /// Largest L2 distance between snapshots at matching indices.
    pub fn sup_l2_distance(&self, other: &Trajectory) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "trajectories have {} and {} snapshots",
                self.len(),
                other.len()
            )));
        }
        let mut m = 0.0f64;
        for (a, b) in self.densities.iter().zip(&other.densities) {
            m = m.max(a.field().sub(b.field())?.l2_norm());
        }
        Ok(m)
    }
}

/// `z / (e^z - 1)`, continuous through `z = 0`.
#[inline]
pub fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-10 {
        1.0 - 0.5 * z
    } else {
        z / z.exp_m1()
    }
}

/// Coefficients `(alpha, beta)` of the face flux `alpha rho_l - beta rho_r`.
#[inline]
fn face_coefficients(v: f64, h: f64, cfg: &SolverConfig) -> (f64, f64) {
    match (cfg.scheme, cfg.diffusion) {
        (Scheme::ChangCooper, _) => (bernoulli(-v * h) / h, bernoulli(v * h) / h),
        (Scheme::Upwind, true) => (v.max(0.0) + 1.0 / h, (-v).max(0.0) + 1.0 / h),
        (Scheme::Upwind, false) => (v.max(0.0), (-v).max(0.0)),
    }
}

/// Face flux of `rho` under `drift` (positive from left to right cell).
pub fn face_flux(rho: &CellField, drift: &FaceField, cfg: &SolverConfig) -> Result<FaceField> {
    if rho.grid() != drift.grid() {
        return Err(Error::GridMismatch);
    }
    let g = *rho.grid();
    let v = rho.values();
    let mut out = FaceField::zeros(g);
    for a in 0..g.dim() {
        let h = g.cell_width(a);
        for (fi, o) in out.axis_mut(a).iter_mut().enumerate() {
            let (l, r) = g.face_cells(a, fi);
            let (al, be) = face_coefficients(drift.axis(a)[fi], h, cfg);
            *o = al * v[l] - be * v[r];
        }
    }
    Ok(out)
}

/// The spatial operator `A rho = -div(J)` of the scheme.
pub fn generator(rho: &CellField, drift: &FaceField, cfg: &SolverConfig) -> Result<CellField> {
    let j = face_flux(rho, drift, cfg)?;
    Ok(crate::grid::divergence(&j).scale(-1.0))
}

fn assemble(drift: &FaceField, dt: f64, cfg: &SolverConfig) -> BandMatrix {
    let g = *drift.grid();
    let mut m = BandMatrix::identity(g.num_cells(), g.bandwidth());
    for a in 0..g.dim() {
        let h = g.cell_width(a);
        let c = dt / h;
        for (fi, &v) in drift.axis(a).iter().enumerate() {
            let (p, q) = g.face_cells(a, fi);
            let (al, be) = face_coefficients(v, h, cfg);
            *m.get_mut(p, p) += c * al;
            *m.get_mut(p, q) -= c * be;
            *m.get_mut(q, q) += c * be;
            *m.get_mut(q, p) -= c * al;
        }
    }
    m
}

fn linear_solve(
    matrix: &BandMatrix,
    lu: &BandLu,
    rho: &DensityField,
    cfg: &SolverConfig,
    time: f64,
) -> Result<DensityField> {
    let b = rho.values();
    let mut x = b.to_vec();
    lu.solve_in_place(&mut x);
    if let Some(k) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { cell: k, time });
    }
    let vol = rho.grid().cell_volume();
    let n = x.len();
    let mut r = alloc::vec![0.0; n];
    let residual = |x: &[f64], r: &mut [f64]| -> f64 {
        matrix.apply(x, r);
        let mut s = 0.0;
        for i in 0..n {
            r[i] = b[i] - r[i];
            s += r[i].abs();
        }
        s * vol
    };
    let mut res = residual(&x, &mut r);
    let mut iters = 0;
    while res > cfg.linear_solver_tol {
        if iters >= cfg.max_linear_iters {
            return Err(Error::LinearSolver {
                iterations: iters,
                residual: res,
            });
        }
        lu.solve_in_place(&mut r);
        for (xi, ri) in x.iter_mut().zip(&r) {
            *xi += ri;
        }
        // refinement may leave rounding-level negatives
        for xi in x.iter_mut() {
            if *xi < 0.0 && *xi > -cfg.linear_solver_tol {
                *xi = 0.0;
            }
        }
        res = residual(&x, &mut r);
        iters += 1;
    }
    DensityField::new(CellField::new(*rho.grid(), x)?)
}

/// One implicit Euler step of length `cfg.dt` with the drift frozen.
pub fn step(rho: &DensityField, drift: &FaceField, cfg: &SolverConfig) -> Result<DensityField> {
    cfg.validate()?;
    if rho.grid() != drift.grid() {
        return Err(Error::GridMismatch);
    }
    let m = assemble(drift, cfg.dt, cfg);
    let lu = m.clone().factorize()?;
    linear_solve(&m, &lu, rho, cfg, f64::NAN)
}

/// Integrates from `rho0` over `[0, horizon]`, recording every `stride`-th
/// step and always the final one. Every drift breakpoint inside the horizon
/// is a step boundary; steps within an interval are equal and no longer
/// than `cfg.dt`.
pub fn integrate(
    rho0: &DensityField,
    drift: &TimeField,
    horizon: f64,
    cfg: &SolverConfig,
    stride: usize,
) -> Result<Trajectory> {
    cfg.validate()?;
    if rho0.grid() != drift.grid() {
        return Err(Error::GridMismatch);
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    if horizon > drift.horizon() * (1.0 + 1e-12) {
        return Err(Error::HorizonMismatch {
            expected: drift.horizon(),
            got: horizon,
        });
    }
    let stride = stride.max(1);
    let bps = drift.breakpoints();
    let mut times = alloc::vec![0.0];
    let mut densities = alloc::vec![rho0.clone()];
    let mut rho = rho0.clone();
    let mut steps_taken = 0usize;
    let mut cache: Option<(usize, u64, BandMatrix, BandLu)> = None;
    for k in 0..drift.num_intervals() {
        let a = bps[k];
        if a >= horizon {
            break;
        }
        let b = bps[k + 1].min(horizon);
        let last_segment = bps[k + 1] >= horizon;
        let n_steps = (((b - a) / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
        let h = (b - a) / n_steps as f64;
        for s in 0..n_steps {
            let t0 = a + s as f64 * h;
            let t1 = if s + 1 == n_steps { b } else { a + (s + 1) as f64 * h };
            let next = match drift.interval_field(k) {
                Some(field) => {
                    let hit = matches!(&cache, Some((ck, ch, _, _)) if *ck == k && *ch == h.to_bits());
                    if !hit {
                        let m = assemble(field, h, cfg);
                        let lu = m.clone().factorize()?;
                        cache = Some((k, h.to_bits(), m, lu));
                    }
                    let (_, _, m, lu) = cache.as_ref().unwrap();
                    linear_solve(m, lu, &rho, cfg, t1)?
                }
                None => {
                    let field = drift.at(t0);
                    let m = assemble(&field, h, cfg);
                    let lu = m.clone().factorize()?;
                    linear_solve(&m, &lu, &rho, cfg, t1)?
                }
            };
            rho = next;
            steps_taken += 1;
            let is_last = last_segment && s + 1 == n_steps;
            if steps_taken % stride == 0 || is_last {
                times.push(t1);
                densities.push(rho.clone());
            }
        }
        if last_segment {
            break;
        }
    }
    Ok(Trajectory {
        times,
        densities,
        config: *cfg,
    })
}

/// Solves the drift-diffusion equation over `[0, horizon]`, sampled at every step.
pub fn solve(
    rho0: &DensityField,
    drift: &TimeField,
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    integrate(rho0, drift, horizon, cfg, 1)
}

/// Heat equation with no-flux boundary (zero drift).
pub fn solve_heat(rho0: &DensityField, horizon: f64, cfg: &SolverConfig) -> Result<Trajectory> {
    let zero = TimeField::zero(*rho0.grid(), horizon)?;
    let cfg = SolverConfig {
        diffusion: true,
        ..*cfg
    };
    solve(rho0, &zero, horizon, &cfg)
}

/// Continuity equation `d rho/dt = -div(V rho)`: upwind fluxes, no
/// diffusion, and the CFL restriction `dt <= h / sup|V|` checked up front.
pub fn solve_continuity(
    rho0: &DensityField,
    drift: &TimeField,
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    let cfg = SolverConfig {
        scheme: Scheme::Upwind,
        diffusion: false,
        ..*cfg
    };
    let g = drift.grid();
    let h_min = (0..g.dim()).map(|a| g.cell_width(a)).fold(f64::INFINITY, f64::min);
    if drift.sup_norm() > 0.0 {
        let limit = h_min / drift.sup_norm();
        if cfg.dt > limit {
            return Err(Error::Cfl { dt: cfg.dt, limit });
        }
    }
    solve(rho0, drift, horizon, &cfg)
}

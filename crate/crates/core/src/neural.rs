//! Width-`d` neural vector fields `A sigma(W x + B)`, wide sums of them
//! fitted by random features, and the oscillating weight schedule that
//! reproduces a wide sum on average.

use alloc::string::String;
use alloc::vec::Vec;
// libm-backed f64 methods; rustc misreports this import as unused
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fpe::TimeField;
use crate::grid::{FaceField, Grid, Point};
use crate::linalg::{cholesky_solve, op_norm2};

pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    Relu,
    Logistic,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Activation {
    pub kind: ActivationKind,
    pub lipschitz: f64,
}

impl Activation {
    pub fn new(kind: ActivationKind) -> Self {
        let lipschitz = match kind {
            ActivationKind::Relu | ActivationKind::Tanh => 1.0,
            ActivationKind::Logistic => 0.25,
        };
        Self { kind, lipschitz }
    }

    pub fn apply(&self, x: f64) -> f64 {
        match self.kind {
            ActivationKind::Relu => x.max(0.0),
            ActivationKind::Logistic => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            ActivationKind::Tanh => x.tanh(),
        }
    }
}

impl Default for Activation {
    fn default() -> Self {
        Self::new(ActivationKind::Logistic)
    }
}

/// One width-`d` layer `x -> A sigma(W x + B)`. In 1D only the `[0][0]`
/// entries and `b[0]` are used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub a: Mat2,
    pub w: Mat2,
    pub b: [f64; 2],
}

impl Term {
    pub fn evaluate(&self, x: Point, dim: usize, act: &Activation) -> Point {
        let mut hidden = [0.0; 2];
        for r in 0..dim {
            let mut s = self.b[r];
            for c in 0..dim {
                s += self.w[r][c] * x[c];
            }
            hidden[r] = act.apply(s);
        }
        let mut out = [0.0; 2];
        for r in 0..dim {
            for c in 0..dim {
                out[r] += self.a[r][c] * hidden[c];
            }
        }
        out
    }

    /// Spatial Lipschitz bound `|A| K |W|` in operator 2-norms.
    pub fn lipschitz(&self, act: &Activation) -> f64 {
        op_norm2(&self.a) * act.lipschitz * op_norm2(&self.w)
    }

    pub fn scaled(&self, s: f64) -> Term {
        let mut t = *self;
        t.a.iter_mut().flatten().for_each(|v| *v *= s);
        t
    }
}

/// `x -> sum_i A_i sigma(W_i x + B_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WideNet {
    pub dim: usize,
    pub terms: Vec<Term>,
    pub activation: Activation,
    lipschitz: f64,
}

impl WideNet {
    pub fn new(dim: usize, terms: Vec<Term>, activation: Activation) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidArgument(alloc::format!("dimension {dim}")));
        }
        let lipschitz = terms.iter().map(|t| t.lipschitz(&activation)).sum();
        Ok(Self {
            dim,
            terms,
            activation,
            lipschitz,
        })
    }

    pub fn width(&self) -> usize {
        self.terms.len()
    }

    /// `sum_i |A_i| K |W_i|`
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

pub fn evaluate_wide(net: &WideNet, x: Point) -> Point {
    let mut out = [0.0; 2];
    for t in &net.terms {
        let v = t.evaluate(x, net.dim, &net.activation);
        out[0] += v[0];
        out[1] += v[1];
    }
    out
}

/// Scale of the random hidden weights.
pub const FEATURE_SCALE: f64 = 12.0;
/// Ridge parameter relative to the mean diagonal of the normal equations.
pub const DEFAULT_RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// standard deviation of the hidden weights
    pub feature_scale: f64,
    /// ridge parameter relative to the mean diagonal of the normal equations
    pub ridge: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            feature_scale: FEATURE_SCALE,
            ridge: DEFAULT_RIDGE,
        }
    }
}
const RIDGE_GROWTH: f64 = 100.0;
const RIDGE_ATTEMPTS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// max over samples and components of the absolute fit error
    pub residual: f64,
    /// relative ridge parameter finally used
    pub ridge: f64,
    pub warnings: Vec<String>,
}

/// Random-feature fit of `target` sampled at the cell centers of `grid`.
/// Hidden weights are Gaussian with scale `feature_scale`, biases place
/// each unit's transition at a uniformly drawn point of the box, and the
/// output matrices solve a ridge-regularized least-squares problem.
pub fn fit_wide(
    grid: &Grid,
    target: impl Fn(Point) -> Point,
    m: usize,
    activation: Activation,
    seed: u64,
) -> Result<(WideNet, FitReport)> {
    fit_wide_with(grid, target, m, activation, seed, &FitOptions::default())
}

pub fn fit_wide_with(
    grid: &Grid,
    target: impl Fn(Point) -> Point,
    m: usize,
    activation: Activation,
    seed: u64,
    opts: &FitOptions,
) -> Result<(WideNet, FitReport)> {
    if !(opts.feature_scale > 0.0) || !(opts.ridge >= 0.0) {
        return Err(Error::InvalidArgument(
            "feature scale must be positive and ridge nonnegative".into(),
        ));
    }
    let ridge = opts.ridge;
    if m == 0 {
        return Err(Error::InvalidArgument("a wide net needs at least one term".into()));
    }
    let d = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, opts.feature_scale).expect("valid scale");
    let mut terms = Vec::with_capacity(m);
    for _ in 0..m {
        let mut w = [[0.0; 2]; 2];
        let mut b = [0.0; 2];
        for r in 0..d {
            let mut center = [0.0; 2];
            for c in 0..d {
                w[r][c] = normal.sample(&mut rng);
                center[c] = rng.random::<f64>();
            }
            b[r] = -(0..d).map(|c| w[r][c] * center[c]).sum::<f64>();
        }
        terms.push(Term {
            a: [[0.0; 2]; 2],
            w,
            b,
        });
    }
    // feature (i, r) = sigma((W_i x + B_i)_r), one column per pair
    let centers = grid.cell_centers();
    let p = m * d;
    let features: Vec<Vec<f64>> = centers
        .iter()
        .map(|x| {
            let mut row = Vec::with_capacity(p);
            for t in &terms {
                for r in 0..d {
                    let s = t.b[r] + (0..d).map(|c| t.w[r][c] * x[c]).sum::<f64>();
                    row.push(activation.apply(s));
                }
            }
            row
        })
        .collect();
    let values: Vec<Point> = centers.iter().map(|x| target(*x)).collect();
    let mut gram = alloc::vec![0.0; p * p];
    for row in &features {
        for i in 0..p {
            for j in 0..=i {
                gram[i * p + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            gram[j * p + i] = gram[i * p + j];
        }
    }
    let mean_diag = (0..p).map(|i| gram[i * p + i]).sum::<f64>() / p as f64;
    let rhs: Vec<Vec<f64>> = (0..d)
        .map(|c| {
            (0..p)
                .map(|i| features.iter().zip(&values).map(|(f, v)| f[i] * v[c]).sum())
                .collect()
        })
        .collect();
    let mut warnings = Vec::new();
    let mut alpha = ridge;
    let mut coeffs = None;
    for _ in 0..RIDGE_ATTEMPTS {
        let mut g = gram.clone();
        for i in 0..p {
            g[i * p + i] += alpha * mean_diag.max(f64::MIN_POSITIVE);
        }
        let sol: Option<Vec<Vec<f64>>> = rhs.iter().map(|b| cholesky_solve(&g, p, b)).collect();
        if let Some(sol) = sol {
            coeffs = Some(sol);
            break;
        }
        warnings.push(alloc::format!(
            "normal equations not positive definite at ridge {alpha:e}; retrying at {:e}",
            alpha * RIDGE_GROWTH
        ));
        alpha *= RIDGE_GROWTH;
    }
    let coeffs = coeffs.ok_or_else(|| {
        Error::InvalidArgument("random-feature normal equations could not be solved".into())
    })?;
    for (i, t) in terms.iter_mut().enumerate() {
        for c in 0..d {
            for r in 0..d {
                t.a[c][r] = coeffs[c][i * d + r];
            }
        }
    }
    let net = WideNet::new(d, terms, activation)?;
    let residual = centers
        .iter()
        .zip(&values)
        .map(|(x, v)| {
            let y = evaluate_wide(&net, *x);
            (0..d).map(|c| (y[c] - v[c]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    Ok((
        net,
        FitReport {
            residual,
            ridge: alpha,
            warnings,
        },
    ))
}

/// Piecewise-constant-in-time width-`d` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSchedule {
    pub dim: usize,
    pub breakpoints: Vec<f64>,
    pub layers: Vec<Term>,
    pub activation: Activation,
    /// spatial Lipschitz bound valid on every interval
    pub lipschitz: f64,
}

impl WeightSchedule {
    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn evaluate(&self, t: f64, x: Point) -> Point {
        let k = self.breakpoints.partition_point(|&b| b <= t);
        let k = k.saturating_sub(1).min(self.layers.len() - 1);
        self.layers[k].evaluate(x, self.dim, &self.activation)
    }
}

/// `T/N`-periodic schedule: each period is split into `m` equal pieces and
/// piece `i` carries `(m A_i, W_i, B_i)`.
pub fn oscillation_schedule(net: &WideNet, periods: usize, horizon: f64) -> Result<WeightSchedule> {
    let m = net.width();
    if m == 0 {
        return Err(Error::InvalidArgument("empty net".into()));
    }
    if periods == 0 || !(horizon > 0.0) {
        return Err(Error::InvalidArgument(
            "need at least one period and a positive horizon".into(),
        ));
    }
    let total = m * periods;
    let breakpoints = (0..=total)
        .map(|k| horizon * k as f64 / total as f64)
        .collect();
    let layers = (0..total)
        .map(|k| net.terms[k % m].scaled(m as f64))
        .collect();
    let lipschitz = m as f64
        * net
            .terms
            .iter()
            .map(|t| t.lipschitz(&net.activation))
            .fold(0.0, f64::max);
    Ok(WeightSchedule {
        dim: net.dim,
        breakpoints,
        layers,
        activation: net.activation,
        lipschitz,
    })
}

pub fn schedule_as_timefield(schedule: &WeightSchedule, grid: &Grid) -> Result<TimeField> {
    check_dim(schedule.dim, grid)?;
    let fields = schedule
        .layers
        .iter()
        .map(|t| FaceField::from_vector_fn(*grid, |x| t.evaluate(x, schedule.dim, &schedule.activation)))
        .collect();
    Ok(TimeField::piecewise(schedule.breakpoints.clone(), fields)?.with_lipschitz(schedule.lipschitz))
}

/// The wide net as a drift constant in time.
pub fn wide_as_timefield(net: &WideNet, grid: &Grid, horizon: f64) -> Result<TimeField> {
    check_dim(net.dim, grid)?;
    let f = FaceField::from_vector_fn(*grid, |x| evaluate_wide(net, x));
    Ok(TimeField::constant(f, horizon)?.with_lipschitz(net.lipschitz()))
}

fn check_dim(dim: usize, grid: &Grid) -> Result<()> {
    if dim != grid.dim() {
        return Err(Error::InvalidArgument(alloc::format!(
            "net of dimension {dim} on a {}-dimensional grid",
            grid.dim()
        )));
    }
    Ok(())
}

const GAUSS_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// `| int_0^T int (Q(t, x) - wide(x)) . phi(t, x) dx dt |` with the midpoint
/// rule over cells in space and four-point Gauss–Legendre on every schedule
/// interval in time.
pub fn weak_pairing_defect(
    schedule: &WeightSchedule,
    net: &WideNet,
    grid: &Grid,
    phi: impl Fn(f64, Point) -> Point,
) -> Result<f64> {
    check_dim(schedule.dim, grid)?;
    check_dim(net.dim, grid)?;
    let d = grid.dim();
    let vol = grid.cell_volume();
    let centers = grid.cell_centers();
    let wide: Vec<Point> = centers.iter().map(|x| evaluate_wide(net, *x)).collect();
    let mut total = 0.0;
    for (k, layer) in schedule.layers.iter().enumerate() {
        let (a, b) = (schedule.breakpoints[k], schedule.breakpoints[k + 1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in centers.iter().zip(&wide) {
            let q = layer.evaluate(*x, d, &schedule.activation);
            let mut avg = [0.0; 2];
            for (s, gw) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                let p = phi(mid + half * s, *x);
                avg[0] += gw * half * p[0];
                avg[1] += gw * half * p[1];
            }
            total += (0..d).map(|c| (q[c] - w[c]) * avg[c]).sum::<f64>() * vol;
        }
    }
    Ok(total.abs())
}

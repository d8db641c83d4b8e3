//! Exact transfer between two densities along their linear interpolation,
//! driven by a field built from a single Neumann Poisson solve.

use alloc::vec::Vec;
// libm-backed f64 methods; rustc misreports this import as unused
#[allow(unused_imports)]
use num_traits::Float;

use crate::density::{grad_sup_norm, DensityField};
use crate::error::{Error, Result};
use crate::fpe::{bernoulli, TimeField};
use crate::grid::{self, CellField, FaceField, Grid};
use crate::linalg;

pub const POISSON_TOL: f64 = 1e-10;
pub const POISSON_MAX_ITER: usize = 20_000;
/// Instants probed for the cached sup-norm.
pub const SUP_PROBES: usize = 32;

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub phi: CellField,
    /// mean subtracted from the right-hand side before solving
    pub removed_mean: f64,
    pub iterations: usize,
    /// L2 norm of `laplacian(phi) - rhs` after the projection
    pub residual: f64,
}

/// Zero-mean solution of `laplacian(phi) = rhs` with no-flux boundary. The
/// mean of `rhs` is removed first (compatibility) and reported.
pub fn solve_neumann_poisson(rhs: &CellField, tol: f64, max_iter: usize) -> Result<PoissonSolution> {
    let g = *rhs.grid();
    let n = g.num_cells();
    let removed_mean = linalg::compensated_sum(rhs.values()) / n as f64;
    let b: Vec<f64> = rhs.values().iter().map(|v| removed_mean - v).collect();
    let diag = grid::neg_laplacian_diagonal(&g);
    let (mut x, stats) = linalg::conjugate_gradient(
        |x, y| grid::apply_neg_laplacian(&g, x, y),
        &diag,
        &b,
        None,
        tol,
        max_iter,
        true,
        g.cell_volume(),
    )?;
    linalg::remove_mean(&mut x);
    let phi = CellField::new(g, x)?;
    let projected = rhs.map(|v| v - removed_mean);
    let residual = grid::laplacian(&phi).sub(&projected)?.l2_norm();
    Ok(PoissonSolution {
        phi,
        removed_mean,
        iterations: stats.iterations,
        residual,
    })
}

/// `dB/dz`, continuous through zero and free of overflow for large `|z|`.
fn bernoulli_slope(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        -0.5 + z / 6.0
    } else if z > 0.0 {
        let e = (-z).exp();
        (e - e * e - z * e) / ((1.0 - e) * (1.0 - e))
    } else {
        let e = z.exp_m1();
        (e - z * z.exp()) / (e * e)
    }
}

/// Drift `v` with Chang–Cooper flux `(B(-vh) l - B(vh) r) / h = target`.
/// The flux is increasing in `v` with slope between `min(l, r)` and
/// `max(l, r)`, so a bracketed Newton iteration converges quickly.
pub fn chang_cooper_drift_for_flux(l: f64, r: f64, h: f64, target: f64) -> f64 {
    let flux = |v: f64| (bernoulli(-v * h) * l - bernoulli(v * h) * r) / h;
    let lo_slope = l.min(r);
    // flux(v) - target changes sign within |v - v0| <= |residual| / lo_slope
    let v0 = (target + (r - l) / h) / (0.5 * (l + r));
    let f0 = flux(v0) - target;
    if f0 == 0.0 {
        return v0;
    }
    let width = f0.abs() / lo_slope * 1.01 + 1e-300;
    let (mut a, mut b) = if f0 > 0.0 { (v0 - width, v0) } else { (v0, v0 + width) };
    let mut v = v0;
    let mut fv = f0;
    for _ in 0..100 {
        let z = v * h;
        let slope = (1.0 + bernoulli_slope(z)) * l - bernoulli_slope(z) * r;
        let mut next = v - fv / slope;
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        let fn_ = flux(next) - target;
        if fn_ > 0.0 {
            b = next;
        } else {
            a = next;
        }
        let done = (next - v).abs() <= 1e-15 * next.abs().max(1.0) || fn_ == 0.0;
        v = next;
        fv = fn_;
        if done || b - a <= 1e-15 * v.abs().max(1.0) {
            break;
        }
    }
    v
}

/// Face drift whose Chang–Cooper flux at density `rho` equals `flux`
/// exactly, i.e. `flux + grad rho` divided by the face density the scheme
/// effectively uses.
pub fn drift_for_flux(rho: &CellField, flux: &FaceField) -> Result<FaceField> {
    let g = *rho.grid();
    if *flux.grid() != g {
        return Err(Error::GridMismatch);
    }
    if rho.min() <= 0.0 {
        return Err(Error::InvalidDensity(
            "face drift needs a positive density".into(),
        ));
    }
    let mut out = FaceField::zeros(g);
    for a in 0..g.dim() {
        let h = g.cell_width(a);
        for (fi, v) in out.axis_mut(a).iter_mut().enumerate() {
            let (l, r) = g.face_cells(a, fi);
            *v = chang_cooper_drift_for_flux(rho.values()[l], rho.values()[r], h, flux.axis(a)[fi]);
        }
    }
    Ok(out)
}

/// Transfer field from `rho0` to `rhod` on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct MoserField {
    pub rho0: DensityField,
    pub rhod: DensityField,
    pub phi: CellField,
    /// sup over probed instants of the face drift
    pub sup_norm: f64,
    /// `sup_norm * l / max(|grad rho0|, |grad rhod|)`; NaN when both
    /// gradients vanish
    pub empirical_2c: f64,
    /// mean removed from `rhod - rho0` before the Poisson solve
    pub mean_shift: f64,
    pub poisson_residual: f64,
}

impl MoserField {
    pub fn grid(&self) -> &Grid {
        self.rho0.grid()
    }

    pub fn floor(&self) -> f64 {
        self.rho0.floor().min(self.rhod.floor())
    }

    /// `(1 - t) rho0 + t rhod`
    pub fn interpolant(&self, t: f64) -> CellField {
        self.rho0
            .field()
            .zip(self.rhod.field(), |a, b| (1.0 - t) * a + t * b)
            .expect("grids checked")
    }

    /// Drift at time `t`.
    pub fn drift(&self, t: f64) -> FaceField {
        drift_at(&self.interpolant(t), &self.phi)
    }

    pub fn as_timefield(&self) -> Result<TimeField> {
        let this = self.clone();
        TimeField::continuous(*self.grid(), 1.0, SUP_PROBES, move |t| this.drift(t))
    }
}

/// The flux must be `-grad phi`, making `-div J = laplacian(phi) = rhod - rho0`.
fn drift_at(rho_t: &CellField, phi: &CellField) -> FaceField {
    let flux = grid::gradient(phi).scale(-1.0);
    drift_for_flux(rho_t, &flux).expect("interpolant stays above the floor")
}

pub fn build_moser_field(rho0: &DensityField, rhod: &DensityField) -> Result<MoserField> {
    if rho0.grid() != rhod.grid() {
        return Err(Error::GridMismatch);
    }
    for (name, rho) in [("rho0", rho0), ("rhod", rhod)] {
        if !(rho.floor() > 0.0) {
            return Err(Error::InvalidDensity(alloc::format!(
                "{name} has floor {} but the transfer needs a positive floor",
                rho.floor()
            )));
        }
    }
    let rhs = rhod.field().sub(rho0.field())?;
    let sol = solve_neumann_poisson(&rhs, POISSON_TOL, POISSON_MAX_ITER)?;
    let mut field = MoserField {
        rho0: rho0.clone(),
        rhod: rhod.clone(),
        phi: sol.phi,
        sup_norm: 0.0,
        empirical_2c: f64::NAN,
        mean_shift: sol.removed_mean,
        poisson_residual: sol.residual,
    };
    let sup = (0..=SUP_PROBES)
        .map(|k| field.drift(k as f64 / SUP_PROBES as f64).sup_norm())
        .fold(0.0, f64::max);
    field.sup_norm = sup;
    let grad = grad_sup_norm(rho0).max(grad_sup_norm(rhod));
    if grad > 0.0 {
        field.empirical_2c = sup * field.floor() / grad;
    }
    Ok(field)
}

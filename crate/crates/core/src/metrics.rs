//! Distances between densities and norms of grid fields.

use alloc::vec::Vec;
// libm-backed f64 methods; rustc misreports this import as unused
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::density::DensityField;
use crate::error::{Error, Result};
use crate::grid::{self, CellField, FaceField};

/// Projection directions used for sliced W1 in 2D.
pub const SLICED_DIRECTIONS: usize = 16;
const SLICED_SEED: u64 = 0x5eed_0001;
const MASS_TOL: f64 = 1e-8;

pub fn l2_distance(p: &CellField, q: &CellField) -> Result<f64> {
    Ok(p.sub(q)?.l2_norm())
}

/// `sum_faces |F|^2 g_face * cell_volume`, with `g` interpolated to faces by
/// the arithmetic mean.
pub fn weighted_l2_sq(f: &FaceField, g: &CellField) -> Result<f64> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    if let Some((k, v)) = g.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "negative weight {v} at cell {k}"
        )));
    }
    let grid = *g.grid();
    let w = g.values();
    let mut s = 0.0;
    for a in 0..grid.dim() {
        for (fi, &v) in f.axis(a).iter().enumerate() {
            let (l, r) = grid.face_cells(a, fi);
            s += v * v * 0.5 * (w[l] + w[r]);
        }
    }
    Ok(s * grid.cell_volume())
}

/// Face L2 norm of the discrete gradient.
pub fn h1_seminorm(p: &CellField) -> f64 {
    grid::gradient(p).l2_norm()
}

/// `sqrt(||p||^2 + |p|_1^2)`
pub fn h1_norm(p: &CellField) -> f64 {
    let l2 = p.l2_norm();
    let s = h1_seminorm(p);
    (l2 * l2 + s * s).sqrt()
}

/// A W1 value together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct W1Distance {
    pub value: f64,
    /// false when the value is the sliced approximation used in 2D
    pub exact: bool,
}

/// 1-Wasserstein distance. Exact in 1D (integral of the CDF gap between
/// piecewise-constant densities); sliced over a fixed seeded set of
/// directions in 2D.
pub fn w1_distance(p: &DensityField, q: &DensityField) -> Result<W1Distance> {
    if p.grid() != q.grid() {
        return Err(Error::GridMismatch);
    }
    for m in [p.mass(), q.mass()] {
        if (m - 1.0).abs() > MASS_TOL {
            return Err(Error::MassMismatch(m - 1.0));
        }
    }
    if p.grid().dim() == 1 {
        Ok(W1Distance {
            value: w1_line(p.values(), q.values(), p.grid().cell_width(0)),
            exact: true,
        })
    } else {
        Ok(W1Distance {
            value: w1_sliced(p, q),
            exact: false,
        })
    }
}

/// Exact integral of `|F_p - F_q|` for piecewise-constant densities on
/// equal cells of width `h`. The gap is linear inside each cell, so each
/// cell contributes a trapezoid or, on a sign change, two triangles.
pub fn w1_line(p: &[f64], q: &[f64], h: f64) -> f64 {
    let mut gap = 0.0;
    let mut total = 0.0;
    for (a, b) in p.iter().zip(q) {
        let next = gap + (a - b) * h;
        total += if gap * next >= 0.0 {
            0.5 * h * (gap.abs() + next.abs())
        } else {
            0.5 * h * (gap * gap + next * next) / (gap.abs() + next.abs())
        };
        gap = next;
    }
    total
}

fn w1_sliced(p: &DensityField, q: &DensityField) -> f64 {
    let g = *p.grid();
    let vol = g.cell_volume();
    let centers = g.cell_centers();
    let mut rng = ChaCha8Rng::seed_from_u64(SLICED_SEED);
    let mut acc = 0.0;
    let mut order: Vec<usize> = (0..g.num_cells()).collect();
    let mut proj = alloc::vec![0.0; g.num_cells()];
    for _ in 0..SLICED_DIRECTIONS {
        let theta: f64 = rng.random::<f64>() * core::f64::consts::PI;
        let (s, c) = theta.sin_cos();
        for (k, x) in centers.iter().enumerate() {
            proj[k] = c * x[0] + s * x[1];
        }
        order.sort_by(|&i, &j| proj[i].total_cmp(&proj[j]));
        let mut gap = 0.0;
        for w in order.windows(2) {
            gap += (p.values()[w[0]] - q.values()[w[0]]) * vol;
            acc += gap.abs() * (proj[w[1]] - proj[w[0]]);
        }
    }
    acc / SLICED_DIRECTIONS as f64
}

/// `sum p ln(p / q) * cell_volume` with `0 ln 0 = 0`.
pub fn kl_divergence(p: &DensityField, q: &DensityField) -> Result<f64> {
    if p.grid() != q.grid() {
        return Err(Error::GridMismatch);
    }
    let mut s = 0.0;
    for (k, (&a, &b)) in p.values().iter().zip(q.values()).enumerate() {
        if a > 0.0 {
            if !(b > 0.0) {
                return Err(Error::Support { cell: k, p: a, q: b });
            }
            s += a * (a / b).ln();
        }
    }
    Ok(s * p.grid().cell_volume())
}

/// The three distances of the W1 / KL / squared-L2 chain and their ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainReport {
    pub w1: f64,
    pub kl: f64,
    pub l2_sq: f64,
    /// NaN when `kl` is zero
    pub ratio_w1_kl: f64,
    /// NaN when `l2_sq` is zero
    pub ratio_kl_l2sq: f64,
}

pub fn inequality_chain_report(p: &DensityField, q: &DensityField) -> Result<ChainReport> {
    let w1 = w1_distance(p, q)?.value;
    let kl = kl_divergence(p, q)?;
    let l2 = l2_distance(p.field(), q.field())?;
    let l2_sq = l2 * l2;
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { f64::NAN };
    Ok(ChainReport {
        w1,
        kl,
        l2_sq,
        ratio_w1_kl: ratio(w1, kl),
        ratio_kl_l2sq: ratio(kl, l2_sq),
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::uniform_density;
    use crate::grid::Grid;
    use core::f64::consts::PI;

    fn cosine_density(g: Grid, a: f64) -> DensityField {
        DensityField::new(CellField::from_fn(g, |x| 1.0 + a * (PI * x[0]).cos())).unwrap()
    }

    #[test]
    fn l2_of_cosine_perturbation() {
        let g = Grid::line(512).unwrap();
        let p = cosine_density(g, 0.5);
        let u = uniform_density(&g);
        let d = l2_distance(p.field(), u.field()).unwrap();
        assert!((d - 0.5 / 2f64.sqrt()).abs() < 0.005 * 0.353_553);
        assert_eq!(l2_distance(p.field(), p.field()).unwrap(), 0.0);
    }

    #[test]
    fn weighted_norm_cases() {
        let g = Grid::square(32).unwrap();
        let u = uniform_density(&g);
        assert_eq!(weighted_l2_sq(&FaceField::zeros(g), u.field()).unwrap(), 0.0);
        let f = FaceField::from_vector_fn(g, |x| [x[0].sin(), x[1] * x[0]]);
        let plain = f.l2_norm().powi(2);
        assert!((weighted_l2_sq(&f, u.field()).unwrap() - plain).abs() < 1e-14);
        // constant field: c^2 * d up to the half-cell boundary layer
        let c = FaceField::constant(g, [0.7, 0.7]);
        let w = weighted_l2_sq(&c, u.field()).unwrap();
        assert!((w - 0.49 * 2.0).abs() <= 0.49 * 2.0 * g.cell_width(0) + 1e-12);
        let neg = CellField::constant(g, -1.0);
        assert!(weighted_l2_sq(&c, &neg).is_err());
    }

    #[test]
    fn h1_of_cosine() {
        let g = Grid::line(256).unwrap();
        let f = CellField::from_fn(g, |x| (PI * x[0]).cos());
        assert!((h1_seminorm(&f) - PI / 2f64.sqrt()).abs() < 0.01 * PI / 2f64.sqrt());
        assert_eq!(h1_seminorm(&CellField::constant(g, 2.0)), 0.0);
        let c64 = h1_seminorm(&CellField::from_fn(Grid::line(64).unwrap(), |x| (PI * x[0]).cos()));
        let c128 =
            h1_seminorm(&CellField::from_fn(Grid::line(128).unwrap(), |x| (PI * x[0]).cos()));
        assert!((c64 - c128).abs() < 0.01 * c128);
    }

    #[test]
    fn w1_of_half_box() {
        let g = Grid::line(16).unwrap();
        let half = DensityField::new(CellField::from_fn(g, |x| if x[0] < 0.5 { 2.0 } else { 0.0 }))
            .unwrap();
        let u = uniform_density(&g);
        let d = w1_distance(&u, &half).unwrap();
        assert!(d.exact);
        assert!((d.value - 0.25).abs() < 1e-14);
        assert_eq!(w1_distance(&half, &u).unwrap().value, d.value);
        assert_eq!(w1_distance(&u, &u).unwrap().value, 0.0);
    }

    #[test]
    fn w1_rejects_mass_mismatch() {
        let g = Grid::line(8).unwrap();
        let p = DensityField::new(CellField::constant(g, 1.1)).unwrap();
        assert!(matches!(
            w1_distance(&p, &uniform_density(&g)),
            Err(Error::MassMismatch(_))
        ));
    }

    #[test]
    fn sliced_w1_is_flagged_and_symmetric() {
        let g = Grid::square(16).unwrap();
        let p = DensityField::normalized(CellField::from_fn(g, |x| 1.0 + x[0])).unwrap();
        let u = uniform_density(&g);
        let a = w1_distance(&p, &u).unwrap();
        let b = w1_distance(&u, &p).unwrap();
        assert!(!a.exact);
        assert!(a.value > 0.0);
        assert!((a.value - b.value).abs() < 1e-14);
    }

    #[test]
    fn kl_support_violation_reports_cell() {
        let g = Grid::line(8).unwrap();
        let q = DensityField::new(CellField::from_fn(g, |x| if x[0] < 0.5 { 2.0 } else { 0.0 }))
            .unwrap();
        match kl_divergence(&uniform_density(&g), &q) {
            Err(Error::Support { cell, .. }) => assert_eq!(cell, 4),
            other => panic!("{other:?}"),
        }
        // the reverse direction is fine: 0 ln 0 = 0
        assert!(kl_divergence(&q, &uniform_density(&g)).unwrap() > 0.0);
    }

    #[test]
    fn chain_report_of_identical_pair() {
        let g = Grid::line(32).unwrap();
        let p = cosine_density(g, 0.3);
        let r = inequality_chain_report(&p, &p).unwrap();
        assert_eq!((r.w1, r.kl, r.l2_sq), (0.0, 0.0, 0.0));
        assert!(r.ratio_w1_kl.is_nan());
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((log_log_slope(&x, &y) - 1.5).abs() < 1e-12);
    }
}

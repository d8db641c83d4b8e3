//! Cell-centered finite-volume grid on the unit box `[0,1]^d`, `d` in {1, 2}.
//!
//! Cells are indexed lexicographically, `k = i * ny + j` with `i` along x and
//! `j` along y; a 1D grid is the special case `ny = 1`. Face fields store only
//! interior faces: boundary faces carry zero flux by construction, which is
//! the discrete no-flux condition.

// libm-backed f64 methods; rustc misreports this import as unused
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;

/// Smallest admissible number of cells along an axis.
pub const MIN_CELLS: usize = 4;

/// A point of the box; only the first `dim` coordinates are meaningful.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    cells: [usize; 2],
    width: [f64; 2],
}

impl Grid {
    /// Builds the uniform grid with `cells_per_axis[a]` cells along axis `a`.
    pub fn new(dim: usize, cells_per_axis: &[usize]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(alloc::format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if cells_per_axis.len() != dim {
            return Err(Error::InvalidGrid(alloc::format!(
                "expected {dim} cell counts, got {}",
                cells_per_axis.len()
            )));
        }
        if let Some(&n) = cells_per_axis.iter().find(|&&n| n < MIN_CELLS) {
            return Err(Error::InvalidGrid(alloc::format!(
                "at least {MIN_CELLS} cells per axis required, got {n}"
            )));
        }
        let mut cells = [1usize; 2];
        let mut width = [1.0; 2];
        for (a, &n) in cells_per_axis.iter().enumerate() {
            cells[a] = n;
            width[a] = 1.0 / n as f64;
        }
        Ok(Self { dim, cells, width })
    }

    pub fn line(cells: usize) -> Result<Self> {
        Self::new(1, &[cells])
    }

    pub fn square(cells: usize) -> Result<Self> {
        Self::new(2, &[cells, cells])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    /// Cell count along `axis`; 1 for the unused axis of a 1D grid.
    pub fn cells_along(&self, axis: usize) -> usize {
        self.cells[axis]
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        self.width[axis]
    }

    /// Largest cell width over the active axes.
    pub fn max_cell_width(&self) -> f64 {
        self.width[..self.dim].iter().copied().fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        self.width[0] * self.width[1]
    }

    pub fn num_cells(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.cells[1] + j
    }

    #[inline]
    pub fn unindex(&self, k: usize) -> (usize, usize) {
        (k / self.cells[1], k % self.cells[1])
    }

    pub fn cell_center(&self, k: usize) -> Point {
        let (i, j) = self.unindex(k);
        [
            (i as f64 + 0.5) * self.width[0],
            (j as f64 + 0.5) * self.width[1],
        ]
    }

    pub fn cell_centers(&self) -> Vec<Point> {
        (0..self.num_cells()).map(|k| self.cell_center(k)).collect()
    }

    /// Number of interior faces normal to `axis`.
    pub fn num_faces(&self, axis: usize) -> usize {
        if axis >= self.dim {
            return 0;
        }
        match axis {
            0 => (self.cells[0] - 1) * self.cells[1],
            _ => self.cells[0] * (self.cells[1] - 1),
        }
    }

    /// The two cells (left, right) separated by face `f` normal to `axis`.
    #[inline]
    pub fn face_cells(&self, axis: usize, f: usize) -> (usize, usize) {
        let ny = self.cells[1];
        if axis == 0 {
            let (i, j) = (f / ny, f % ny);
            (self.index(i, j), self.index(i + 1, j))
        } else {
            let (i, j) = (f / (ny - 1), f % (ny - 1));
            (self.index(i, j), self.index(i, j + 1))
        }
    }

    pub fn face_center(&self, axis: usize, f: usize) -> Point {
        let (l, r) = self.face_cells(axis, f);
        let a = self.cell_center(l);
        let b = self.cell_center(r);
        [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
    }

    /// Half bandwidth of the cell adjacency matrix.
    pub fn bandwidth(&self) -> usize {
        self.cells[1]
    }
}

/// One scalar per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    grid: Grid,
    values: Vec<f64>,
}

impl CellField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(Error::InvalidArgument(alloc::format!(
                "cell field needs {} values, got {}",
                grid.num_cells(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.num_cells()],
        }
    }

    /// Samples `f` at the cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..grid.num_cells()).map(|k| f(grid.cell_center(k))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Cell-volume weighted sum, the quadrature of the integral.
    /// Summation is compensated so that unit-mass checks are accurate to a
    /// few ulps regardless of the cell count.
    pub fn integral(&self) -> f64 {
        linalg::compensated_sum(&self.values) * self.grid.cell_volume()
    }

    /// Cell-volume weighted L2 inner product.
    pub fn dot(&self, other: &CellField) -> Result<f64> {
        self.check(other)?;
        Ok(linalg::dot(&self.values, &other.values) * self.grid.cell_volume())
    }

    pub fn l2_norm(&self) -> f64 {
        (linalg::dot(&self.values, &self.values) * self.grid.cell_volume()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sub(&self, other: &CellField) -> Result<CellField> {
        self.zip(other, |a, b| a - b)
    }

    pub fn add(&self, other: &CellField) -> Result<CellField> {
        self.zip(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> CellField {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> CellField {
        CellField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &CellField, f: impl Fn(f64, f64) -> f64) -> Result<CellField> {
        self.check(other)?;
        Ok(CellField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    fn check(&self, other: &CellField) -> Result<()> {
        if self.grid != other.grid {
            Err(Error::GridMismatch)
        } else {
            Ok(())
        }
    }
}

/// One scalar per interior face and axis (the normal component).
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    grid: Grid,
    axes: [Vec<f64>; 2],
}

impl FaceField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            axes: [vec![0.0; grid.num_faces(0)], vec![0.0; grid.num_faces(1)]],
        }
    }

    /// Builds a field from per-axis interior face values.
    pub fn new(grid: Grid, axes: [Vec<f64>; 2]) -> Result<Self> {
        for (a, v) in axes.iter().enumerate() {
            if v.len() != grid.num_faces(a) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "axis {a} needs {} face values, got {}",
                    grid.num_faces(a),
                    v.len()
                )));
            }
        }
        Ok(Self { grid, axes })
    }

    /// Samples the normal component of a vector field at face centers.
    pub fn from_vector_fn(grid: Grid, f: impl Fn(Point) -> Point) -> Self {
        let mut out = Self::zeros(grid);
        for a in 0..grid.dim() {
            for fi in 0..grid.num_faces(a) {
                out.axes[a][fi] = f(grid.face_center(a, fi))[a];
            }
        }
        out
    }

    /// Spatially constant drift `c`.
    pub fn constant(grid: Grid, c: Point) -> Self {
        Self::from_vector_fn(grid, |_| c)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn axis(&self, a: usize) -> &[f64] {
        &self.axes[a]
    }

    pub fn axis_mut(&mut self, a: usize) -> &mut [f64] {
        &mut self.axes[a]
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.axes[0].iter().chain(self.axes[1].iter())
    }

    pub fn sup_norm(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Face inner product weighted by the cell volume.
    pub fn dot(&self, other: &FaceField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let s: f64 = (0..2).map(|a| linalg::dot(&self.axes[a], &other.axes[a])).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = (0..2).map(|a| linalg::dot(&self.axes[a], &self.axes[a])).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> FaceField {
        FaceField {
            grid: self.grid,
            axes: [
                self.axes[0].iter().map(|&v| f(v)).collect(),
                self.axes[1].iter().map(|&v| f(v)).collect(),
            ],
        }
    }

    pub fn scale(&self, s: f64) -> FaceField {
        self.map(|v| v * s)
    }

    pub fn zip(&self, other: &FaceField, f: impl Fn(f64, f64) -> f64) -> Result<FaceField> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let z = |a: usize| -> Vec<f64> {
            self.axes[a]
                .iter()
                .zip(&other.axes[a])
                .map(|(&x, &y)| f(x, y))
                .collect()
        };
        Ok(FaceField {
            grid: self.grid,
            axes: [z(0), z(1)],
        })
    }

    pub fn add(&self, other: &FaceField) -> Result<FaceField> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &FaceField) -> Result<FaceField> {
        self.zip(other, |a, b| a - b)
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &FaceField) -> Result<FaceField> {
        self.zip(other, |a, b| a + s * b)
    }

    /// Evaluates the drift at an arbitrary point of the box.
    ///
    /// Component `a` is interpolated (linearly in 1D, bilinearly in 2D) from
    /// the interior faces normal to `a`. Outside the outermost interior faces
    /// the nearest face value is held constant.
    pub fn interpolate(&self, x: Point) -> Point {
        let g = &self.grid;
        let mut out = [0.0; 2];
        for a in 0..g.dim() {
            // face lattice along `a`: positions k*h, k = 1..n-1
            let n = g.cells_along(a);
            let h = g.cell_width(a);
            let (ka, wa) = lattice_weights(x[a] / h - 1.0, n - 1);
            if g.dim() == 1 {
                let v = &self.axes[a];
                out[a] = v[ka] * (1.0 - wa) + v[(ka + 1).min(n - 2)] * wa;
                continue;
            }
            // transverse axis lattice: cell centers (k+1/2)*h_t, k = 0..n_t-1
            let t = 1 - a;
            let nt = g.cells_along(t);
            let ht = g.cell_width(t);
            let (kt, wt) = lattice_weights(x[t] / ht - 0.5, nt);
            let at = |ia: usize, it: usize| -> f64 {
                // face normal to `a` at lattice (ia, it)
                let f = if a == 0 { ia * nt + it } else { it * (n - 1) + ia };
                self.axes[a][f]
            };
            let ia1 = (ka + 1).min(n - 2);
            let it1 = (kt + 1).min(nt - 1);
            out[a] = (1.0 - wa) * (1.0 - wt) * at(ka, kt)
                + wa * (1.0 - wt) * at(ia1, kt)
                + (1.0 - wa) * wt * at(ka, it1)
                + wa * wt * at(ia1, it1);
        }
        out
    }
}

/// Splits the continuous lattice coordinate `s` on nodes `0..count` into the
/// lower node and interpolation weight, clamping at both ends.
fn lattice_weights(s: f64, count: usize) -> (usize, f64) {
    if count <= 1 || s <= 0.0 {
        return (0, 0.0);
    }
    let last = (count - 1) as f64;
    if s >= last {
        return (count - 1, 0.0);
    }
    let k = s.floor();
    (k as usize, s - k)
}

/// Difference quotient across every interior face.
pub fn gradient(f: &CellField) -> FaceField {
    let g = *f.grid();
    let mut out = FaceField::zeros(g);
    for a in 0..g.dim() {
        let h = g.cell_width(a);
        for fi in 0..g.num_faces(a) {
            let (l, r) = g.face_cells(a, fi);
            out.axes[a][fi] = (f.values[r] - f.values[l]) / h;
        }
    }
    out
}

/// Net outflow per cell; boundary faces contribute nothing.
pub fn divergence(flux: &FaceField) -> CellField {
    let g = *flux.grid();
    let mut out = CellField::zeros(g);
    for a in 0..g.dim() {
        let h = g.cell_width(a);
        for (fi, &v) in flux.axes[a].iter().enumerate() {
            let (l, r) = g.face_cells(a, fi);
            out.values[l] += v / h;
            out.values[r] -= v / h;
        }
    }
    out
}

/// Discrete Neumann Laplacian, `divergence(gradient(f))`.
pub fn laplacian(f: &CellField) -> CellField {
    divergence(&gradient(f))
}

/// Diagonal of the negated discrete Neumann Laplacian.
pub(crate) fn neg_laplacian_diagonal(g: &Grid) -> Vec<f64> {
    let mut d = vec![0.0; g.num_cells()];
    for a in 0..g.dim() {
        let h2 = g.cell_width(a) * g.cell_width(a);
        for fi in 0..g.num_faces(a) {
            let (l, r) = g.face_cells(a, fi);
            d[l] += 1.0 / h2;
            d[r] += 1.0 / h2;
        }
    }
    d
}

/// Applies the negated Laplacian to raw cell values.
pub(crate) fn apply_neg_laplacian(g: &Grid, x: &[f64], y: &mut [f64]) {
    y.iter_mut().for_each(|v| *v = 0.0);
    for a in 0..g.dim() {
        let h2 = g.cell_width(a) * g.cell_width(a);
        for fi in 0..g.num_faces(a) {
            let (l, r) = g.face_cells(a, fi);
            let flux = (x[r] - x[l]) / h2;
            y[l] -= flux;
            y[r] += flux;
        }
    }
}

/// Smallest nonzero eigenvalue of the negated discrete Neumann Laplacian.
///
/// Two-vector subspace inverse iteration on the mean-zero subspace with a
/// Rayleigh–Ritz step, so that nearly or exactly coincident low modes (as on
/// square or almost-square grids) do not slow convergence. Inner solves use
/// conjugate gradients.
pub fn neumann_spectral_gap(grid: &Grid) -> Result<f64> {
    neumann_spectral_gap_with(grid, 1e-12, 500)
}

pub fn neumann_spectral_gap_with(grid: &Grid, tol: f64, max_iter: usize) -> Result<f64> {
    let n = grid.num_cells();
    let diag = neg_laplacian_diagonal(grid);
    let apply = |x: &[f64], y: &mut [f64]| apply_neg_laplacian(grid, x, y);
    // deterministic start vectors with components along every low mode
    let start = |f: &dyn Fn(Point) -> f64| -> Vec<f64> {
        (0..n).map(|k| f(grid.cell_center(k))).collect()
    };
    let mut basis = [
        start(&|c| c[0] + 0.37 * c[1] + 0.1 * (7.0 * c[0] + 3.0 * c[1]).sin()),
        start(&|c| (c[0] - 0.3) * (c[0] - 0.3) + 0.8 * c[1] + 0.05 * (11.0 * c[0] + 4.0 * c[1]).cos()),
    ];
    orthonormalize(&mut basis);
    let mut lambda = f64::INFINITY;
    let mut change = f64::INFINITY;
    let mut av = [vec![0.0; n], vec![0.0; n]];
    for _ in 0..max_iter {
        for v in basis.iter_mut() {
            let (w, _) =
                linalg::conjugate_gradient(apply, &diag, v, Some(v), 1e-11, 20 * n, true, 1.0)?;
            *v = w;
        }
        orthonormalize(&mut basis);
        apply(&basis[0], &mut av[0]);
        apply(&basis[1], &mut av[1]);
        let h00 = linalg::dot(&basis[0], &av[0]);
        let h11 = linalg::dot(&basis[1], &av[1]);
        let h01 = 0.5 * (linalg::dot(&basis[0], &av[1]) + linalg::dot(&basis[1], &av[0]));
        // Ritz pair of the 2x2 projection, smaller value first
        let mean = 0.5 * (h00 + h11);
        let rad = (0.25 * (h00 - h11) * (h00 - h11) + h01 * h01).sqrt();
        let rq = mean - rad;
        let (c, s) = if h01 == 0.0 {
            if h00 <= h11 { (1.0, 0.0) } else { (0.0, 1.0) }
        } else {
            let (x, y) = (h01, rq - h00);
            let r = (x * x + y * y).sqrt();
            (x / r, y / r)
        };
        let (b0, b1) = (&basis[0], &basis[1]);
        let low: Vec<f64> = b0.iter().zip(b1).map(|(p, q)| c * p + s * q).collect();
        let high: Vec<f64> = b0.iter().zip(b1).map(|(p, q)| -s * p + c * q).collect();
        basis = [low, high];
        change = (rq - lambda).abs() / rq;
        lambda = rq;
        if change < tol {
            return Ok(lambda);
        }
    }
    Err(Error::Eigensolver {
        iterations: max_iter,
        change,
    })
}

/// Gram–Schmidt on mean-zero copies; a degenerate second vector is replaced
/// by a fixed oscillation.
fn orthonormalize(basis: &mut [Vec<f64>; 2]) {
    for v in basis.iter_mut() {
        linalg::remove_mean(v);
    }
    let n0 = linalg::norm2(&basis[0]);
    basis[0].iter_mut().for_each(|x| *x /= n0);
    for attempt in 0..2 {
        let d = linalg::dot(&basis[0], &basis[1]);
        let (b0, b1) = basis.split_at_mut(1);
        b1[0].iter_mut().zip(&b0[0]).for_each(|(x, y)| *x -= d * y);
        let n1 = linalg::norm2(&basis[1]);
        if n1 > 1e-8 || attempt == 1 {
            basis[1].iter_mut().for_each(|x| *x /= n1);
            return;
        }
        let len = basis[1].len();
        for (k, x) in basis[1].iter_mut().enumerate() {
            *x = if k % 2 == 0 { 1.0 } else { -1.0 } + k as f64 / len as f64;
        }
        linalg::remove_mean(&mut basis[1]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn builds_line_and_square() {
        let g = Grid::line(8).unwrap();
        let xs: Vec<f64> = g.cell_centers().iter().map(|c| c[0]).collect();
        assert_eq!(xs.len(), 8);
        assert!((xs[0] - 0.0625).abs() < 1e-15);
        assert!((xs[1] - 0.1875).abs() < 1e-15);
        assert!((xs[7] - 0.9375).abs() < 1e-15);
        let s = Grid::new(2, &[4, 4]).unwrap();
        assert_eq!(s.num_cells(), 16);
        assert_eq!(s.cell_volume(), 1.0 / 16.0);
        assert!((s.cell_volume() * s.num_cells() as f64 - 1.0).abs() == 0.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(1, &[2]).is_err());
        assert!(Grid::new(3, &[4, 4, 4]).is_err());
        assert!(Grid::new(0, &[]).is_err());
        assert!(Grid::new(2, &[8]).is_err());
        assert!(Grid::new(2, &[8, 3]).is_err());
    }

    #[test]
    fn gradient_of_constant_and_linear() {
        let g = Grid::line(8).unwrap();
        let c = CellField::constant(g, 3.5);
        assert!(gradient(&c).iter().all(|&v| v == 0.0));
        let lin = CellField::from_fn(g, |p| p[0]);
        for &v in gradient(&lin).axis(0) {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_quadratic_is_exact_at_faces() {
        let g = Grid::line(16).unwrap();
        let q = CellField::from_fn(g, |p| p[0] * p[0]);
        let gr = gradient(&q);
        for (fi, &v) in gr.axis(0).iter().enumerate() {
            let xf = g.face_center(0, fi)[0];
            assert!((v - 2.0 * xf).abs() < 1e-12, "face {fi}: {v} vs {}", 2.0 * xf);
        }
        // second difference of x^2 is 2 away from the boundary cells
        let d = divergence(&gr);
        for &v in &d.values()[1..15] {
            assert!((v - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn divergence_is_conservative() {
        let g = Grid::square(6).unwrap();
        let f = FaceField::from_vector_fn(g, |p| [(3.0 * p[0]).sin() + p[1], p[0] * p[1] - 2.0]);
        assert!(divergence(&f).integral().abs() < 1e-13);
        assert!(divergence(&FaceField::zeros(g)).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_of_cosine_mode() {
        let g = Grid::line(64).unwrap();
        let f = CellField::from_fn(g, |p| (PI * p[0]).cos());
        let l = laplacian(&f);
        let h = g.cell_width(0);
        for (lv, fv) in l.values().iter().zip(f.values()) {
            // exact discrete eigenvalue is -(4/h^2) sin^2(pi h / 2)
            assert!((lv + PI * PI * fv).abs() <= PI.powi(4) * h * h / 12.0 * fv.abs() + 1e-9);
        }
        assert!(l.integral().abs() < 1e-12);
    }

    #[test]
    fn spectral_gap_on_line_and_square() {
        let g = Grid::line(64).unwrap();
        let gap = neumann_spectral_gap(&g).unwrap();
        let h = g.cell_width(0);
        let exact = 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert!((gap - exact).abs() < 1e-9 * exact);
        let s = Grid::square(16).unwrap();
        let gap2 = neumann_spectral_gap(&s).unwrap();
        assert!((gap2 - PI * PI).abs() < 0.02 * PI * PI);
    }

    #[test]
    fn interpolation_of_linear_drift() {
        let g = Grid::square(8).unwrap();
        let f = FaceField::from_vector_fn(g, |p| [2.0 * p[0] - p[1], p[0] + 0.5 * p[1]]);
        let x = [0.43, 0.61];
        let v = f.interpolate(x);
        assert!((v[0] - (2.0 * x[0] - x[1])).abs() < 1e-12);
        assert!((v[1] - (x[0] + 0.5 * x[1])).abs() < 1e-12);
        let line = Grid::line(10).unwrap();
        let c = FaceField::constant(line, [1.0, 0.0]);
        assert_eq!(c.interpolate([0.99, 0.5])[0], 1.0);
        assert_eq!(c.interpolate([0.0, 0.5])[0], 1.0);
    }
}

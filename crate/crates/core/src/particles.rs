//! Particle realizations of the density equations on the unit box:
//! Euler–Maruyama with folding reflection, its noiseless variant, and
//! histogram density estimates.

use alloc::vec::Vec;
// libm-backed f64 methods; rustc misreports this import as unused
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::density::DensityField;
use crate::error::{Error, Result};
use crate::fpe::TimeField;
use crate::grid::{CellField, FaceField, Grid, Point};

/// A drift that can be evaluated at arbitrary points of the box.
pub trait VectorField {
    fn eval(&self, x: Point) -> Point;
}

impl VectorField for FaceField {
    fn eval(&self, x: Point) -> Point {
        self.interpolate(x)
    }
}

impl<F: Fn(Point) -> Point> VectorField for F {
    fn eval(&self, x: Point) -> Point {
        self(x)
    }
}

/// Folds `x` back into `[0, 1]` by repeated mirror reflection at 0 and 1.
pub fn fold(x: f64) -> f64 {
    let mut y = x % 2.0;
    if y < 0.0 {
        y += 2.0;
    }
    if y > 1.0 {
        2.0 - y
    } else {
        y
    }
}

#[derive(Debug, Clone)]
pub struct Particle {
    pub position: Point,
    rng: ChaCha8Rng,
}

impl Particle {
    /// Particle `index` of an ensemble seeded with `seed`; each index reads
    /// its own ChaCha stream.
    pub fn new(position: Point, seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { position, rng }
    }

    /// `x += factor * v(x) dt + sqrt(2 dt) * scale * xi`, then folding.
    pub fn sde_step<V: VectorField + ?Sized>(
        &mut self,
        dim: usize,
        drift: &V,
        dt: f64,
        factor: f64,
        scale: f64,
    ) {
        let v = drift.eval(self.position);
        let noise = (2.0 * dt).sqrt() * scale;
        for a in 0..dim {
            let xi: f64 = if scale != 0.0 {
                self.rng.sample(StandardNormal)
            } else {
                0.0
            };
            self.position[a] = fold(self.position[a] + factor * v[a] * dt + noise * xi);
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    pub dim: usize,
    pub particles: Vec<Particle>,
    pub seed: u64,
    pub t: f64,
}

impl ParticleEnsemble {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = Point> + '_ {
        self.particles.iter().map(|p| p.position)
    }

    pub fn all_inside(&self) -> bool {
        self.positions()
            .all(|x| (0..self.dim).all(|a| (0.0..=1.0).contains(&x[a])))
    }
}

/// Draws `n` samples: a cell is picked by inverting the cell CDF, then the
/// point is uniform inside it.
pub fn sample_from_density(rho: &DensityField, n: usize, seed: u64) -> ParticleEnsemble {
    let g = *rho.grid();
    let vol = g.cell_volume();
    let mut cdf = Vec::with_capacity(g.num_cells());
    let mut acc = 0.0;
    for v in rho.values() {
        acc += v * vol;
        cdf.push(acc);
    }
    let total = acc;
    let particles = (0..n)
        .map(|i| {
            let mut p = Particle::new([0.0; 2], seed, i as u64);
            let u: f64 = p.rng.random::<f64>() * total;
            let k = cdf.partition_point(|&c| c <= u).min(g.num_cells() - 1);
            let (ci, cj) = g.unindex(k);
            let mut x = [0.0; 2];
            x[0] = (ci as f64 + p.rng.random::<f64>()) * g.cell_width(0);
            if g.dim() == 2 {
                x[1] = (cj as f64 + p.rng.random::<f64>()) * g.cell_width(1);
            }
            p.position = x;
            p
        })
        .collect();
    ParticleEnsemble {
        dim: g.dim(),
        particles,
        seed,
        t: 0.0,
    }
}

/// Ensemble at given positions, with streams keyed by `seed` and index.
pub fn ensemble_from_positions(dim: usize, positions: &[Point], seed: u64) -> ParticleEnsemble {
    ParticleEnsemble {
        dim,
        particles: positions
            .iter()
            .enumerate()
            .map(|(i, x)| Particle::new(*x, seed, i as u64))
            .collect(),
        seed,
        t: 0.0,
    }
}

pub fn step_sde<V: VectorField + ?Sized>(
    ens: &mut ParticleEnsemble,
    drift: &V,
    dt: f64,
    drift_factor: f64,
    diffusion_scale: f64,
) {
    let dim = ens.dim;
    for p in &mut ens.particles {
        p.sde_step(dim, drift, dt, drift_factor, diffusion_scale);
    }
    ens.t += dt;
}

pub fn step_ode<V: VectorField + ?Sized>(ens: &mut ParticleEnsemble, drift: &V, dt: f64, drift_factor: f64) {
    step_sde(ens, drift, dt, drift_factor, 0.0);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleConfig {
    pub dt: f64,
    /// multiplier on the drift: 2 for the reverse SDE, 1 for the flow ODE
    pub reverse_drift_factor: f64,
    /// 1 for unit diffusion, 0 for the deterministic flow
    pub diffusion_scale: f64,
}

impl ParticleConfig {
    pub fn reverse_sde(dt: f64) -> Self {
        Self {
            dt,
            reverse_drift_factor: 2.0,
            diffusion_scale: 1.0,
        }
    }

    pub fn flow_ode(dt: f64) -> Self {
        Self {
            dt,
            reverse_drift_factor: 1.0,
            diffusion_scale: 0.0,
        }
    }
}

/// Number and length of the equal steps covering `horizon`.
pub fn step_plan(horizon: f64, dt: f64) -> (usize, f64) {
    let n = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    (n, horizon / n as f64)
}

/// Advances the ensemble over `[0, horizon]` with the drift frozen at the
/// left end of every step.
pub fn simulate(
    ens: &mut ParticleEnsemble,
    drift: &TimeField,
    horizon: f64,
    cfg: &ParticleConfig,
) -> Result<()> {
    if !(cfg.dt > 0.0) {
        return Err(Error::InvalidArgument("particle dt must be positive".into()));
    }
    if horizon > drift.horizon() * (1.0 + 1e-12) {
        return Err(Error::HorizonMismatch {
            expected: drift.horizon(),
            got: horizon,
        });
    }
    let (n, h) = step_plan(horizon, cfg.dt);
    for s in 0..n {
        let field = drift.at(s as f64 * h);
        step_sde(ens, field.as_ref(), h, cfg.reverse_drift_factor, cfg.diffusion_scale);
    }
    Ok(())
}

/// Cell counts divided by `n * cell_volume`.
pub fn histogram_density(ens: &ParticleEnsemble, grid: &Grid) -> Result<DensityField> {
    if ens.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if ens.dim != grid.dim() {
        return Err(Error::GridMismatch);
    }
    let mut counts = alloc::vec![0u64; grid.num_cells()];
    let cell = |x: f64, a: usize| {
        let n = grid.cells_along(a);
        ((x * n as f64) as usize).min(n - 1)
    };
    for x in ens.positions() {
        let i = cell(x[0], 0);
        let j = if grid.dim() == 2 { cell(x[1], 1) } else { 0 };
        counts[grid.index(i, j)] += 1;
    }
    let norm = 1.0 / (ens.len() as f64 * grid.cell_volume());
    DensityField::new(CellField::new(
        *grid,
        counts.iter().map(|&c| c as f64 * norm).collect(),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{log_gradient, realize_density, uniform_density, DensitySpec};
    use crate::metrics::w1_distance;

    #[test]
    fn folding() {
        assert!((fold(1.05) - 0.95).abs() < 1e-15);
        assert!((fold(-0.2) - 0.2).abs() < 1e-15);
        assert!((fold(2.3) - 0.3).abs() < 1e-15);
        assert!((fold(-1.7) - 0.3).abs() < 1e-15);
        assert_eq!(fold(0.4), 0.4);
        let mut ens = ensemble_from_positions(1, &[[0.95, 0.0]], 0);
        step_ode(&mut ens, &|_: Point| [1.0, 0.0], 0.1, 1.0);
        assert!((ens.particles[0].position[0] - 0.95).abs() < 1e-15);
    }

    #[test]
    fn uniform_sampling_counts() {
        let g = Grid::line(32).unwrap();
        let n = 100_000;
        let ens = sample_from_density(&uniform_density(&g), n, 7);
        let h = histogram_density(&ens, &g).unwrap();
        let p = g.cell_volume();
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for v in h.values() {
            let count = v * n as f64 * p;
            assert!((count - n as f64 * p).abs() <= 4.0 * sigma);
        }
        assert!((h.mass() - 1.0).abs() < 1e-12);
        let l2 = h.field().sub(uniform_density(&g).field()).unwrap().l2_norm();
        assert!(l2 <= 0.05);
        assert!(sample_from_density(&uniform_density(&g), 0, 1).is_empty());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let g = Grid::square(8).unwrap();
        let rho = realize_density(&DensitySpec::bump([0.3, 0.6], 0.4, 0.1), &g).unwrap();
        let a: Vec<Point> = sample_from_density(&rho, 500, 42).positions().collect();
        let b: Vec<Point> = sample_from_density(&rho, 500, 42).positions().collect();
        let c: Vec<Point> = sample_from_density(&rho, 500, 43).positions().collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|x| (0.0..=1.0).contains(&x[0]) && (0.0..=1.0).contains(&x[1])));
    }

    #[test]
    fn histogram_of_one_cell() {
        let g = Grid::line(10).unwrap();
        let ens = ensemble_from_positions(1, &[[0.31, 0.0], [0.35, 0.0], [0.39, 0.0]], 0);
        let h = histogram_density(&ens, &g).unwrap();
        assert_eq!(h.values()[3], 10.0);
        assert_eq!(h.field().integral(), 1.0);
        let empty = ensemble_from_positions(1, &[], 0);
        assert!(matches!(histogram_density(&empty, &g), Err(Error::EmptyEnsemble)));
    }

    #[test]
    fn still_without_drift_or_noise() {
        let g = Grid::line(16).unwrap();
        let mut ens = sample_from_density(&uniform_density(&g), 100, 3);
        let before: Vec<Point> = ens.positions().collect();
        step_sde(&mut ens, &FaceField::zeros(g), 0.1, 1.0, 0.0);
        assert_eq!(before, ens.positions().collect::<Vec<_>>());
    }

    #[test]
    fn reflected_brownian_motion_spreads_to_uniform() {
        let g = Grid::line(32).unwrap();
        let n = 20_000;
        let mut ens = ensemble_from_positions(1, &alloc::vec![[0.1, 0.0]; n], 5);
        let zero = TimeField::zero(g, 1.0).unwrap();
        simulate(&mut ens, &zero, 1.0, &ParticleConfig { dt: 1e-2, reverse_drift_factor: 1.0, diffusion_scale: 1.0 })
            .unwrap();
        assert!(ens.all_inside());
        let h = histogram_density(&ens, &g).unwrap();
        let w = w1_distance(&h, &uniform_density(&g)).unwrap().value;
        assert!(w <= 3.0 / (n as f64).sqrt() + g.cell_width(0), "{w}");
    }

    #[test]
    fn log_gradient_drift_keeps_its_density() {
        let g = Grid::line(32).unwrap();
        let f = realize_density(&DensitySpec::bump([0.6, 0.5], 0.4, 0.2), &g).unwrap();
        let drift = TimeField::constant(log_gradient(f.field()).unwrap(), 1.0).unwrap();
        let n = 20_000;
        let mut ens = sample_from_density(&uniform_density(&g), n, 8);
        simulate(&mut ens, &drift, 1.0, &ParticleConfig { dt: 1e-3, reverse_drift_factor: 1.0, diffusion_scale: 1.0 })
            .unwrap();
        let h = histogram_density(&ens, &g).unwrap();
        let w = w1_distance(&h, &f).unwrap().value;
        assert!(w <= 3.0 / (n as f64).sqrt() + g.cell_width(0), "{w}");
    }
}

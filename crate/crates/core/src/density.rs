//! Probability densities on the grid and the constructive families used as
//! data and noise distributions.

// libm-backed f64 methods; rustc misreports this import as unused
#[allow(unused_imports)]
use num_traits::Float;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{self, CellField, FaceField, Grid, Point};

/// Relative mass error below which a field counts as already normalized.
const NORMALIZED_EPS: f64 = 1e-14;

/// Nonnegative cell field together with its cached mass and minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    field: CellField,
    mass: f64,
    floor: f64,
}

impl DensityField {
    /// Wraps a nonnegative, finite field. Mass is not forced to one.
    pub fn new(field: CellField) -> Result<Self> {
        if let Some((k, v)) = field
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidDensity(alloc::format!(
                "cell {k} has value {v}"
            )));
        }
        let mass = field.integral();
        let floor = field.min();
        Ok(Self { field, mass, floor })
    }

    /// Wraps and rescales to unit mass.
    pub fn normalized(field: CellField) -> Result<Self> {
        Self::new(field)?.normalize()
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn field(&self) -> &CellField {
        &self.field
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn sup(&self) -> f64 {
        self.field.max()
    }

    /// Rescales to unit mass. A field whose mass is already within a few ulps
    /// of one is returned unchanged, which makes the operation idempotent.
    pub fn normalize(&self) -> Result<Self> {
        if !(self.mass > 0.0) {
            return Err(Error::InvalidDensity("zero mass".into()));
        }
        if (self.mass - 1.0).abs() <= NORMALIZED_EPS {
            return Ok(self.clone());
        }
        let s = 1.0 / self.mass;
        Self::new(self.field.scale(s))
    }

    /// Convex combination `(1 - t) self + t other`.
    pub fn lerp(&self, other: &DensityField, t: f64) -> Result<Self> {
        Self::new(self.field.zip(&other.field, |a, b| (1.0 - t) * a + t * b)?)
    }

    pub fn into_field(self) -> CellField {
        self.field
    }
}

/// Unit-box uniform density, value 1 everywhere.
pub fn uniform_density(grid: &Grid) -> DensityField {
    DensityField::new(CellField::constant(*grid, 1.0)).expect("uniform density is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Uniform,
    /// Raised-cosine bumps mixed with the uniform background.
    BumpMixture,
    /// Gibbs tilt of the uniform density, `exp(sum_k weight_k * bump_k)`,
    /// mixed with the uniform background.
    Tilted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub center: Point,
    pub width: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySpec {
    pub family: Family,
    pub components: Vec<Component>,
    /// Share of mass carried by the uniform background; this is the
    /// guaranteed lower bound of the realized density.
    pub floor_fraction: f64,
}

impl DensitySpec {
    pub fn uniform() -> Self {
        Self {
            family: Family::Uniform,
            components: Vec::new(),
            floor_fraction: 1.0,
        }
    }

    /// Single bump of the given center and width.
    pub fn bump(center: Point, width: f64, floor_fraction: f64) -> Self {
        Self {
            family: Family::BumpMixture,
            components: alloc::vec![Component {
                center,
                width,
                weight: 1.0
            }],
            floor_fraction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems: Vec<String> = Vec::new();
        if !(0.0..=1.0).contains(&self.floor_fraction) {
            problems.push(alloc::format!(
                "floor_fraction must lie in [0, 1], got {}",
                self.floor_fraction
            ));
        }
        for (i, c) in self.components.iter().enumerate() {
            if !(c.width > 0.0) || !c.width.is_finite() {
                problems.push(alloc::format!("component {i}: width must be positive"));
            }
            if !(c.weight > 0.0) || !c.weight.is_finite() {
                problems.push(alloc::format!("component {i}: weight must be positive"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidDensity(problems.join("; ")))
        }
    }

    /// True when the spec breaks the positive-floor hypothesis; such targets
    /// exist to exhibit unbounded scores and are not covered by the bounds.
    pub fn violates_floor(&self) -> bool {
        self.family != Family::Uniform && self.floor_fraction <= 0.0
    }
}

/// Compactly supported C1 raised-cosine bump, 1 at the center, 0 beyond `width`.
pub fn raised_cosine(x: Point, center: Point, width: f64, dim: usize) -> f64 {
    let r2: f64 = (0..dim).map(|a| (x[a] - center[a]).powi(2)).sum();
    let r = r2.sqrt();
    if r >= width {
        0.0
    } else {
        0.5 * (1.0 + (PI * r / width).cos())
    }
}

/// Realizes a spec on the grid as a unit-mass density with
/// `floor >= floor_fraction`.
pub fn realize_density(spec: &DensitySpec, grid: &Grid) -> Result<DensityField> {
    spec.validate()?;
    let dim = grid.dim();
    if spec.family == Family::Uniform || spec.components.is_empty() {
        return Ok(uniform_density(grid));
    }
    let shape = match spec.family {
        Family::BumpMixture => CellField::from_fn(*grid, |x| {
            spec.components
                .iter()
                .map(|c| c.weight * raised_cosine(x, c.center, c.width, dim))
                .sum()
        }),
        Family::Tilted => CellField::from_fn(*grid, |x| {
            let e: f64 = spec
                .components
                .iter()
                .map(|c| c.weight * raised_cosine(x, c.center, c.width, dim))
                .sum();
            e.exp()
        }),
        Family::Uniform => unreachable!(),
    };
    let mass = shape.integral();
    if !(mass > 0.0) || !mass.is_finite() || shape.max() * grid.cell_volume() > 1e300 {
        return Err(Error::InvalidDensity(
            "bumps too narrow to be resolved on this grid".into(),
        ));
    }
    let bg = spec.floor_fraction;
    let mixed = shape.map(|v| bg + (1.0 - bg) * v / mass);
    DensityField::normalized(mixed)
}

/// Largest absolute face gradient over all axes.
pub fn grad_sup_norm(rho: &DensityField) -> f64 {
    grid::gradient(rho.field()).sup_norm()
}

/// Logarithmic mean of two positive values, the face interpolation under
/// which `gradient(f) / mean` equals the difference of `ln f`.
pub fn log_mean(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    let r = b / a;
    if (r - 1.0).abs() < 1e-6 {
        // series of (r-1)/ln r about r = 1
        let d = r - 1.0;
        a * (1.0 + d / 2.0 - d * d / 12.0 + d * d * d / 24.0)
    } else {
        (b - a) / r.ln()
    }
}

/// Face field `gradient(f) / log_mean(f)`, i.e. the face difference quotient
/// of `ln f`. Requires a strictly positive field.
pub fn log_gradient(f: &CellField) -> Result<FaceField> {
    let g = *f.grid();
    let v = f.values();
    if let Some((k, x)) = v.iter().enumerate().find(|(_, x)| !(**x > 0.0)) {
        return Err(Error::InvalidDensity(alloc::format!(
            "log-gradient needs a positive field; cell {k} is {x}"
        )));
    }
    let mut out = FaceField::zeros(g);
    for a in 0..g.dim() {
        let h = g.cell_width(a);
        for (fi, o) in out.axis_mut(a).iter_mut().enumerate() {
            let (l, r) = g.face_cells(a, fi);
            *o = (v[r] / v[l]).ln() / h;
        }
    }
    Ok(out)
}

/// Face interpolation of a cell field by the logarithmic mean.
pub fn log_mean_faces(f: &CellField) -> FaceField {
    let g = *f.grid();
    let v = f.values();
    let mut out = FaceField::zeros(g);
    for a in 0..g.dim() {
        for (fi, o) in out.axis_mut(a).iter_mut().enumerate() {
            let (l, r) = g.face_cells(a, fi);
            *o = log_mean(v[l], v[r]);
        }
    }
    out
}

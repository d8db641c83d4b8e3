//! File formats. Every file is written once, to a temporary sibling that
//! is then renamed into place. Floats are written in shortest round-trip
//! form, so reading a CSV back yields the exact values that were written.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use scorelab_core::density::DensityField;
use scorelab_core::fpe::Trajectory;
use scorelab_core::grid::{CellField, Grid};
use scorelab_core::neural::WeightSchedule;
use scorelab_core::particles::ParticleEnsemble;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{LabError, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LabError + '_ {
    move |source| LabError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(io_err(path))
}

/// Writes `bytes` to `path` via a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn csv_bytes<T: Serialize>(path: &Path, rows: &[T], header: Option<&[&str]>) -> Result<Vec<u8>> {
    let csv_err = |source| LabError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(header.is_none())
        .from_writer(Vec::new());
    if let Some(h) = header {
        w.write_record(h).map_err(csv_err)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| LabError::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })
}

/// Serializes typed rows with a header taken from the field names.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let bytes = csv_bytes(path, rows, None)?;
    write_atomic(path, &bytes)
}

fn write_csv_with_header<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let bytes = csv_bytes(path, rows, Some(header))?;
    write_atomic(path, &bytes)
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let csv_err = |source| LabError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<std::result::Result<Vec<T>, _>>().map_err(csv_err)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| LabError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| LabError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// `x[,y],value` at cell centers.
pub fn write_cell_field(path: &Path, f: &CellField) -> Result<()> {
    let g = f.grid();
    let rows: Vec<Vec<f64>> = g
        .cell_centers()
        .iter()
        .zip(f.values())
        .map(|(x, v)| {
            let mut r = x[..g.dim()].to_vec();
            r.push(*v);
            r
        })
        .collect();
    let header: &[&str] = if g.dim() == 1 {
        &["x", "value"]
    } else {
        &["x", "y", "value"]
    };
    write_csv_with_header(path, header, &rows)
}

/// Reads a cell field back onto `grid`; coordinates must match the centers.
pub fn read_cell_field(path: &Path, grid: &Grid) -> Result<CellField> {
    let rows: Vec<Vec<f64>> = read_csv(path)?;
    let d = grid.dim();
    let centers = grid.cell_centers();
    if rows.len() != centers.len() {
        return Err(LabError::Check(format!(
            "{}: {} rows for {} cells",
            path.display(),
            rows.len(),
            centers.len()
        )));
    }
    let mut values = Vec::with_capacity(rows.len());
    for (k, (r, c)) in rows.iter().zip(&centers).enumerate() {
        if r.len() != d + 1 || (0..d).any(|a| (r[a] - c[a]).abs() > 1e-12) {
            return Err(LabError::Check(format!(
                "{}: row {k} does not match cell center {:?}",
                path.display(),
                &c[..d]
            )));
        }
        values.push(r[d]);
    }
    CellField::new(*grid, values).map_err(|e| LabError::Check(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SnapshotMeta {
    pub index: usize,
    pub t: f64,
    pub mass: f64,
    pub floor: f64,
    pub l2_norm: f64,
    pub file: String,
}

/// A directory with `meta.csv` and one cell-field CSV per kept snapshot:
/// every `stride`-th stored density, the final one always included.
pub fn write_trajectory(dir: &Path, traj: &Trajectory, stride: usize) -> Result<()> {
    create_dir(dir)?;
    let stride = stride.max(1);
    let last = traj.len() - 1;
    let mut meta = Vec::new();
    for (k, (t, rho)) in traj.times.iter().zip(&traj.densities).enumerate() {
        if k % stride != 0 && k != last {
            continue;
        }
        let file = format!("snapshot_{k:06}.csv");
        write_cell_field(&dir.join(&file), rho.field())?;
        meta.push(SnapshotMeta {
            index: k,
            t: *t,
            mass: rho.mass(),
            floor: rho.floor(),
            l2_norm: rho.field().l2_norm(),
            file,
        });
    }
    write_csv(&dir.join("meta.csv"), &meta)
}

pub fn read_trajectory_meta(dir: &Path) -> Result<Vec<SnapshotMeta>> {
    read_csv(&dir.join("meta.csv"))
}

pub fn read_density(path: &Path, grid: &Grid) -> Result<DensityField> {
    let f = read_cell_field(path, grid)?;
    DensityField::new(f).map_err(|e| LabError::Check(format!("{}: {e}", path.display())))
}

// `{}` on f64 prints the shortest representation that parses back exactly.
fn join(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

#[derive(serde::Serialize)]
struct ScheduleRow {
    t_start: f64,
    t_end: f64,
    #[serde(rename = "A_flat")]
    a_flat: String,
    #[serde(rename = "W_flat")]
    w_flat: String,
    #[serde(rename = "B")]
    b: String,
}

/// One row per piece: `t_start,t_end,A_flat,W_flat,B`, matrices row-major
/// with space-separated entries, truncated to the schedule dimension.
pub fn write_schedule(path: &Path, s: &WeightSchedule) -> Result<()> {
    let d = s.dim;
    let rows: Vec<ScheduleRow> = s
        .layers
        .iter()
        .enumerate()
        .map(|(k, term)| {
            let flat = |m: &[[f64; 2]; 2]| join((0..d).flat_map(|i| (0..d).map(move |j| m[i][j])));
            ScheduleRow {
                t_start: s.breakpoints[k],
                t_end: s.breakpoints[k + 1],
                a_flat: flat(&term.a),
                w_flat: flat(&term.w),
                b: join(term.b[..d].iter().copied()),
            }
        })
        .collect();
    write_csv(path, &rows)
}

#[derive(serde::Serialize)]
struct Particle1 {
    particle_id: usize,
    x: f64,
}

#[derive(serde::Serialize)]
struct Particle2 {
    particle_id: usize,
    x: f64,
    y: f64,
}

/// `particle_id,x[,y]`.
pub fn write_ensemble(path: &Path, ens: &ParticleEnsemble) -> Result<()> {
    if ens.dim == 1 {
        let rows: Vec<_> = ens
            .positions()
            .enumerate()
            .map(|(particle_id, p)| Particle1 { particle_id, x: p[0] })
            .collect();
        write_csv(path, &rows)
    } else {
        let rows: Vec<_> = ens
            .positions()
            .enumerate()
            .map(|(particle_id, p)| Particle2 {
                particle_id,
                x: p[0],
                y: p[1],
            })
            .collect();
        write_csv(path, &rows)
    }
}

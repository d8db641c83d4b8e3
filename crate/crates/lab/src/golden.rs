//! Regression manifest: frozen scale constants of the discretization
//! budgets and SHA-256 digests of the CSVs produced by the quick configs.
//!
//! The scales are fitted once on a coarse grid and frozen here, so a budget
//! checked at the fine resolution is a genuine prediction. Regenerate with
//! `SCORELAB_BLESS=1 cargo test -p scorelab --test golden`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use scorelab_core::density::uniform_density;
use scorelab_core::fpe::SolverConfig;
use scorelab_core::grid::Grid;
use scorelab_core::score::round_trip;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::DensityConfig;
use crate::error::{Context, LabError, Result};
use crate::experiments::{moser_exact, realize};

pub const MANIFEST_JSON: &str = include_str!("../golden/manifest.json");
pub const BLESS_VAR: &str = "SCORELAB_BLESS";

pub const CALIBRATION_CELLS: usize = 32;
pub const CALIBRATION_DT: f64 = 4e-3;
pub const ROUND_TRIP_HORIZON: f64 = 0.5;

/// Data density of the round-trip budget.
pub fn round_trip_density() -> DensityConfig {
    DensityConfig::bump(&[0.3], 0.3, 0.1)
}

/// Target of the Moser budget; the source is uniform.
pub fn moser_target() -> DensityConfig {
    DensityConfig::bump(&[0.35], 0.3, 0.2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub cells: usize,
    pub dt: f64,
    /// measured defect at the calibration resolution
    pub defect: f64,
    /// `defect / (dx^2 + dt)`
    pub scale: f64,
}

impl Calibration {
    fn from_defect(cells: usize, dt: f64, defect: f64) -> Self {
        let dx = 1.0 / cells as f64;
        Self {
            cells,
            dt,
            defect,
            scale: defect / (dx * dx + dt),
        }
    }

    /// `factor * (dx^2 + dt) * scale` at another resolution.
    pub fn budget(&self, factor: f64, dx: f64, dt: f64) -> f64 {
        factor * (dx * dx + dt) * self.scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub round_trip: Calibration,
    pub moser: Calibration,
    /// quick config name -> relative CSV path -> SHA-256 hex digest
    pub outputs: BTreeMap<String, BTreeMap<String, String>>,
}

pub fn manifest() -> &'static Manifest {
    static M: OnceLock<Manifest> = OnceLock::new();
    M.get_or_init(|| serde_json::from_str(MANIFEST_JSON).expect("golden manifest parses"))
}

/// Sup-in-time round-trip defect at `(cells, dt)`.
pub fn round_trip_defect(cells: usize, dt: f64) -> Result<f64> {
    let grid = Grid::line(cells).context(|| "round-trip grid".into())?;
    let rho_d = realize(&round_trip_density(), &grid, "round-trip density")?;
    let rt = round_trip(&rho_d, ROUND_TRIP_HORIZON, &SolverConfig::with_dt(dt))
        .context(|| format!("round trip at {cells} cells, dt {dt}"))?;
    Ok(rt.sup_defect)
}

/// Larger of the unit-time transfer defect and the pathwise defect.
pub fn moser_defect(cells: usize, dt: f64) -> Result<(f64, f64)> {
    let grid = Grid::line(cells).context(|| "Moser grid".into())?;
    let rhod = realize(&moser_target(), &grid, "Moser target")?;
    let t = moser_exact::transfer(0, &uniform_density(&grid), &rhod, &SolverConfig::with_dt(dt))?;
    Ok((t.summary.transfer_defect, t.summary.path_defect))
}

pub fn calibrate_round_trip() -> Result<Calibration> {
    let d = round_trip_defect(CALIBRATION_CELLS, CALIBRATION_DT)?;
    Ok(Calibration::from_defect(CALIBRATION_CELLS, CALIBRATION_DT, d))
}

pub fn calibrate_moser() -> Result<Calibration> {
    let (a, b) = moser_defect(CALIBRATION_CELLS, CALIBRATION_DT)?;
    Ok(Calibration::from_defect(CALIBRATION_CELLS, CALIBRATION_DT, a.max(b)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of every CSV below `dir`, keyed by `/`-separated relative path.
pub fn csv_digests(dir: &Path) -> Result<BTreeMap<String, String>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> Result<()> {
        let io_err = |source| LabError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut entries = std::fs::read_dir(dir)
            .map_err(io_err)?
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(io_err)?;
        entries.sort_by_key(|e| e.path());
        for e in entries {
            let p = e.path();
            if p.is_dir() {
                walk(root, &p, out)?;
            } else if p.extension().is_some_and(|x| x == "csv") {
                let bytes = std::fs::read(&p).map_err(|source| LabError::Io {
                    path: p.clone(),
                    source,
                })?;
                let rel = p.strip_prefix(root).expect("below root");
                let key = rel
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy())
                    .collect::<Vec<_>>()
                    .join("/");
                out.insert(key, hex(&Sha256::digest(&bytes)));
            }
        }
        Ok(())
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out)?;
    Ok(out)
}

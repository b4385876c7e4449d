//! Config loading, scan orchestration and output files for `simulate`.

mod config;

pub use config::{
    load_config, AxisConfig, CrystalConfig, DephasingConfig, GridConfig, HomConfig, LevelConfig, PairRate, PreparationConfig,
    PumpConfig, QuadratureConfig, ReferenceKind, Resolved, RunConfig, ScanConfig, SystemConfig,
};

use crate::pathways::{
    detection_combinations, enumerate_interaction_pathways, term_table, DetectionCombination, Filter,
};
use crate::signal::{scan, SignalError, SignalGrid};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("missing required field `{0}`")]
    Missing(String),
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Provenance written next to the data file as `<data>.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar {
    pub tool: &'static str,
    pub version: &'static str,
    pub data_file: PathBuf,
    pub data_sha256: String,
    pub system_sha256: String,
    pub amplitude_sha256: String,
    pub config_sha256: String,
    pub points: usize,
    pub workers: usize,
    pub wall_time_s: f64,
    /// The fully resolved config.
    pub config: toml::Value,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub grid: SignalGrid,
    pub data_path: PathBuf,
    pub sidecar_path: PathBuf,
    pub sidecar: Sidecar,
}

pub fn sidecar_path(data: &Path) -> PathBuf {
    let mut s = data.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Computes the scan on `workers` threads without touching the filesystem.
pub fn compute(config: &RunConfig, workers: usize) -> Result<SignalGrid, RunError> {
    let r = config.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    log::info!("scanning {} points in mode {} on {workers} workers", r.axes.len(), r.mode);
    Ok(pool.install(|| scan(&r.axes, r.mode, &r.amplitude, &r.ops, &r.quadrature, &r.hom))?)
}

/// Runs the scan and writes the data file and its sidecar.
pub fn run(config: &RunConfig, workers: usize) -> Result<RunOutput, RunError> {
    let start = Instant::now();
    let grid = compute(config, workers)?;
    let text = grid.to_text();
    let data_path = config.output.clone();
    let write = |path: &Path, bytes: &[u8]| {
        std::fs::write(path, bytes).map_err(|source| RunError::Io {
            path: path.to_path_buf(),
            source,
        })
    };
    write(&data_path, text.as_bytes())?;
    let echo = config.to_toml();
    let sidecar = Sidecar {
        tool: "simulate",
        version: env!("CARGO_PKG_VERSION"),
        data_file: data_path.clone(),
        data_sha256: hex::encode(Sha256::digest(text.as_bytes())),
        system_sha256: grid.system_hash.clone(),
        amplitude_sha256: grid.amplitude_hash.clone(),
        config_sha256: hex::encode(Sha256::digest(echo.as_bytes())),
        points: grid.values.len(),
        workers: workers.max(1),
        wall_time_s: start.elapsed().as_secs_f64(),
        config: toml::from_str(&echo).expect("echo parses"),
    };
    let sidecar_path = sidecar_path(&data_path);
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    write(&sidecar_path, json.as_bytes())?;
    log::info!("wrote {} in {:.3} s", data_path.display(), sidecar.wall_time_s);
    Ok(RunOutput {
        grid,
        data_path,
        sidecar_path,
        sidecar,
    })
}

fn describe(c: &DetectionCombination) -> String {
    match c.nu() {
        Some(nu) => format!("{c:?} -> O_{nu}"),
        None => format!("{c:?} -> no coincidence"),
    }
}

/// Text report of the pathway enumeration and the resulting term table.
pub fn pathways_report() -> String {
    let mut out = String::new();
    let raw = enumerate_interaction_pathways(&[]);
    let kept = enumerate_interaction_pathways(&Filter::ALL);
    let _ = writeln!(out, "interaction candidates: {}", raw.len());
    let mut stage = Vec::new();
    for f in Filter::ALL {
        stage.push(f);
        let _ = writeln!(out, "  after {f:?}: {}", enumerate_interaction_pathways(&stage).len());
    }
    let _ = writeln!(out, "surviving pathways: {}", kept.len());
    for p in &kept {
        let _ = writeln!(out, "  {p}");
    }
    let combos = detection_combinations();
    let coincident: Vec<_> = combos.iter().filter(|c| c.is_coincidence()).collect();
    let _ = writeln!(out, "detection combinations: {} ({} coincident)", combos.len(), coincident.len());
    for c in coincident {
        let _ = writeln!(out, "  {}", describe(c));
    }
    let _ = writeln!(out, "signal terms:");
    for t in term_table() {
        let _ = writeln!(out, "  {t}");
    }
    out
}

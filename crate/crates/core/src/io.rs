//! Experiment configuration files, report writers and run manifests.
//!
//! A configuration is TOML (or JSON when the file ends in `.json`):
//!
//! ```toml
//! reference = "analytic"   # or a fixed β such as 0.111
//! e = 0.05
//! c = 0.99
//! seed = 20240601
//! pilot_n = 50             # optional
//! max_n = 1000000          # optional
//!
//! [[grid]]
//! a = 10
//! b = 50
//! q = 100
//! D = 1.0
//!
//! [[grid]]
//! model = "models/nam.spi" # relative to the configuration file
//! D = 2.0
//!
//! [[engines]]
//! rng = "mersenne_twister"  # or "baseline_lcg"
//! detector = "event_triggered"  # or "time_stepped"
//! stepsize = { fixed = 0.1 }
//!
//! [[engines]]
//! rng = "mersenne_twister"
//! detector = "time_stepped"
//! stepsize = { adaptive = { max = 0.1, min = 0.01, safety_fraction = 0.1 } }
//! ```
//!
//! A grid entry may carry `pmf = { kind = "debye_huckel", charge_product = -20, kappa = 0.1 }`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiment::{
    ConfigurationVerdict, ExperimentOutcome, ExperimentReport, ExperimentSpec, GridCell, Reference,
    DEFAULT_MAX_N, DEFAULT_PILOT_N,
};
use crate::dynamics::DEFAULT_STEP_CAP;
use crate::geometry::{make_geometry, GeometryError, SimulatorConfig};
use crate::rates::PotentialOfMeanForce;
use crate::spacepi::{lower_to_nam, parse_model, LowerError, ParseError};

pub const THREADS_ENV: &str = "NAMBD_THREADS";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}:{source}")]
    Model { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Lower { path: PathBuf, source: LowerError },
    #[error("{path}: grid entry {index}: {message}")]
    Grid { path: PathBuf, index: usize, message: String },
    #[error("{path}: grid entry {index}: {source}")]
    Geometry { path: PathBuf, index: usize, source: GeometryError },
    #[error("{THREADS_ENV} must be a non-negative integer, got {0:?}")]
    Threads(String),
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read { path: path.to_path_buf(), source })
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Deserializes TOML, or JSON for `.json` files.
fn decode<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, IoError> {
    let result = if is_json(path) {
        serde_json::from_str(text).map_err(|e| e.to_string())
    } else {
        toml::from_str(text).map_err(|e| e.to_string())
    };
    result.map_err(|message| IoError::Format { path: path.to_path_buf(), message })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGridEntry {
    a: Option<f64>,
    b: Option<f64>,
    q: Option<f64>,
    #[serde(rename = "D")]
    diffusion: f64,
    particle_radius: Option<f64>,
    model: Option<String>,
    pmf: Option<PotentialOfMeanForce>,
}

fn default_reference() -> Reference {
    Reference::Analytic
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default = "default_reference")]
    reference: Reference,
    e: f64,
    c: f64,
    seed: u64,
    pilot_n: Option<u64>,
    max_n: Option<u64>,
    step_cap: Option<u64>,
    grid: Vec<RawGridEntry>,
    engines: Vec<SimulatorConfig>,
}

fn grid_cell(path: &Path, index: usize, entry: RawGridEntry) -> Result<GridCell, IoError> {
    let grid_err = |message: &str| IoError::Grid { path: path.to_path_buf(), index, message: message.into() };
    match (&entry.model, entry.a, entry.b, entry.q) {
        (Some(model), None, None, None) => {
            if entry.pmf.is_some() || entry.particle_radius.is_some() {
                return Err(grid_err("`pmf` and `particle_radius` come from the model file"));
            }
            let model_path = path.parent().unwrap_or(Path::new(".")).join(model);
            let text = read(&model_path)?;
            let doc = parse_model(&text).map_err(|source| IoError::Model { path: model_path.clone(), source })?;
            let lowered = lower_to_nam(&doc, entry.diffusion)
                .map_err(|source| IoError::Lower { path: model_path.clone(), source })?;
            Ok(GridCell {
                geometry: lowered.geometry,
                potential: lowered.potential(),
                model: Some(model.clone()),
            })
        }
        (None, Some(a), Some(b), Some(q)) => {
            let geometry = make_geometry(a, b, q, entry.diffusion, entry.particle_radius.unwrap_or(0.0))
                .map_err(|source| IoError::Geometry { path: path.to_path_buf(), index, source })?;
            Ok(GridCell { geometry, potential: entry.pmf.unwrap_or_default(), model: None })
        }
        _ => Err(grid_err("give either `model` or all of `a`, `b`, `q`")),
    }
}

/// Reads an experiment configuration. Model paths are resolved relative to
/// the configuration file.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec, IoError> {
    let raw: RawSpec = decode(path, &read(path)?)?;
    let grid = raw
        .grid
        .into_iter()
        .enumerate()
        .map(|(i, entry)| grid_cell(path, i, entry))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentSpec {
        reference: raw.reference,
        tolerance: raw.e,
        confidence: raw.c,
        grid,
        engines: raw.engines,
        master_seed: raw.seed,
        pilot_n: raw.pilot_n.unwrap_or(DEFAULT_PILOT_N),
        max_n: raw.max_n.unwrap_or(DEFAULT_MAX_N),
        step_cap: raw.step_cap.unwrap_or(DEFAULT_STEP_CAP),
    })
}

/// A potential file holds one potential table, e.g.
/// `kind = "debye_huckel"`, `charge_product = -20.0`, `kappa = 0.1`.
pub fn load_potential(path: &Path) -> Result<PotentialOfMeanForce, IoError> {
    decode(path, &read(path)?)
}

/// Worker count from `NAMBD_THREADS`; 0 (one per core) when unset.
pub fn threads_from_env() -> Result<usize, IoError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| IoError::Threads(v)),
        Err(_) => Ok(0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub engine: String,
    pub n: u64,
    pub beta_hat: Option<f64>,
    pub std_error: Option<f64>,
    pub valid: bool,
    pub wall_time_s: f64,
}

/// Everything needed to re-run an experiment, plus timing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub master_seed: u64,
    pub spec: ExperimentSpec,
    pub threads: usize,
    pub started_unix_s: u64,
    pub wall_time_s: f64,
    pub cells: Vec<CellSummary>,
}

impl RunManifest {
    pub fn new(
        spec: &ExperimentSpec,
        verdicts: &[ConfigurationVerdict],
        threads: usize,
        started: SystemTime,
        wall_time: Duration,
    ) -> Self {
        RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: spec.master_seed,
            spec: spec.clone(),
            threads,
            started_unix_s: started.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            wall_time_s: wall_time.as_secs_f64(),
            cells: verdicts
                .iter()
                .map(|v| CellSummary {
                    cell: v.cell,
                    engine: v.engine.label(),
                    n: v.estimate.as_ref().map_or(0, |e| e.n),
                    beta_hat: v.estimate.as_ref().map(|e| e.beta_hat),
                    std_error: v.estimate.as_ref().map(|e| e.std_error),
                    valid: v.valid,
                    wall_time_s: v.wall_time.as_secs_f64(),
                })
                .collect(),
        }
    }
}

pub fn load_manifest(path: &Path) -> Result<RunManifest, IoError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| IoError::Format { path: path.to_path_buf(), message: e.to_string() })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, IoError> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|source| IoError::Write { path: path.to_path_buf(), source })
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> IoError + '_ {
    move |source| IoError::Write { path: path.to_path_buf(), source }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn report_csv(report: &ExperimentReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &report.rows {
        w.serialize(row).expect("report rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}

fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(write_err(path))
}

/// One JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), IoError> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| IoError::Write { path: path.to_path_buf(), source: e.into() })?;
        w.write_all(b"\n").map_err(write_err(path))?;
    }
    w.flush().map_err(write_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Files written by [`write_outputs`].
#[derive(Debug, Clone, Default)]
pub struct WrittenFiles {
    pub paths: Vec<PathBuf>,
}

/// Writes `report.csv`/`report.json` (per `formats`), `replications.jsonl`,
/// `traces.jsonl` when traces were collected, and `manifest.json`.
pub fn write_outputs(
    dir: &Path,
    report: &ExperimentReport,
    outcome: &ExperimentOutcome,
    manifest: &RunManifest,
    formats: &[ReportFormat],
) -> Result<WrittenFiles, IoError> {
    fs::create_dir_all(dir).map_err(write_err(dir))?;
    let mut written = WrittenFiles::default();
    for f in formats {
        let (name, text) = match f {
            ReportFormat::Csv => ("report.csv", report_csv(report)),
            ReportFormat::Json => ("report.json", to_json(report)),
        };
        let path = dir.join(name);
        write_text(&path, &text)?;
        written.paths.push(path);
    }
    let path = dir.join("replications.jsonl");
    write_jsonl(&path, &outcome.replications)?;
    written.paths.push(path);
    if !outcome.traces.is_empty() {
        let path = dir.join("traces.jsonl");
        write_jsonl(&path, &outcome.traces)?;
        written.paths.push(path);
    }
    let path = dir.join("manifest.json");
    write_text(&path, &to_json(manifest))?;
    written.paths.push(path);
    Ok(written)
}

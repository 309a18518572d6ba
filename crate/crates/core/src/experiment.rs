//! Validation experiments: specify, configure, execute, observe, analyse
//! and evaluate a grid of geometries against a matrix of simulator
//! configurations.
//!
//! Every cell of the grid × engine product runs a pilot, sizes itself with
//! [`required_replications`], extends to that size and compares the
//! estimate with the reference. Replication `i` of cell `k` always uses the
//! stream derived from `(master_seed ^ mix64(k), i)`, so results do not
//! depend on scheduling or thread count.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{DynamicsError, TraceRecord, TrajectoryEngine, DEFAULT_STEP_CAP};
use crate::geometry::{EndState, NamGeometry, SimulatorConfig};
use crate::rates::{
    analytic_beta, beta_with_potential, estimate_beta, required_replications, two_sided_z, BetaEstimate,
    PotentialOfMeanForce, RatesError, DEFAULT_QUAD_TOL,
};
use crate::stochastics::{derive_replication_stream, mix64};

pub const DEFAULT_PILOT_N: u64 = 50;
pub const DEFAULT_MAX_N: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("experiment produced no verdicts")]
    EmptyExperiment,
    #[error("reference for cell {cell}: {source}")]
    Reference { cell: usize, source: RatesError },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// What the estimate is compared with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// Exact β of each geometry (and potential).
    Analytic,
    Fixed(f64),
}

impl Serialize for Reference {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Reference::Analytic => s.serialize_str("analytic"),
            Reference::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Reference {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Reference::Fixed(v)),
            Raw::Word(w) if w == "analytic" => Ok(Reference::Analytic),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "reference must be \"analytic\" or a number, got {w:?}"
            ))),
        }
    }
}

/// One geometry of the model grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridCell {
    pub geometry: NamGeometry,
    #[serde(default, skip_serializing_if = "PotentialOfMeanForce::is_zero")]
    pub potential: PotentialOfMeanForce,
    /// Model file the geometry was lowered from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

impl From<NamGeometry> for GridCell {
    fn from(geometry: NamGeometry) -> Self {
        GridCell { geometry, potential: PotentialOfMeanForce::Zero, model: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub reference: Reference,
    /// Tolerance `e` on |β̂ − β_ref|.
    pub tolerance: f64,
    /// Confidence level `c` used to size each cell.
    pub confidence: f64,
    pub grid: Vec<GridCell>,
    pub engines: Vec<SimulatorConfig>,
    pub master_seed: u64,
    pub pilot_n: u64,
    pub max_n: u64,
    /// Per-trajectory step limit; exceeding it fails the cell.
    #[serde(default = "default_step_cap")]
    pub step_cap: u64,
}

fn default_step_cap() -> u64 {
    DEFAULT_STEP_CAP
}

impl ExperimentSpec {
    /// Defaults for pilot and cap; analytic reference.
    pub fn new(
        grid: Vec<GridCell>,
        engines: Vec<SimulatorConfig>,
        tolerance: f64,
        confidence: f64,
        master_seed: u64,
    ) -> Self {
        ExperimentSpec {
            reference: Reference::Analytic,
            tolerance,
            confidence,
            grid,
            engines,
            master_seed,
            pilot_n: DEFAULT_PILOT_N,
            max_n: DEFAULT_MAX_N,
            step_cap: DEFAULT_STEP_CAP,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidSpec(m));
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return bad(format!("tolerance e must lie in (0, 1), got {}", self.tolerance));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad(format!("confidence c must lie in (0, 1), got {}", self.confidence));
        }
        if self.grid.is_empty() {
            return bad("model grid is empty".into());
        }
        if self.engines.is_empty() {
            return bad("engine matrix is empty".into());
        }
        if self.pilot_n < 2 {
            return bad(format!("pilot_n must be at least 2, got {}", self.pilot_n));
        }
        if self.max_n < self.pilot_n {
            return bad(format!("max_n ({}) is below pilot_n ({})", self.max_n, self.pilot_n));
        }
        if let Reference::Fixed(v) = self.reference {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("fixed reference must be a probability, got {v}"));
            }
        }
        for (i, e) in self.engines.iter().enumerate() {
            e.validate().map_err(|err| ExperimentError::InvalidSpec(format!("engine {i}: {err}")))?;
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.grid.len() * self.engines.len()
    }

    /// Grid-major: cell `g * engines + e`.
    pub fn cell(&self, index: usize) -> (&GridCell, &SimulatorConfig) {
        let ne = self.engines.len();
        (&self.grid[index / ne], &self.engines[index % ne])
    }

    pub fn reference_for(&self, cell: &GridCell) -> Result<f64, RatesError> {
        let g = &cell.geometry;
        match self.reference {
            Reference::Fixed(v) => Ok(v),
            Reference::Analytic if cell.potential.is_zero() => {
                analytic_beta(g.reaction_radius(), g.start_radius(), g.escape_radius())
            }
            Reference::Analytic => beta_with_potential(
                g.reaction_radius(),
                g.start_radius(),
                g.escape_radius(),
                &cell.potential,
                DEFAULT_QUAD_TOL,
            ),
        }
    }
}

/// Seed of the replication streams of one cell.
pub fn cell_seed(master_seed: u64, cell: usize) -> u64 {
    master_seed ^ mix64(cell as u64)
}

/// Planning value of β for sizing from a pilot with `reacted` of `n`
/// reactions: the end of the Wilson score interval at confidence `c`
/// closest to 1/2, where the binomial variance is largest.
pub fn planning_beta(reacted: u64, n: u64, confidence: f64) -> f64 {
    if n == 0 {
        return 0.5;
    }
    let n = n as f64;
    let p = reacted as f64 / n;
    let z = two_sided_z(confidence);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let (lo, hi) = (centre - half, centre + half);
    if hi < 0.5 {
        hi
    } else if lo > 0.5 {
        lo
    } else {
        0.5
    }
}

/// `|β̂ − β_ref| ≤ e`, inclusive up to rounding of the difference.
pub fn evaluate(estimate: &BetaEstimate, beta_ref: f64, e: f64) -> bool {
    (estimate.beta_hat - beta_ref).abs() - e <= 8.0 * f64::EPSILON
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigurationVerdict {
    pub cell: usize,
    pub geometry: NamGeometry,
    pub engine: SimulatorConfig,
    pub beta_ref: f64,
    /// `None` when a replication failed.
    pub estimate: Option<BetaEstimate>,
    pub n_required: u64,
    pub valid: bool,
    /// The replication count was cut to `max_n`.
    pub capped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Observation of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub cell: usize,
    pub replication: u64,
    pub end_state: EndState,
    pub steps: u64,
    pub model_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub cell: usize,
    pub replication: u64,
    #[serde(flatten)]
    pub record: TraceRecord,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Keep a [`ReplicationRecord`] for every trajectory.
    pub record_replications: bool,
    /// Trace this many leading replications of every cell.
    pub trace_replications: u64,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutcome {
    /// In cell order.
    pub verdicts: Vec<ConfigurationVerdict>,
    /// In (cell, replication) order; empty unless requested.
    pub replications: Vec<ReplicationRecord>,
    pub traces: Vec<TracePoint>,
}

struct CellRun {
    verdict: ConfigurationVerdict,
    records: Vec<ReplicationRecord>,
    traces: Vec<TracePoint>,
}

type Replication = (u64, Result<crate::geometry::TrajectoryResult, DynamicsError>, Vec<TraceRecord>);

fn run_replications(
    engine: &TrajectoryEngine,
    seed: u64,
    range: std::ops::Range<u64>,
    trace_below: u64,
) -> Vec<Replication> {
    let kind = engine.config().rng;
    range
        .into_par_iter()
        .map(|i| {
            let mut stream = derive_replication_stream(seed, i, kind);
            let mut trace = Vec::new();
            let result = if i < trace_below {
                let mut sink = |r: TraceRecord| trace.push(r);
                engine.run_traced(&mut stream, None, Some(&mut sink))
            } else {
                engine.run(&mut stream)
            };
            (i, result, trace)
        })
        .collect()
}

fn run_cell(spec: &ExperimentSpec, index: usize, beta_ref: f64, options: RunOptions) -> CellRun {
    let started = Instant::now();
    let (cell, config) = spec.cell(index);
    let mut verdict = ConfigurationVerdict {
        cell: index,
        geometry: cell.geometry,
        engine: *config,
        beta_ref,
        estimate: None,
        n_required: 0,
        valid: false,
        capped: false,
        error: None,
        wall_time: Duration::ZERO,
    };
    let mut records = Vec::new();
    let mut traces = Vec::new();
    let engine = match TrajectoryEngine::new(cell.geometry, *config) {
        Ok(e) => e.with_potential(cell.potential.clone()).with_step_cap(spec.step_cap),
        Err(err) => {
            verdict.error = Some(err.to_string());
            verdict.wall_time = started.elapsed();
            return CellRun { verdict, records, traces };
        }
    };
    let seed = cell_seed(spec.master_seed, index);
    let mut end_states = Vec::new();
    let mut absorb = |batch: Vec<Replication>, end_states: &mut Vec<EndState>| -> Result<(), String> {
        for (i, result, trace) in batch {
            let r = result.map_err(|e| format!("replication {i}: {e}"))?;
            end_states.push(r.end_state);
            if options.record_replications {
                records.push(ReplicationRecord {
                    cell: index,
                    replication: i,
                    end_state: r.end_state,
                    steps: r.steps,
                    model_time: r.model_time,
                });
            }
            traces.extend(trace.into_iter().map(|record| TracePoint { cell: index, replication: i, record }));
        }
        Ok(())
    };

    let pilot = run_replications(&engine, seed, 0..spec.pilot_n, options.trace_replications);
    let outcome = absorb(pilot, &mut end_states).and_then(|()| {
        let reacted = end_states.iter().filter(|s| **s == EndState::Reacted).count() as u64;
        let plan = planning_beta(reacted, spec.pilot_n, spec.confidence);
        verdict.n_required = required_replications(plan, spec.tolerance, spec.confidence);
        let target = verdict.n_required.max(spec.pilot_n);
        verdict.capped = target > spec.max_n;
        let total = target.min(spec.max_n);
        let rest = run_replications(&engine, seed, spec.pilot_n..total, options.trace_replications);
        absorb(rest, &mut end_states)
    });
    match outcome {
        Ok(()) => {
            let estimate = estimate_beta(&end_states).expect("pilot_n >= 2");
            verdict.valid = evaluate(&estimate, beta_ref, spec.tolerance);
            verdict.estimate = Some(estimate);
        }
        Err(msg) => verdict.error = Some(msg),
    }
    verdict.wall_time = started.elapsed();
    CellRun { verdict, records, traces }
}

/// Runs every cell on the current rayon pool.
pub fn run_experiment(spec: &ExperimentSpec, options: RunOptions) -> Result<ExperimentOutcome, ExperimentError> {
    spec.validate()?;
    let refs = spec
        .grid
        .iter()
        .enumerate()
        .map(|(g, cell)| {
            spec.reference_for(cell)
                .map_err(|source| ExperimentError::Reference { cell: g * spec.engines.len(), source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ne = spec.engines.len();
    let runs: Vec<CellRun> = (0..spec.cell_count())
        .into_par_iter()
        .map(|k| run_cell(spec, k, refs[k / ne], options))
        .collect();
    let mut outcome = ExperimentOutcome::default();
    for run in runs {
        outcome.verdicts.push(run.verdict);
        outcome.replications.extend(run.records);
        outcome.traces.extend(run.traces);
    }
    Ok(outcome)
}

/// Runs on a dedicated pool of `threads` workers (0 means one per core).
pub fn run_experiment_with_threads(
    spec: &ExperimentSpec,
    options: RunOptions,
    threads: usize,
) -> Result<ExperimentOutcome, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
    pool.install(|| run_experiment(spec, options))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub engine: String,
    pub cell: usize,
    pub a: f64,
    pub b: f64,
    pub q: f64,
    #[serde(rename = "D")]
    pub diffusion: f64,
    pub beta_ref: f64,
    pub beta_hat: Option<f64>,
    pub std_error: Option<f64>,
    pub ci_half_width: Option<f64>,
    pub n: u64,
    pub n_required: u64,
    pub valid: bool,
    pub capped: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    #[serde(rename = "D")]
    pub diffusion: f64,
    pub beta_hat: Option<f64>,
    pub ci_half_width: Option<f64>,
    pub beta_ref: f64,
}

/// β̂ against D for one engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub engine: String,
    pub points: Vec<SeriesPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub tolerance: f64,
    pub confidence: f64,
    pub all_valid: bool,
    /// Grouped by engine, grid order within each group.
    pub rows: Vec<ReportRow>,
    pub series: Vec<Series>,
}

/// Tabulates verdicts per engine and D.
pub fn summarize(
    verdicts: &[ConfigurationVerdict],
    tolerance: f64,
    confidence: f64,
) -> Result<ExperimentReport, ExperimentError> {
    if verdicts.is_empty() {
        return Err(ExperimentError::EmptyExperiment);
    }
    let mut engines: Vec<SimulatorConfig> = Vec::new();
    for v in verdicts {
        if !engines.contains(&v.engine) {
            engines.push(v.engine);
        }
    }
    let mut rows = Vec::with_capacity(verdicts.len());
    let mut series = Vec::with_capacity(engines.len());
    for engine in &engines {
        let label = engine.label();
        let mut points = Vec::new();
        for v in verdicts.iter().filter(|v| v.engine == *engine) {
            let g = &v.geometry;
            let est = v.estimate.as_ref();
            let half = est.map(|e| e.ci_half_width(confidence));
            rows.push(ReportRow {
                engine: label.clone(),
                cell: v.cell,
                a: g.reaction_radius(),
                b: g.start_radius(),
                q: g.escape_radius(),
                diffusion: g.diffusion(),
                beta_ref: v.beta_ref,
                beta_hat: est.map(|e| e.beta_hat),
                std_error: est.map(|e| e.std_error),
                ci_half_width: half,
                n: est.map_or(0, |e| e.n),
                n_required: v.n_required,
                valid: v.valid,
                capped: v.capped,
                error: v.error.clone(),
            });
            points.push(SeriesPoint {
                diffusion: g.diffusion(),
                beta_hat: est.map(|e| e.beta_hat),
                ci_half_width: half,
                beta_ref: v.beta_ref,
            });
        }
        series.push(Series { engine: label, points });
    }
    Ok(ExperimentReport {
        tolerance,
        confidence,
        all_valid: verdicts.iter().all(|v| v.valid),
        rows,
        series,
    })
}

//! Python bindings. The extension module is importable as `nambd`.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use nambd::dynamics::TrajectoryEngine;
use nambd::experiment::{run_experiment_with_threads, summarize, RunOptions};
use nambd::geometry::{DetectorKind, EndState, NamGeometry, RngKind, SimulatorConfig, StepsizePolicy, Vec3};
use nambd::io::{load_spec, to_json};
use nambd::rates::{self, PotentialOfMeanForce, DEFAULT_QUAD_TOL};
use nambd::spacepi::{self, ModelDocument};
use nambd::stochastics::derive_replication_stream;

create_exception!(nambd, ParseError, PyValueError, "Model text could not be parsed.");

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn enum_from_name<T: serde::de::DeserializeOwned>(what: &str, name: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown {what} {name:?}")))
}

#[pyclass(name = "Geometry", module = "nambd", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyGeometry(NamGeometry);

#[pymethods]
impl PyGeometry {
    #[new]
    #[pyo3(signature = (a, b, q, diffusion))]
    fn new(a: f64, b: f64, q: f64, diffusion: f64) -> PyResult<Self> {
        NamGeometry::new(a, b, q, diffusion).map(PyGeometry).map_err(value_err)
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.reaction_radius()
    }

    #[getter]
    fn b(&self) -> f64 {
        self.0.start_radius()
    }

    #[getter]
    fn q(&self) -> f64 {
        self.0.escape_radius()
    }

    #[getter]
    fn diffusion(&self) -> f64 {
        self.0.diffusion()
    }

    fn with_diffusion(&self, diffusion: f64) -> PyResult<Self> {
        self.0.with_diffusion(diffusion).map(PyGeometry).map_err(value_err)
    }

    /// Free-diffusion reaction probability from the start sphere.
    fn analytic_beta(&self) -> f64 {
        rates::analytic_beta(self.a(), self.b(), self.q()).expect("validated geometry")
    }

    fn __repr__(&self) -> String {
        format!("Geometry(a={}, b={}, q={}, diffusion={})", self.a(), self.b(), self.q(), self.diffusion())
    }
}

#[pyclass(name = "Potential", module = "nambd", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPotential(PotentialOfMeanForce);

#[pymethods]
impl PyPotential {
    #[staticmethod]
    fn zero() -> Self {
        PyPotential(PotentialOfMeanForce::Zero)
    }

    #[staticmethod]
    fn constant(value: f64) -> Self {
        PyPotential(PotentialOfMeanForce::Constant(value))
    }

    #[staticmethod]
    fn debye_huckel(charge_product: f64, kappa: f64) -> PyResult<Self> {
        if !(charge_product.is_finite() && kappa.is_finite() && kappa >= 0.0) {
            return Err(PyValueError::new_err("charge_product must be finite and kappa non-negative"));
        }
        Ok(PyPotential(PotentialOfMeanForce::DebyeHuckel { charge_product, kappa }))
    }

    /// E(r) in units of k_BT.
    fn energy(&self, r: f64) -> f64 {
        self.0.energy(r)
    }

    fn derivative(&self, r: f64) -> f64 {
        self.0.radial_derivative(r)
    }

    fn __repr__(&self) -> String {
        format!("Potential.{:?}", self.0)
    }
}

fn potential_or_zero(p: Option<&PyPotential>) -> PotentialOfMeanForce {
    p.map_or(PotentialOfMeanForce::Zero, |p| p.0.clone())
}

#[pyfunction]
fn smoluchowski_rate(diffusion: f64, b: f64) -> PyResult<f64> {
    rates::smoluchowski_rate(diffusion, b).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (diffusion, b, potential=None, quad_tol=DEFAULT_QUAD_TOL))]
fn rate_with_potential(diffusion: f64, b: f64, potential: Option<&PyPotential>, quad_tol: f64) -> PyResult<f64> {
    rates::rate_with_potential(diffusion, b, &potential_or_zero(potential), quad_tol).map_err(value_err)
}

#[pyfunction]
fn analytic_beta(a: f64, b: f64, q: f64) -> PyResult<f64> {
    rates::analytic_beta(a, b, q).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (a, b, q, potential=None, quad_tol=DEFAULT_QUAD_TOL))]
fn beta_with_potential(a: f64, b: f64, q: f64, potential: Option<&PyPotential>, quad_tol: f64) -> PyResult<f64> {
    rates::beta_with_potential(a, b, q, &potential_or_zero(potential), quad_tol).map_err(value_err)
}

#[pyfunction]
fn hitting_probability(a: f64, r0: f64, q: f64) -> PyResult<f64> {
    rates::hitting_probability(a, r0, q).map_err(value_err)
}

#[pyfunction]
fn beta_infinity(beta: f64, k_b: f64, k_q: f64) -> PyResult<f64> {
    rates::beta_infinity(beta, k_b, k_q).map_err(value_err)
}

#[pyfunction]
fn association_rate(k_b: f64, beta_inf: f64) -> PyResult<f64> {
    rates::association_rate(k_b, beta_inf).map_err(value_err)
}

#[pyfunction]
fn required_replications(beta: f64, e: f64, c: f64) -> u64 {
    rates::required_replications(beta, e, c)
}

#[pyclass(name = "TrajectoryResult", module = "nambd", frozen, get_all)]
struct PyTrajectoryResult {
    reacted: bool,
    steps: u64,
    model_time: f64,
    final_distance: f64,
}

#[pymethods]
impl PyTrajectoryResult {
    fn __repr__(&self) -> String {
        format!(
            "TrajectoryResult(reacted={}, steps={}, model_time={}, final_distance={})",
            if self.reacted { "True" } else { "False" },
            self.steps,
            self.model_time,
            self.final_distance
        )
    }
}

#[pyclass(name = "Engine", module = "nambd", frozen)]
struct PyEngine(TrajectoryEngine);

#[pymethods]
impl PyEngine {
    #[new]
    #[pyo3(signature = (geometry, rng="mersenne_twister", detector="event_triggered", dt=0.1, potential=None))]
    fn new(
        geometry: &PyGeometry,
        rng: &str,
        detector: &str,
        dt: f64,
        potential: Option<&PyPotential>,
    ) -> PyResult<Self> {
        let config = SimulatorConfig::new(
            enum_from_name::<RngKind>("rng", rng)?,
            enum_from_name::<DetectorKind>("detector", detector)?,
            StepsizePolicy::Fixed(dt),
        );
        let engine = TrajectoryEngine::new(geometry.0, config).map_err(value_err)?;
        Ok(PyEngine(engine.with_potential(potential_or_zero(potential))))
    }

    /// One trajectory; `replication` selects an independent stream under `seed`.
    #[pyo3(signature = (seed, replication=0, start=None))]
    fn run(&self, seed: u64, replication: u64, start: Option<(f64, f64, f64)>) -> PyResult<PyTrajectoryResult> {
        let mut stream = derive_replication_stream(seed, replication, self.0.config().rng);
        let r = match start {
            Some((x, y, z)) => self.0.run_from(&mut stream, Vec3::new(x, y, z)),
            None => self.0.run(&mut stream),
        }
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(PyTrajectoryResult {
            reacted: r.end_state == EndState::Reacted,
            steps: r.steps,
            model_time: r.model_time,
            final_distance: r.final_distance,
        })
    }

    /// Fraction of `n` trajectories that react, with its standard error.
    fn estimate_beta(&self, py: Python<'_>, n: u64, seed: u64) -> PyResult<(f64, f64)> {
        if n < 2 {
            return Err(PyValueError::new_err("n must be at least 2"));
        }
        let kind = self.0.config().rng;
        let ends = py
            .detach(|| {
                (0..n)
                    .map(|i| self.0.run(&mut derive_replication_stream(seed, i, kind)).map(|r| r.end_state))
                    .collect::<Result<Vec<_>, _>>()
            })
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        let est = rates::estimate_beta(&ends).map_err(value_err)?;
        Ok((est.beta_hat, est.std_error))
    }
}

#[pyclass(name = "Model", module = "nambd", frozen, eq)]
#[derive(PartialEq)]
struct PyModel(ModelDocument);

#[pymethods]
impl PyModel {
    fn format(&self) -> String {
        spacepi::format_model(&self.0)
    }

    /// Reduces the model to a reaction geometry and potential.
    fn lower(&self, diffusion: f64) -> PyResult<(PyGeometry, PyPotential)> {
        let lowered = spacepi::lower_to_nam(&self.0, diffusion).map_err(value_err)?;
        Ok((PyGeometry(lowered.geometry), PyPotential(lowered.potential())))
    }

    fn process_names(&self) -> Vec<String> {
        self.0.processes().iter().map(|p| p.name.clone()).collect()
    }
}

#[pyfunction]
fn parse_model(text: &str) -> PyResult<PyModel> {
    spacepi::parse_model(text).map(PyModel).map_err(|e| ParseError::new_err(e.to_string()))
}

/// Runs an experiment configuration file and returns the JSON report.
#[pyfunction]
#[pyo3(signature = (path, threads=0, seed=None))]
fn run_experiment(py: Python<'_>, path: PathBuf, threads: usize, seed: Option<u64>) -> PyResult<String> {
    let mut spec = load_spec(&path).map_err(value_err)?;
    if let Some(s) = seed {
        spec.master_seed = s;
    }
    py.detach(|| {
        let outcome = run_experiment_with_threads(&spec, RunOptions::default(), threads).map_err(value_err)?;
        let report = summarize(&outcome.verdicts, spec.tolerance, spec.confidence).map_err(value_err)?;
        Ok(to_json(&report))
    })
}

#[pymodule]
#[pyo3(name = "nambd")]
fn nambd_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ParseError", m.py().get_type::<ParseError>())?;
    m.add_class::<PyGeometry>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyEngine>()?;
    m.add_class::<PyTrajectoryResult>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(smoluchowski_rate, m)?)?;
    m.add_function(wrap_pyfunction!(rate_with_potential, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_beta, m)?)?;
    m.add_function(wrap_pyfunction!(beta_with_potential, m)?)?;
    m.add_function(wrap_pyfunction!(hitting_probability, m)?)?;
    m.add_function(wrap_pyfunction!(beta_infinity, m)?)?;
    m.add_function(wrap_pyfunction!(association_rate, m)?)?;
    m.add_function(wrap_pyfunction!(required_replications, m)?)?;
    m.add_function(wrap_pyfunction!(parse_model, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

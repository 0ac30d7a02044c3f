//! Python bindings: `import athena`.
//!
//! Signals cross the boundary as `dict[str, list[float]]` sampled on a uniform
//! grid starting at 0 with step `dt`.

use std::collections::{BTreeMap, HashMap};

use athena_core::fitness;
use athena_core::harness::{self, ExperimentConfig, Mode, ProblemSpec};
use athena_core::models;
use athena_core::search::{self, Outcome, RunResult, SearchConfig};
use athena_core::signals::{self, ControlPoints, InterpolationKind, Signal, TimeGrid};
use athena_core::stl::{self, Trace};
use athena_core::Error;
use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NotFound(_) | Error::MissingChannel(_) => PyKeyError::new_err(e.to_string()),
        Error::Divergence { .. } | Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn grid_for(len: usize, dt: f64) -> PyResult<TimeGrid> {
    if len < 2 {
        return Err(PyValueError::new_err("signals need at least two samples"));
    }
    TimeGrid::new((len - 1) as f64 * dt, dt).map_err(py_err)
}

fn trace_from(channels: HashMap<String, Vec<f64>>, dt: f64) -> PyResult<Trace> {
    let len = channels.values().next().map_or(0, Vec::len);
    let mut trace = Trace::new(grid_for(len, dt)?);
    let sorted: BTreeMap<_, _> = channels.into_iter().collect();
    for (name, values) in sorted {
        trace.insert(name, values).map_err(py_err)?;
    }
    Ok(trace)
}

/// A parsed temporal-logic formula.
#[pyclass(name = "Formula", frozen)]
struct PyFormula(stl::Formula);

#[pymethods]
impl PyFormula {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        stl::parse(text).map(Self).map_err(py_err)
    }

    /// Longest look-ahead in seconds.
    #[getter]
    fn horizon(&self) -> f64 {
        self.0.horizon()
    }

    #[getter]
    fn channels(&self) -> Vec<String> {
        self.0.channels()
    }

    fn robustness(&self, channels: HashMap<String, Vec<f64>>, dt: f64) -> PyResult<f64> {
        stl::robustness(&self.0, &trace_from(channels, dt)?).map_err(py_err)
    }

    fn satisfied(&self, channels: HashMap<String, Vec<f64>>, dt: f64) -> PyResult<bool> {
        stl::satisfied(&self.0, &trace_from(channels, dt)?).map_err(py_err)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Formula({:?})", self.0.to_string())
    }
}

/// Robustness of `formula` at time 0.
#[pyfunction]
fn robustness(formula: &str, channels: HashMap<String, Vec<f64>>, dt: f64) -> PyResult<f64> {
    PyFormula::new(formula)?.robustness(channels, dt)
}

/// Samples the interpolant through `(times, values)` on `0, dt, ..., end`.
#[pyfunction]
#[pyo3(signature = (times, values, kind, end, dt))]
fn interpolate(times: Vec<f64>, values: Vec<f64>, kind: &str, end: f64, dt: f64) -> PyResult<Vec<f64>> {
    let kind: InterpolationKind = kind.parse().map_err(py_err)?;
    let grid = TimeGrid::new(end, dt).map_err(py_err)?;
    let cp = ControlPoints::new(times, values).map_err(py_err)?;
    signals::interpolate(&cp, kind, &grid).map(Signal::into_values).map_err(py_err)
}

/// Simulates a built-in plant; returns every output and input channel.
#[pyfunction]
#[pyo3(signature = (plant, inputs, dt = models::DEFAULT_DT))]
fn simulate(plant: &str, inputs: HashMap<String, Vec<f64>>, dt: f64) -> PyResult<HashMap<String, Vec<f64>>> {
    let model = models::builtin(plant).map_err(py_err)?;
    let len = inputs.values().next().map_or(0, Vec::len);
    let grid = grid_for(len, dt)?;
    let signals = inputs
        .into_iter()
        .map(|(k, v)| Signal::new(grid, v).map(|s| (k, s)))
        .collect::<Result<BTreeMap<_, _>, _>>()
        .map_err(py_err)?;
    let sim = models::simulate(model.as_ref(), &signals, &grid).map_err(py_err)?;
    Ok(sim.trace.channels().map(|(k, v)| (k.to_owned(), v.to_vec())).collect())
}

#[pyfunction]
fn catalog_ids() -> Vec<&'static str> {
    fitness::CATALOG_IDS.to_vec()
}

/// Catalog entry as a dict of its text fields and scalars.
#[pyfunction]
fn catalog(py: Python<'_>, id: &str) -> PyResult<Py<PyAny>> {
    let e = fitness::catalog(id).map_err(py_err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("id", e.id)?;
    d.set_item("formula", e.formula_text)?;
    d.set_item("manual", e.manual_text)?;
    d.set_item("plant", e.plant)?;
    d.set_item("auto_scale", e.auto_scale)?;
    d.set_item("horizon", e.horizon)?;
    let ports: Vec<&str> = e.assumption.inputs.iter().map(|i| i.port.as_str()).collect();
    d.set_item("inputs", ports)?;
    Ok(d.into_any().unbind())
}

/// Result of one falsification run.
#[pyclass(name = "RunResult", frozen)]
struct PyRunResult(RunResult);

#[pymethods]
impl PyRunResult {
    #[getter]
    fn failure_found(&self) -> bool {
        self.0.failure_found()
    }

    #[getter]
    fn iterations_used(&self) -> usize {
        self.0.iterations_used
    }

    #[getter]
    fn best_robustness(&self) -> f64 {
        self.0.best_robustness
    }

    #[getter]
    fn best_combined(&self) -> f64 {
        self.0.best_combined
    }

    /// Control values of the failing candidate, or of the best one.
    #[getter]
    fn parameters(&self) -> Vec<f64> {
        match &self.0.outcome {
            Outcome::FailureFound(tc) => tc.parameters.0.clone(),
            Outcome::NoFailureFound => self.0.best_parameters.0.clone(),
        }
    }

    /// Input signals of the failing test case, if any.
    #[getter]
    fn inputs(&self) -> Option<BTreeMap<String, Vec<f64>>> {
        match &self.0.outcome {
            Outcome::FailureFound(tc) => Some(tc.inputs.clone()),
            Outcome::NoFailureFound => None,
        }
    }

    /// Combined fitness of every evaluated candidate.
    #[getter]
    fn combined_history(&self) -> Vec<f64> {
        self.0.history.iter().map(|h| h.combined).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "RunResult(failure_found={}, iterations_used={}, best_robustness={})",
            self.0.failure_found(),
            self.0.iterations_used,
            self.0.best_robustness
        )
    }
}

/// Falsifies a catalog requirement.
#[pyfunction]
#[pyo3(signature = (requirement, mode = "athena", seed = 0, max_iterations = 300, dt = models::DEFAULT_DT))]
fn falsify(
    py: Python<'_>,
    requirement: &str,
    mode: &str,
    seed: u64,
    max_iterations: usize,
    dt: f64,
) -> PyResult<PyRunResult> {
    let mode: Mode = mode.parse().map_err(py_err)?;
    let mut cfg = ExperimentConfig::new(ProblemSpec::Catalog(requirement.to_owned()), mode);
    cfg.dt = dt;
    cfg.repetitions = 1;
    cfg.search = SearchConfig { max_iterations, seed, ..SearchConfig::default() };
    let prepared = cfg.prepare().map_err(py_err)?;
    let result = py.detach(|| search::falsify(&prepared.as_problem(), &cfg.search)).map_err(py_err)?;
    Ok(PyRunResult(result))
}

/// Runs an experiment from its JSON configuration; returns the JSON report.
#[pyfunction]
#[pyo3(signature = (config_json, jobs = None))]
fn run_experiment(py: Python<'_>, config_json: &str, jobs: Option<usize>) -> PyResult<String> {
    let cfg: ExperimentConfig = serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let mut report = py.detach(|| harness::run_experiment(&cfg, jobs)).map_err(py_err)?;
    report.timing = None;
    report.to_json().map_err(py_err)
}

/// Two-sided rank-sum test: `(u, p_value, exact)`.
#[pyfunction]
fn rank_sum(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64, bool)> {
    let r = harness::rank_sum(&a, &b).map_err(py_err)?;
    Ok((r.u, r.p_value, r.exact))
}

#[pymodule]
pub fn athena(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFormula>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(robustness, m)?)?;
    m.add_function(wrap_pyfunction!(interpolate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(catalog_ids, m)?)?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(falsify, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(rank_sum, m)?)?;
    m.add("PLANTS", models::BUILTIN_PLANTS.to_vec())?;
    Ok(())
}

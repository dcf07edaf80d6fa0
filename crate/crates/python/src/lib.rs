//! Python bindings: build a monitor from JSON descriptions and feed it states.

use std::sync::{Arc, Mutex, MutexGuard};

use cbf_monitor::cone::{calibrate_bloat, DEFAULT_BLOAT_PROBES};
use cbf_monitor::harness::{run_experiment as run_experiment_rs, ExperimentConfig};
use cbf_monitor::relu_network::parse_network;
use cbf_monitor::verifier::QuantifierMode;
use cbf_monitor::{
    make_synthetic_cbf as make_rs, Monitor as MonitorRs, MonitorConfig, SyntheticKind,
    SyntheticParams, SystemSpec,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Verdict of one monitor step.
#[pyclass(get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct Verdict {
    value: bool,
    cause: Option<String>,
    witness: Option<Vec<f64>>,
    depth: Option<usize>,
    budget_overrun: bool,
}

#[pymethods]
impl Verdict {
    fn __bool__(&self) -> bool {
        self.value
    }

    fn __repr__(&self) -> String {
        match &self.cause {
            None => "Verdict(1)".to_string(),
            Some(c) => format!("Verdict(0, cause={c:?}, depth={:?})", self.depth),
        }
    }
}

#[pyclass]
struct Monitor {
    inner: Mutex<MonitorRs>,
}

impl Monitor {
    fn lock(&self) -> MutexGuard<'_, MonitorRs> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[pymethods]
impl Monitor {
    /// `system` and `network` are JSON texts. Bloat is calibrated when omitted.
    #[new]
    #[pyo3(signature = (system, network, horizon, bloat=None, mode="robust", seed=0))]
    fn new(
        system: &str,
        network: &str,
        horizon: usize,
        bloat: Option<f64>,
        mode: &str,
        seed: u64,
    ) -> PyResult<Self> {
        let spec = SystemSpec::from_json(system).map_err(err)?;
        let net = parse_network(network).map_err(err)?;
        let bloat = bloat.unwrap_or_else(|| calibrate_bloat(&spec, DEFAULT_BLOAT_PROBES, seed));
        let mut cfg = MonitorConfig::for_spec(&spec, horizon, bloat);
        cfg.verifier.mode = match mode {
            "robust" => QuantifierMode::Robust,
            "existential" => QuantifierMode::Existential,
            other => return Err(err(format!("unknown mode {other:?}"))),
        };
        let inner = MonitorRs::new(Arc::new(spec), Arc::new(net), cfg).map_err(err)?;
        Ok(Self {
            inner: Mutex::new(inner),
        })
    }

    fn next(&self, x: Vec<f64>) -> Verdict {
        let v = self.lock().next(&x);
        Verdict {
            value: v.value,
            cause: v.cause.map(|c| c.to_string()),
            witness: v.witness,
            depth: v.depth,
            budget_overrun: v.budget_overrun,
        }
    }

    #[getter]
    fn verdict(&self) -> bool {
        self.lock().verdict()
    }

    #[getter]
    fn step_index(&self) -> u64 {
        self.lock().state().step_index
    }

    /// Total milliseconds of every step so far.
    #[getter]
    fn step_ms(&self) -> Vec<f64> {
        self.lock().state().timing.iter().map(|t| t.total_ms).collect()
    }
}

/// JSON text of a synthetic certificate: `valid_box`, `invalid_flipped` or `affine`.
#[pyfunction]
#[pyo3(signature = (kind, dim=2, margin=1.0, center=None))]
fn make_synthetic_cbf(kind: &str, dim: usize, margin: f64, center: Option<Vec<f64>>) -> PyResult<String> {
    let kind: SyntheticKind = kind.parse().map_err(err)?;
    let center = center.unwrap_or_else(|| vec![0.0; dim]);
    let net = make_rs(kind, &SyntheticParams { center, margin }).map_err(err)?;
    Ok(net.to_json())
}

/// Certificate value of a network given as JSON text.
#[pyfunction]
fn network_forward(network: &str, x: Vec<f64>) -> PyResult<f64> {
    parse_network(network).map_err(err)?.forward(&x).map_err(err)
}

/// Runs an experiment config file and returns the results table as CSV.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_path: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_path(config_path).map_err(err)?;
    let table = py.detach(|| run_experiment_rs(&cfg)).map_err(err)?;
    Ok(table.to_csv())
}

#[pymodule]
fn cbf_monitor_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Monitor>()?;
    m.add_class::<Verdict>()?;
    m.add_function(wrap_pyfunction!(make_synthetic_cbf, m)?)?;
    m.add_function(wrap_pyfunction!(network_forward, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

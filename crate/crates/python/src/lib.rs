//! Python bindings: MI helpers, augmentation selection, training with
//! linear evaluation, and the gradient check suite.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use infogcl_core::graph::generate_synthetic_graphs;
use infogcl_core::infomeasure::{self, DiscreteJoint};
use infogcl_core::pipeline::{self, synthetic_process, RunConfig};
use infogcl_core::{augment::AugmentationSpec, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(msg) => PyValueError::new_err(msg),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Mutual information in nats of a joint probability table.
#[pyfunction]
pub fn discrete_mi(table: Vec<Vec<f64>>) -> PyResult<f64> {
    let joint = DiscreteJoint::from_rows(&table).map_err(to_py)?;
    Ok(infomeasure::discrete_mi(&joint).nats)
}

/// Plug-in MI between two symbol sequences.
#[pyfunction]
pub fn empirical_mi(a: Vec<i64>, b: Vec<i64>) -> PyResult<f64> {
    if a.len() != b.len() {
        return Err(PyValueError::new_err("sequences differ in length"));
    }
    Ok(infomeasure::empirical_mi(&a, &b))
}

/// `(name, max_rel_error, passed)` for every gradient check.
#[pyfunction]
#[pyo3(signature = (seed = 0))]
pub fn gradcheck_suite(seed: u64) -> PyResult<Vec<(String, f64, bool)>> {
    let entries = pipeline::gradcheck_suite(seed).map_err(to_py)?;
    Ok(entries.into_iter().map(|e| (e.name, e.max_rel_error, e.passed)).collect())
}

/// Ranks all pairs of the default augmentation candidates on a synthetic
/// process; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (process, count = 200, seed = 0, bins = infomeasure::DEFAULT_BINS))]
pub fn select_augmentations(process: &str, count: usize, seed: u64, bins: usize) -> PyResult<String> {
    let p = synthetic_process(process).map_err(to_py)?;
    let ds = generate_synthetic_graphs(&p, count, seed).map_err(to_py)?;
    let candidates = [
        AugmentationSpec::identity(),
        AugmentationSpec::node_drop(0.2),
        AugmentationSpec::edge_perturb(0.2),
        AugmentationSpec::attr_mask(0.3),
        AugmentationSpec::subgraph(0.8),
    ];
    let report = infomeasure::select_augmentations(&ds, &candidates, seed, bins).map_err(to_py)?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Trains from a JSON run config and returns `(mean, std, fold_accuracies)`
/// of the linear evaluation.
#[pyfunction]
#[pyo3(signature = (config_json, seed = 0, data = None))]
fn train_and_evaluate(py: Python<'_>, config_json: &str, seed: u64, data: Option<&str>) -> PyResult<(f64, f64, Vec<f64>)> {
    let rc = RunConfig::from_json(config_json).map_err(to_py)?;
    let result = py
        .detach(|| -> infogcl_core::Result<_> {
            let ds = rc.load_data(data.map(std::path::Path::new), seed)?;
            pipeline::train_and_evaluate(&rc.train_config(seed)?, ds.as_train_data(), &rc.eval_config())
        })
        .map_err(to_py)?;
    Ok((result.mean, result.std, result.fold_accuracies))
}

#[pymodule]
fn infogcl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(discrete_mi, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_mi, m)?)?;
    m.add_function(wrap_pyfunction!(gradcheck_suite, m)?)?;
    m.add_function(wrap_pyfunction!(select_augmentations, m)?)?;
    m.add_function(wrap_pyfunction!(train_and_evaluate, m)?)?;
    Ok(())
}

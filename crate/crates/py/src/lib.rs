// SPDX-License-Identifier: Apache-2.0

//! Python module `pyfeascore`.

use std::fs::File;
use std::io::BufReader;

use feascore::dataset::{area_bucket_stats, load_dataset, save_dataset, DataFormat, DesignRecord};
use feascore::evaluation::loo_by_project_cv;
use feascore::learner::{export_tree, import_tree, ClassWeight, ExportFormat, LeafScore, PredictError, DEFAULT_CUTOFF};
use feascore::scoring::{score as score_request, ScoreRequest};
use feascore::synthgen::{generate as synth, GenConfig, OracleRule, ShapeFamily};
use feascore::{
    reference_model as reference, train as fit, DecisionTree, FeatureVector, Label, RectilinearPolygon, TrainConfig,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

create_exception!(
    pyfeascore,
    UnsupportedRegion,
    PyValueError,
    "The model has no training support for this input."
);

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// JSON value to native Python objects via the stdlib `json` module.
fn to_py<'py, T: serde::Serialize + ?Sized>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: serde::de::DeserializeOwned>(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = py.import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(value_err)
}

fn parse_polygon(text: &str) -> PyResult<RectilinearPolygon> {
    text.parse().map_err(value_err)
}

#[pyfunction]
fn shape_factor(polygon: &str) -> PyResult<f64> {
    Ok(parse_polygon(polygon)?.shape_factor())
}

#[pyfunction]
fn shape_metrics<'py>(py: Python<'py>, polygon: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &parse_polygon(polygon)?.shape_metrics())
}

#[pyclass(name = "Tree", frozen)]
struct PyTree {
    inner: DecisionTree,
}

#[pymethods]
impl PyTree {
    #[staticmethod]
    fn reference() -> Self {
        PyTree { inner: reference() }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        import_tree(text.as_bytes())
            .map(|inner| PyTree { inner })
            .map_err(value_err)
    }

    #[getter]
    fn model_id(&self) -> &str {
        &self.inner.model_id
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    /// Feasibility score in [0, 1]; raises `UnsupportedRegion`.
    fn predict_score(&self, shape_factor: f64, routing_layers: u32, row_utilization_pct: f64) -> PyResult<f64> {
        let f = FeatureVector::new(shape_factor, routing_layers, row_utilization_pct);
        match self.inner.predict_score(&f) {
            Ok(p) => Ok(p.score),
            Err(e @ PredictError::UnsupportedRegion { .. }) => Err(UnsupportedRegion::new_err(e.to_string())),
            Err(e) => Err(value_err(e)),
        }
    }

    #[pyo3(signature = (shape_factor, routing_layers, row_utilization_pct, cutoff = DEFAULT_CUTOFF))]
    fn predict_class(
        &self,
        shape_factor: f64,
        routing_layers: u32,
        row_utilization_pct: f64,
        cutoff: f64,
    ) -> PyResult<&'static str> {
        let score = self.predict_score(shape_factor, routing_layers, row_utilization_pct)?;
        Ok(feascore::learner::classify(score, cutoff).as_str())
    }

    #[pyo3(signature = (format = "json"))]
    fn export(&self, format: &str) -> PyResult<String> {
        let fmt: ExportFormat = format.parse().map_err(PyValueError::new_err)?;
        String::from_utf8(export_tree(&self.inner, fmt)).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Tree(model_id={:?}, depth={})", self.inner.model_id, self.inner.depth())
    }
}

#[pyclass(name = "Dataset", frozen)]
struct PyDataset {
    records: Vec<DesignRecord>,
}

fn format_of(path: &str) -> DataFormat {
    if path.to_ascii_lowercase().ends_with(".json") {
        DataFormat::Json
    } else {
        DataFormat::Csv
    }
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        let records = load_dataset(BufReader::new(file), format_of(path)).map_err(value_err)?;
        Ok(PyDataset { records })
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        let records = load_dataset(text.as_bytes(), DataFormat::Csv).map_err(value_err)?;
        Ok(PyDataset { records })
    }

    #[staticmethod]
    #[pyo3(signature = (n_records = 96, n_projects = 8, seed = 0, noise_rate = 0.0, shape_families = None))]
    fn generate(
        n_records: usize,
        n_projects: usize,
        seed: u64,
        noise_rate: f64,
        shape_families: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let families = match shape_families {
            Some(names) => names
                .iter()
                .map(|n| n.parse::<ShapeFamily>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(PyValueError::new_err)?,
            None => ShapeFamily::ALL.to_vec(),
        };
        let cfg = GenConfig {
            n_records,
            n_projects,
            seed,
            noise_rate,
            shape_families: families,
            ..Default::default()
        };
        let records = synth(&cfg, &OracleRule::default()).map_err(value_err)?;
        Ok(PyDataset { records })
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        save_dataset(&self.records, &mut buf, DataFormat::Csv).map_err(value_err)?;
        String::from_utf8(buf).map_err(value_err)
    }

    fn records<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let mut buf = Vec::new();
        save_dataset(&self.records, &mut buf, DataFormat::Json).map_err(value_err)?;
        py.import("json")?
            .call_method1("loads", (String::from_utf8(buf).map_err(value_err)?,))
    }

    fn area_stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &area_bucket_stats(&self.records))
    }

    fn __len__(&self) -> usize {
        self.records.len()
    }
}

fn train_config(max_depth: usize, class_weight: &str, leaf_score: &str) -> PyResult<TrainConfig> {
    let class_weight = match class_weight {
        "balanced" => ClassWeight::Balanced,
        "uniform" => ClassWeight::Uniform,
        other => return Err(PyValueError::new_err(format!("unknown class_weight {other:?}"))),
    };
    let leaf_score = match leaf_score {
        "weighted" => LeafScore::Weighted,
        "raw" => LeafScore::Raw,
        other => return Err(PyValueError::new_err(format!("unknown leaf_score {other:?}"))),
    };
    Ok(TrainConfig {
        max_depth,
        class_weight,
        leaf_score,
        ..Default::default()
    })
}

#[pyfunction]
fn reference_model() -> PyTree {
    PyTree::reference()
}

/// Fits a tree on a labeled `Dataset`.
#[pyfunction]
#[pyo3(signature = (dataset, max_depth = 3, class_weight = "balanced", leaf_score = "weighted"))]
fn train(dataset: &PyDataset, max_depth: usize, class_weight: &str, leaf_score: &str) -> PyResult<PyTree> {
    let samples = dataset
        .records
        .iter()
        .map(|r| {
            r.label
                .map(|l| (r.features(), l))
                .ok_or_else(|| PyValueError::new_err(format!("{}: record has no label", r.design_id)))
        })
        .collect::<PyResult<Vec<(FeatureVector, Label)>>>()?;
    let config = train_config(max_depth, class_weight, leaf_score)?;
    fit(&samples, &config).map(|inner| PyTree { inner }).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (dataset, max_depth = 3, class_weight = "balanced", leaf_score = "weighted"))]
fn loo_cv<'py>(
    py: Python<'py>,
    dataset: &PyDataset,
    max_depth: usize,
    class_weight: &str,
    leaf_score: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let config = train_config(max_depth, class_weight, leaf_score)?;
    let report = py
        .detach(|| loo_by_project_cv(&dataset.records, &config))
        .map_err(value_err)?;
    to_py(py, &report)
}

/// Scores a request dict with the same fields as the HTTP `/score` body.
#[pyfunction]
fn score<'py>(py: Python<'py>, tree: &PyTree, request: &Bound<'py, PyDict>) -> PyResult<Bound<'py, PyAny>> {
    let req: ScoreRequest = from_py(py, request.as_any())?;
    let resp = score_request(&tree.inner, &req).map_err(value_err)?;
    to_py(py, &resp)
}

#[pyfunction]
fn feature_names(py: Python<'_>) -> PyResult<Bound<'_, PyList>> {
    PyList::new(py, feascore::learner::FEATURE_NAMES)
}

#[pymodule]
pub fn pyfeascore(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(shape_factor, m)?)?;
    m.add_function(wrap_pyfunction!(shape_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(reference_model, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(loo_cv, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(feature_names, m)?)?;
    m.add_class::<PyTree>()?;
    m.add_class::<PyDataset>()?;
    m.add("UnsupportedRegion", m.py().get_type::<UnsupportedRegion>())?;
    Ok(())
}

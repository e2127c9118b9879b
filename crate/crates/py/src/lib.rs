//! Python module `barygap`: graphs, gadget embeddings, hub and barycenter
//! solvers, the clique reduction and the lemma verification suites.
//!
//! Structured results come back as plain Python dicts and lists; `q = inf`
//! is accepted as `float("inf")` and reported as the string `"inf"`.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use barygap_core::bary::{self, DiscreteMeasure};
use barygap_core::chub::{solve_chub_with, ChubOptions};
use barygap_core::embed::{self, SparseVector};
use barygap_core::fpq::{solve_fpq, FpqProblem};
use barygap_core::graph::{self, DEFAULT_ENUM_CAP};
use barygap_core::reduction::{self, Solver, DEFAULT_REDUCTION_CAP};
use barygap_core::{verify, Error};

create_exception!(barygap, ResourceCapError, PyRuntimeError, "An enumeration or LP exceeded its size cap.");

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Input(_) | Error::Json(_) => PyValueError::new_err(e.to_string()),
        Error::Resource { .. } => ResourceCapError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Converts a serializable value to Python objects through `json.loads`.
fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| py_err(e.into()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A simple undirected graph on vertices `0..n`.
#[pyclass(name = "Graph", module = "barygap", frozen)]
pub struct PyGraph {
    inner: graph::Graph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(PyGraph {
            inner: graph::Graph::new(n, edges).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn complete(n: usize) -> Self {
        PyGraph { inner: graph::complete(n) }
    }

    #[staticmethod]
    fn cycle(n: usize) -> PyResult<Self> {
        Ok(PyGraph {
            inner: graph::cycle(n).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn circulant(n: usize, degree: usize) -> PyResult<Self> {
        Ok(PyGraph {
            inner: graph::circulant_with_degree(n, degree).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn petersen() -> Self {
        PyGraph { inner: graph::petersen() }
    }

    #[staticmethod]
    #[pyo3(signature = (n, degree, seed = 0))]
    fn random_regular(n: usize, degree: usize, seed: u64) -> PyResult<Self> {
        Ok(PyGraph {
            inner: graph::random_regular(n, degree, seed).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyGraph {
            inner: graph::Graph::from_json(text).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// Common degree, or `None` when the graph is not regular.
    #[getter]
    fn degree(&self) -> Option<usize> {
        self.inner.regular_degree()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges()
    }

    fn has_edge(&self, u: usize, v: usize) -> bool {
        self.inner.has_edge(u, v)
    }

    #[pyo3(signature = (k, cap = DEFAULT_ENUM_CAP))]
    fn has_k_clique(&self, py: Python<'_>, k: usize, cap: u128) -> PyResult<bool> {
        py.detach(|| self.inner.has_k_clique(k, cap)).map_err(py_err)
    }

    #[pyo3(signature = (k, cap = DEFAULT_ENUM_CAP))]
    fn max_multiset_edges(&self, py: Python<'_>, k: usize, cap: u128) -> PyResult<usize> {
        py.detach(|| self.inner.max_multiset_edges(k, cap)).map_err(py_err)
    }

    fn induced_edge_count(&self, tuple: Vec<usize>) -> PyResult<usize> {
        self.inner.induced_edge_count(&tuple).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, edges={})", self.inner.n(), self.inner.edge_count())
    }
}

/// `k` groups of `n` sparse `{-1,0,1}` points with the target exponents.
#[pyclass(name = "PointConfig", module = "barygap", frozen)]
pub struct PyPointConfig {
    inner: embed::PointConfig,
}

#[pymethods]
impl PyPointConfig {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyPointConfig {
            inner: embed::PointConfig::from_json(text).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q
    }

    #[getter]
    fn regime<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.regime)
    }

    /// Nonzero `(coordinate, value)` pairs of point `index` in group `group`.
    fn point(&self, group: usize, index: usize) -> PyResult<Vec<(usize, i8)>> {
        if group >= self.inner.k || index >= self.inner.n {
            return Err(PyValueError::new_err("point index out of range"));
        }
        Ok(self.inner.point(group, index).entries().to_vec())
    }

    fn dense(&self, group: usize, index: usize) -> PyResult<Vec<f64>> {
        if group >= self.inner.k || index >= self.inner.n {
            return Err(PyValueError::new_err("point index out of range"));
        }
        Ok(self.inner.point(group, index).to_dense(self.inner.d))
    }

    fn __repr__(&self) -> String {
        format!("PointConfig(k={}, n={}, d={}, regime={:?})", self.inner.k, self.inner.n, self.inner.d, self.inner.regime)
    }
}

/// `k` discrete measures with weights and exponents `(p, q)`.
#[pyclass(name = "BaryInstance", module = "barygap", frozen)]
pub struct PyBaryInstance {
    inner: bary::BaryInstance,
}

#[pymethods]
impl PyBaryInstance {
    /// `measures` is a list of `(atoms, masses)` pairs; weights default to `1/k`.
    #[new]
    #[pyo3(signature = (measures, p, q, weights = None))]
    fn new(measures: Vec<(Vec<Vec<f64>>, Vec<f64>)>, p: f64, q: f64, weights: Option<Vec<f64>>) -> PyResult<Self> {
        let ms = measures
            .into_iter()
            .map(|(atoms, masses)| DiscreteMeasure::new(atoms, masses))
            .collect::<Result<Vec<_>, _>>()
            .map_err(py_err)?;
        let mut inner = bary::BaryInstance::new(ms, p, q).map_err(py_err)?;
        if let Some(w) = weights {
            inner.weights = w;
            inner.validate().map_err(py_err)?;
        }
        Ok(PyBaryInstance { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyBaryInstance {
            inner: bary::BaryInstance::from_json(text).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.clone()
    }

    /// `(atoms, masses)` per measure.
    fn measures(&self) -> Vec<(Vec<Vec<f64>>, Vec<f64>)> {
        self.inner.measures.iter().map(|m| (m.atoms.clone(), m.masses.clone())).collect()
    }

    /// Nearby instance whose measures are uniform, changing the value by at most `eps`.
    fn uniformize(&self, eps: f64) -> PyResult<Self> {
        Ok(PyBaryInstance {
            inner: bary::uniformize(&self.inner, eps).map_err(py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        let sizes: Vec<usize> = self.inner.measures.iter().map(DiscreteMeasure::len).collect();
        format!("BaryInstance(k={}, sizes={sizes:?}, p={}, q={})", self.inner.k(), self.inner.p, self.inner.q)
    }
}

/// Embeds a regular graph; the embedding is chosen by `q`.
#[pyfunction]
fn embed_graph(graph: &PyGraph, k: usize, p: f64, q: f64) -> PyResult<PyPointConfig> {
    Ok(PyPointConfig {
        inner: embed::embed(&graph.inner, k, p, q).map_err(py_err)?,
    })
}

/// `min_y sum_i w_i ||z_i - y||_q^p` with a certified lower bound.
#[pyfunction]
#[pyo3(signature = (points, p, q, tol = 1e-9, weights = None))]
fn fpq<'py>(py: Python<'py>, points: Vec<Vec<f64>>, p: f64, q: f64, tol: f64, weights: Option<Vec<f64>>) -> PyResult<Bound<'py, PyAny>> {
    let mut prob = FpqProblem::new(points, p, q);
    if let Some(w) = weights {
        prob = prob.with_weights(w);
    }
    let sol = py.detach(|| solve_fpq(&prob, tol)).map_err(py_err)?;
    to_py(py, &sol)
}

/// Minimum hub value over all tuples; `graph` enables per-pattern solving.
#[pyfunction]
#[pyo3(signature = (config, tol = 1e-6, graph = None, cap = DEFAULT_ENUM_CAP))]
fn solve_chub<'py>(py: Python<'py>, config: &PyPointConfig, tol: f64, graph: Option<&PyGraph>, cap: u128) -> PyResult<Bound<'py, PyAny>> {
    let opts = ChubOptions {
        cap,
        graph: graph.map(|g| g.inner.clone()),
        symmetric: graph.is_some(),
        ..Default::default()
    };
    let res = py.detach(|| solve_chub_with(&config.inner, tol, &opts)).map_err(py_err)?;
    to_py(py, &res)
}

/// Exact barycenter value through multi-marginal transport, with the plan
/// and the extracted barycenter.
#[pyfunction]
#[pyo3(signature = (instance, tol = 1e-7))]
fn bary_value<'py>(py: Python<'py>, instance: &PyBaryInstance, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let inst = &instance.inner;
    let (res, nu) = py
        .detach(|| {
            let res = bary::bary_value_mot(inst, tol)?;
            let nu = bary::extract_barycenter(&res.plan, inst, tol)?;
            Ok::<_, Error>((res, nu))
        })
        .map_err(py_err)?;
    let out = to_py(py, &res)?;
    out.set_item("barycenter", to_py(py, &nu)?)?;
    Ok(out)
}

/// Best barycenter supported on the union of the input supports.
#[pyfunction]
fn borgwardt<'py>(py: Python<'py>, instance: &PyBaryInstance) -> PyResult<Bound<'py, PyAny>> {
    let res = py.detach(|| bary::borgwardt_2approx(&instance.inner, bary::DEFAULT_LP_CAP)).map_err(py_err)?;
    to_py(py, &res)
}

/// Gap `(gamma, delta)` separating clique from non-clique hub values.
#[pyfunction]
fn gap_certificate<'py>(py: Python<'py>, n: usize, k: usize, degree: usize, p: f64, q: f64) -> PyResult<Bound<'py, PyAny>> {
    let cert = py.detach(|| reduction::gap_certificate(n, k, degree, p, q)).map_err(py_err)?;
    to_py(py, &cert)
}

/// Decides whether `graph` has a `k`-clique through the reduction and
/// compares with brute force; `solver` is `"chub"` or `"mot"`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (graph, k, p, q, solver = "chub", tol = None, cap = DEFAULT_REDUCTION_CAP))]
fn reduce<'py>(py: Python<'py>, graph: &PyGraph, k: usize, p: f64, q: f64, solver: &str, tol: Option<f64>, cap: u128) -> PyResult<Bound<'py, PyAny>> {
    let solver = match solver {
        "chub" => Solver::ChubBruteforce,
        "mot" => Solver::BaryMot,
        other => return Err(PyValueError::new_err(format!("unknown solver {other:?}; use \"chub\" or \"mot\""))),
    };
    let report = py.detach(|| reduction::run_reduction(&graph.inner, k, p, q, solver, tol, cap)).map_err(py_err)?;
    to_py(py, &report)
}

/// Runs a lemma property suite and returns its report.
#[pyfunction]
#[pyo3(signature = (id, seed = 0, budget = verify::DEFAULT_BUDGET))]
fn verify_lemma<'py>(py: Python<'py>, id: &str, seed: u64, budget: usize) -> PyResult<Bound<'py, PyAny>> {
    let report = py.detach(|| verify::verify_lemma(id, seed, budget)).map_err(py_err)?;
    to_py(py, &report)
}

/// Exact `l1` distance between two sparse integer vectors given as `(coordinate, value)` pairs.
#[pyfunction]
fn l1_distance(x: Vec<(usize, i8)>, y: Vec<(usize, i8)>) -> PyResult<i64> {
    let x = SparseVector::from_pairs(x).map_err(py_err)?;
    let y = SparseVector::from_pairs(y).map_err(py_err)?;
    Ok(barygap_core::fpq::l1_distance_exact(&x, &y))
}

#[pymodule]
pub fn barygap(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("LEMMA_IDS", verify::LEMMA_IDS.to_vec())?;
    m.add("ResourceCapError", m.py().get_type::<ResourceCapError>())?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyPointConfig>()?;
    m.add_class::<PyBaryInstance>()?;
    m.add_function(wrap_pyfunction!(embed_graph, m)?)?;
    m.add_function(wrap_pyfunction!(fpq, m)?)?;
    m.add_function(wrap_pyfunction!(solve_chub, m)?)?;
    m.add_function(wrap_pyfunction!(bary_value, m)?)?;
    m.add_function(wrap_pyfunction!(borgwardt, m)?)?;
    m.add_function(wrap_pyfunction!(gap_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(verify_lemma, m)?)?;
    m.add_function(wrap_pyfunction!(l1_distance, m)?)?;
    Ok(())
}

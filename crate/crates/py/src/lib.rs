//! Python bindings for the cgforge causal discovery library.
//!
//! Exposes the main types (`Dataset`, `Dag`, `Constraints`,
//! `EdgeFrequencies`) and operations (scoring, hill-climbing, ensemble
//! averaging, the config-driven pipeline) as an extension module.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use cgforge::dataset::{self, DiscretizationRule, DiscretizeKind};
use cgforge::ensemble::{self, EnsembleConfig};
use cgforge::graph::{self, Edge, NodeSet};
use cgforge::pipeline::PipelineConfig;
use cgforge::scoring::{self, ScoreCache};
use cgforge::search::{self, ConstraintSet, SearchConfig, StartGraph, TierSpec};

fn to_py_err(e: cgforge::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn edge_list(pairs: Vec<(usize, usize)>) -> BTreeSet<Edge> {
    pairs.into_iter().map(|(f, t)| Edge::new(f, t)).collect()
}

/// A discrete dataset of categorical-encoded columns.
#[pyclass(name = "Dataset", skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: dataset::Dataset,
}

#[pymethods]
impl PyDataset {
    /// Load a CSV file (first row is the header).
    #[staticmethod]
    fn from_csv(path: &str) -> PyResult<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| PyRuntimeError::new_err(format!("failed to open {path}: {e}")))?;
        let inner = dataset::Dataset::load_csv(std::io::BufReader::new(file), None)
            .map_err(to_py_err)?;
        Ok(PyDataset { inner })
    }

    /// Parse CSV text (first row is the header).
    #[staticmethod]
    fn from_csv_text(text: &str) -> PyResult<Self> {
        let inner = dataset::Dataset::load_csv(text.as_bytes(), None).map_err(to_py_err)?;
        Ok(PyDataset { inner })
    }

    #[getter]
    fn row_count(&self) -> usize {
        self.inner.row_count()
    }

    #[getter]
    fn var_count(&self) -> usize {
        self.inner.var_count()
    }

    /// Column names in order.
    fn names(&self) -> Vec<String> {
        self.inner.variables().iter().map(|v| v.name.clone()).collect()
    }

    /// (name, arity, tier) per variable.
    fn variables(&self) -> Vec<(String, usize, u32)> {
        self.inner
            .variables()
            .iter()
            .map(|v| (v.name.clone(), v.arity(), v.tier))
            .collect()
    }

    fn drop_columns(&self, names: Vec<String>) -> PyResult<Self> {
        Ok(PyDataset {
            inner: self.inner.drop_columns(&names).map_err(to_py_err)?,
        })
    }

    /// Bin a numeric column at explicit thresholds (half-open intervals).
    fn discretize_cuts(&self, column: &str, cuts: Vec<f64>) -> PyResult<Self> {
        self.apply_rule(column, DiscretizeKind::ExplicitCuts(cuts))
    }

    /// Bin a numeric column at empirical quantiles.
    fn discretize_quantile(&self, column: &str, bins: usize) -> PyResult<Self> {
        self.apply_rule(column, DiscretizeKind::Quantile(bins))
    }

    /// Recode raw values through an explicit mapping.
    fn discretize_value_map(&self, column: &str, map: BTreeMap<String, String>) -> PyResult<Self> {
        self.apply_rule(column, DiscretizeKind::ValueMap(map))
    }

    /// Merge categories observed fewer than `min_count` times.
    #[pyo3(signature = (column, min_count, label = "other"))]
    fn discretize_rare_merge(&self, column: &str, min_count: u64, label: &str) -> PyResult<Self> {
        self.apply_rule(
            column,
            DiscretizeKind::RareMerge {
                min_count,
                merged_label: label.to_owned(),
            },
        )
    }

    /// Assign tiers by column name (1 = most upstream).
    fn with_tiers(&self, tiers: BTreeMap<String, u32>) -> PyResult<Self> {
        Ok(PyDataset {
            inner: self.inner.with_tiers(&tiers).map_err(to_py_err)?,
        })
    }

    /// Resample all rows with replacement, deterministically per seed.
    fn bootstrap(&self, seed: u64) -> PyResult<Self> {
        Ok(PyDataset {
            inner: self.inner.bootstrap_sample(seed).map_err(to_py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset({} variables, {} rows)",
            self.inner.var_count(),
            self.inner.row_count()
        )
    }
}

impl PyDataset {
    fn apply_rule(&self, column: &str, kind: DiscretizeKind) -> PyResult<Self> {
        let rule = DiscretizationRule::new(column, kind).map_err(to_py_err)?;
        Ok(PyDataset {
            inner: self.inner.discretize(&rule).map_err(to_py_err)?,
        })
    }
}

/// A directed acyclic graph over variable indices.
#[pyclass(name = "Dag", skip_from_py_object)]
#[derive(Clone)]
struct PyDag {
    inner: graph::Dag,
}

#[pymethods]
impl PyDag {
    #[new]
    fn new(node_count: usize) -> Self {
        PyDag {
            inner: graph::Dag::new(node_count),
        }
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn add_edge(&mut self, from: usize, to: usize) -> PyResult<()> {
        self.inner.add_edge(from, to).map_err(to_py_err)
    }

    fn remove_edge(&mut self, from: usize, to: usize) -> PyResult<()> {
        self.inner.remove_edge(from, to).map_err(to_py_err)
    }

    fn has_edge(&self, from: usize, to: usize) -> bool {
        self.inner.has_edge(from, to)
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().into_iter().map(|e| (e.from, e.to)).collect()
    }

    fn parents(&self, node: usize) -> Vec<usize> {
        self.inner.parents(node).to_vec()
    }

    fn children(&self, node: usize) -> Vec<usize> {
        self.inner.children(node).to_vec()
    }

    /// Would adding this edge close a directed cycle?
    fn would_create_cycle(&self, from: usize, to: usize) -> bool {
        self.inner.would_create_cycle(from, to)
    }

    fn topological_order(&self) -> PyResult<Vec<usize>> {
        self.inner.topological_order().map_err(to_py_err)
    }

    /// Parents, children, and children's other parents of `target`.
    fn markov_blanket(&self, target: usize) -> PyResult<Vec<usize>> {
        Ok(self
            .inner
            .markov_blanket(target)
            .map_err(to_py_err)?
            .into_iter()
            .collect())
    }

    /// Restrict to the targets and their blankets; returns the subgraph
    /// and the retained original indices.
    fn mb_subgraph(&self, targets: Vec<usize>) -> PyResult<(PyDag, Vec<usize>)> {
        let targets: NodeSet = targets.into_iter().collect();
        let (sub, mapping) = self.inner.mb_subgraph(&targets).map_err(to_py_err)?;
        Ok((PyDag { inner: sub }, mapping))
    }

    /// Is `x` d-separated from `y` given `z`?
    fn d_separated(&self, x: usize, y: usize, z: Vec<usize>) -> PyResult<bool> {
        let z: NodeSet = z.into_iter().collect();
        self.inner.d_separated(x, y, &z).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Dag({} nodes, {} edges)",
            self.inner.node_count(),
            self.inner.edge_count()
        )
    }
}

/// Forbidden and required edges compiled from prior knowledge.
#[pyclass(name = "Constraints", skip_from_py_object)]
#[derive(Clone)]
struct PyConstraints {
    inner: ConstraintSet,
}

#[pymethods]
impl PyConstraints {
    #[new]
    #[pyo3(signature = (forbidden = Vec::new(), required = Vec::new()))]
    fn new(forbidden: Vec<(usize, usize)>, required: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(PyConstraints {
            inner: ConstraintSet::new(edge_list(forbidden), edge_list(required))
                .map_err(to_py_err)?,
        })
    }

    /// Compile tiers (one per variable index, 1 = most upstream) into
    /// forbidden downstream-to-upstream edges.
    #[staticmethod]
    fn from_tiers(tiers: Vec<u32>) -> PyResult<Self> {
        let spec = TierSpec::new(tiers).map_err(to_py_err)?;
        Ok(PyConstraints {
            inner: search::tiers_to_constraints(&spec),
        })
    }

    fn forbidden(&self) -> Vec<(usize, usize)> {
        self.inner.forbidden().iter().map(|e| (e.from, e.to)).collect()
    }

    fn required(&self) -> Vec<(usize, usize)> {
        self.inner.required().iter().map(|e| (e.from, e.to)).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Constraints({} forbidden, {} required)",
            self.inner.forbidden().len(),
            self.inner.required().len()
        )
    }
}

/// Directed-edge occurrence counts across an ensemble.
#[pyclass(name = "EdgeFrequencies", skip_from_py_object)]
#[derive(Clone)]
struct PyEdgeFrequencies {
    inner: ensemble::EdgeFrequencyTable,
}

#[pymethods]
impl PyEdgeFrequencies {
    #[getter]
    fn runs(&self) -> usize {
        self.inner.runs()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    /// Nonzero counts keyed by (from, to).
    fn counts(&self) -> BTreeMap<(usize, usize), u32> {
        self.inner.iter().map(|(e, c)| ((e.from, e.to), c)).collect()
    }

    fn frequency(&self, from: usize, to: usize) -> f64 {
        self.inner.frequency(Edge::new(from, to))
    }

    fn __repr__(&self) -> String {
        format!(
            "EdgeFrequencies({} runs, {} edges seen)",
            self.inner.runs(),
            self.inner.iter().count()
        )
    }
}

/// Total BIC of `dag` against `dataset`.
#[pyfunction]
fn total_bic(dataset: &PyDataset, dag: &PyDag) -> PyResult<f64> {
    let mut cache = ScoreCache::new();
    scoring::total_bic(&dataset.inner, &dag.inner, &mut cache).map_err(to_py_err)
}

/// Local BIC of `child` given `parents`.
#[pyfunction]
fn local_bic(dataset: &PyDataset, child: usize, parents: Vec<usize>) -> PyResult<f64> {
    scoring::local_bic_uncached(&dataset.inner, child, &parents).map_err(to_py_err)
}

/// Greedy hill-climbing over the BIC score. Returns the learned graph and
/// its score.
#[pyfunction]
#[pyo3(signature = (dataset, constraints = None, seed = 0, max_iterations = None, start_empty = false))]
fn hill_climb(
    dataset: &PyDataset,
    constraints: Option<&PyConstraints>,
    seed: u64,
    max_iterations: Option<usize>,
    start_empty: bool,
) -> PyResult<(PyDag, f64)> {
    let c = constraints.map_or_else(ConstraintSet::unconstrained, |c| c.inner.clone());
    let cfg = SearchConfig {
        seed,
        max_iterations,
        start: if start_empty {
            StartGraph::Empty
        } else {
            StartGraph::RequiredOnly
        },
    };
    let mut cache = ScoreCache::new();
    let (dag, trace) = search::hill_climb(&dataset.inner, &c, &cfg, &mut cache).map_err(to_py_err)?;
    Ok((PyDag { inner: dag }, trace.final_score))
}

/// Bootstrap + hill-climbing ensemble; returns per-edge occurrence counts.
#[pyfunction]
#[pyo3(signature = (dataset, constraints = None, runs = 100, threshold = 0.9, seed = 0, workers = None))]
fn learn_ensemble(
    dataset: &PyDataset,
    constraints: Option<&PyConstraints>,
    runs: usize,
    threshold: f64,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<PyEdgeFrequencies> {
    let c = constraints.map_or_else(ConstraintSet::unconstrained, |c| c.inner.clone());
    let cfg = EnsembleConfig {
        runs,
        threshold,
        base_seed: seed,
        workers: workers.unwrap_or_else(|| EnsembleConfig::default().workers),
        max_iterations: None,
    };
    let (table, _) = ensemble::learn_ensemble(&dataset.inner, &c, &cfg).map_err(to_py_err)?;
    Ok(PyEdgeFrequencies { inner: table })
}

/// Keep the edges whose frequency reaches `threshold`. Returns the
/// averaged DAG and its per-edge frequencies.
#[pyfunction]
fn average_graph(
    frequencies: &PyEdgeFrequencies,
    threshold: f64,
) -> PyResult<(PyDag, BTreeMap<(usize, usize), f64>)> {
    let averaged = ensemble::average_graph(&frequencies.inner, threshold).map_err(to_py_err)?;
    let freqs = averaged
        .frequencies
        .iter()
        .map(|(e, f)| ((e.from, e.to), *f))
        .collect();
    Ok((PyDag { inner: averaged.dag }, freqs))
}

/// Execute the full config-driven pipeline; returns the written paths.
#[pyfunction]
fn run_pipeline(config_path: &str) -> PyResult<Vec<String>> {
    let cfg = PipelineConfig::from_path(config_path).map_err(to_py_err)?;
    let out = cgforge::pipeline::run_pipeline(&cfg).map_err(to_py_err)?;
    Ok(out
        .written
        .into_iter()
        .map(|p| p.to_string_lossy().into_owned())
        .collect())
}

#[pymodule]
fn cgforge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyDag>()?;
    m.add_class::<PyConstraints>()?;
    m.add_class::<PyEdgeFrequencies>()?;
    m.add_function(wrap_pyfunction!(total_bic, m)?)?;
    m.add_function(wrap_pyfunction!(local_bic, m)?)?;
    m.add_function(wrap_pyfunction!(hill_climb, m)?)?;
    m.add_function(wrap_pyfunction!(learn_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(average_graph, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}

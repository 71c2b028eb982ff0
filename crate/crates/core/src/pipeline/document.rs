//! Serializable graph documents. A document is self-describing: variable
//! names and tiers, edges with optional frequency annotations, and the
//! provenance that produced it.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dataset::Variable;
use crate::ensemble::{AveragedGraph, EdgeFrequencyTable};
use crate::error::{Error, Result};
use crate::graph::{Dag, Edge};

/// Schema tag for graph documents.
pub const GRAPH_SCHEMA: &str = "cgforge/1";
/// Schema tag for edge-frequency documents.
pub const ENSEMBLE_SCHEMA: &str = "cgforge-ensemble/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocVariable {
    pub name: String,
    pub tier: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocEdge {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
}

/// Where a document came from: enough to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_digest: String,
    pub seed: u64,
    pub runs: usize,
    pub threshold: f64,
}

/// A learned graph with names, tiers, and provenance. Round-trips
/// losslessly through JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub schema: String,
    pub variables: Vec<DocVariable>,
    pub edges: Vec<DocEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl GraphDocument {
    /// Assemble a document from an averaged graph over `variables`.
    pub fn from_averaged(
        variables: &[Variable],
        averaged: &AveragedGraph,
        provenance: Option<Provenance>,
    ) -> Result<Self> {
        if averaged.dag.node_count() != variables.len() {
            return Err(Error::Document(format!(
                "graph has {} nodes but {} variables were given",
                averaged.dag.node_count(),
                variables.len()
            )));
        }
        let doc = GraphDocument {
            schema: GRAPH_SCHEMA.to_owned(),
            variables: variables
                .iter()
                .map(|v| DocVariable {
                    name: v.name.clone(),
                    tier: v.tier,
                })
                .collect(),
            edges: averaged
                .dag
                .edges()
                .into_iter()
                .map(|e| DocEdge {
                    from: variables[e.from].name.clone(),
                    to: variables[e.to].name.clone(),
                    frequency: averaged.frequencies.get(&e).copied(),
                })
                .collect(),
            provenance,
        };
        doc.validate()?;
        Ok(doc)
    }

    /// Reject documents with a wrong schema tag, duplicate or unknown
    /// names, bad tiers or frequencies, duplicate edges, or cycles.
    pub fn validate(&self) -> Result<()> {
        if self.schema != GRAPH_SCHEMA {
            return Err(Error::Document(format!(
                "unsupported schema '{}', expected '{GRAPH_SCHEMA}'",
                self.schema
            )));
        }
        for v in &self.variables {
            if v.tier == 0 {
                return Err(Error::Document(format!(
                    "variable '{}' has tier 0; tiers start at 1",
                    v.name
                )));
            }
        }
        for e in &self.edges {
            if let Some(f) = e.frequency {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::Document(format!(
                        "edge {} -> {} has frequency {f} outside [0, 1]",
                        e.from, e.to
                    )));
                }
            }
        }
        self.to_dag().map(|_| ())
    }

    /// Index the variables by name, rejecting duplicates.
    pub fn name_index(&self) -> Result<HashMap<&str, usize>> {
        let mut index = HashMap::new();
        for (i, v) in self.variables.iter().enumerate() {
            if index.insert(v.name.as_str(), i).is_some() {
                return Err(Error::Document(format!(
                    "duplicate variable name '{}'",
                    v.name
                )));
            }
        }
        Ok(index)
    }

    /// Build the documented DAG over variable indices, rejecting unknown
    /// endpoints, duplicate edges, and cycles.
    pub fn to_dag(&self) -> Result<Dag> {
        let index = self.name_index()?;
        let mut g = Dag::new(self.variables.len());
        for e in &self.edges {
            let from = *index.get(e.from.as_str()).ok_or_else(|| {
                Error::Document(format!("edge references unknown node '{}'", e.from))
            })?;
            let to = *index.get(e.to.as_str()).ok_or_else(|| {
                Error::Document(format!("edge references unknown node '{}'", e.to))
            })?;
            g.add_edge(from, to).map_err(|err| match err {
                Error::CycleDetected(_) => Error::Document(format!(
                    "edge list is cyclic at {} -> {}",
                    e.from, e.to
                )),
                other => Error::Document(other.to_string()),
            })?;
        }
        Ok(g)
    }

    /// Restrict the document to `keep` (indices into `variables`),
    /// preserving order, edge annotations, and provenance.
    pub fn restrict_to(&self, keep: &[usize]) -> Result<Self> {
        let mut kept = vec![false; self.variables.len()];
        for &i in keep {
            if i >= self.variables.len() {
                return Err(Error::InvalidNode {
                    index: i,
                    node_count: self.variables.len(),
                });
            }
            kept[i] = true;
        }
        let index = self.name_index()?;
        let variables: Vec<DocVariable> = self
            .variables
            .iter()
            .enumerate()
            .filter(|(i, _)| kept[*i])
            .map(|(_, v)| v.clone())
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| kept[index[e.from.as_str()]] && kept[index[e.to.as_str()]])
            .cloned()
            .collect();
        Ok(GraphDocument {
            schema: self.schema.clone(),
            variables,
            edges,
            provenance: self.provenance.clone(),
        })
    }

    /// Serialize to pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// Parse and validate a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GraphDocument = serde_json::from_str(text).map_err(|e| {
            Error::Document(format!(
                "parse error at line {} column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        doc.validate()?;
        Ok(doc)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocEdgeCount {
    pub from: String,
    pub to: String,
    pub count: u32,
}

/// Persisted edge-frequency table from an ensemble, the input to
/// threshold averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDocument {
    pub schema: String,
    pub variables: Vec<DocVariable>,
    pub runs: usize,
    pub counts: Vec<DocEdgeCount>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl EnsembleDocument {
    pub fn from_table(
        variables: &[Variable],
        table: &EdgeFrequencyTable,
        provenance: Option<Provenance>,
    ) -> Result<Self> {
        if table.node_count() != variables.len() {
            return Err(Error::Document(format!(
                "table covers {} nodes but {} variables were given",
                table.node_count(),
                variables.len()
            )));
        }
        Ok(EnsembleDocument {
            schema: ENSEMBLE_SCHEMA.to_owned(),
            variables: variables
                .iter()
                .map(|v| DocVariable {
                    name: v.name.clone(),
                    tier: v.tier,
                })
                .collect(),
            runs: table.runs(),
            counts: table
                .iter()
                .map(|(e, count)| DocEdgeCount {
                    from: variables[e.from].name.clone(),
                    to: variables[e.to].name.clone(),
                    count,
                })
                .collect(),
            provenance,
        })
    }

    pub fn to_table(&self) -> Result<EdgeFrequencyTable> {
        let mut index = HashMap::new();
        for (i, v) in self.variables.iter().enumerate() {
            if index.insert(v.name.as_str(), i).is_some() {
                return Err(Error::Document(format!(
                    "duplicate variable name '{}'",
                    v.name
                )));
            }
        }
        let mut counts = BTreeMap::new();
        for c in &self.counts {
            let from = *index.get(c.from.as_str()).ok_or_else(|| {
                Error::Document(format!("count references unknown node '{}'", c.from))
            })?;
            let to = *index.get(c.to.as_str()).ok_or_else(|| {
                Error::Document(format!("count references unknown node '{}'", c.to))
            })?;
            if counts.insert(Edge::new(from, to), c.count).is_some() {
                return Err(Error::Document(format!(
                    "duplicate count for edge {} -> {}",
                    c.from, c.to
                )));
            }
        }
        EdgeFrequencyTable::new(self.variables.len(), self.runs, counts)
            .map_err(|e| Error::Document(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: EnsembleDocument = serde_json::from_str(text).map_err(|e| {
            Error::Document(format!(
                "parse error at line {} column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        if doc.schema != ENSEMBLE_SCHEMA {
            return Err(Error::Document(format!(
                "unsupported schema '{}', expected '{ENSEMBLE_SCHEMA}'",
                doc.schema
            )));
        }
        doc.to_table()?;
        Ok(doc)
    }
}

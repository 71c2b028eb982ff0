//! Config-driven pipeline driver: ingest -> preprocess -> learn ensemble
//! -> average -> Markov-blanket subgraph -> export, with serialization of
//! every intermediate artifact.

mod config;
mod document;
mod dot;

pub use config::PipelineConfig;
pub use document::{
    DocEdge, DocEdgeCount, DocVariable, EnsembleDocument, GraphDocument, Provenance,
    ENSEMBLE_SCHEMA, GRAPH_SCHEMA,
};
pub use dot::{export_dot, TierPalette};

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::dataset::Dataset;
use crate::ensemble::{
    average_graph, learn_ensemble, AveragedGraph, EdgeFrequencyTable, EnsembleConfig, RunSummary,
};
use crate::error::{Error, Result};
use crate::graph::NodeSet;
use crate::search::{tiers_to_constraints, ConstraintSet, TierSpec};

/// Result of the preprocessing stages: the learning-ready dataset plus
/// any warnings (currently only constant-column exclusions).
#[derive(Debug)]
pub struct Preprocessed {
    pub dataset: Dataset,
    pub warnings: Vec<String>,
}

/// Ingest the CSV and apply drops, discretization, validation, constant
/// exclusion, and tier assignment.
pub fn preprocess(cfg: &PipelineConfig) -> Result<Preprocessed> {
    let file = std::fs::File::open(&cfg.data).map_err(|source| Error::ReadFile {
        path: cfg.data.clone(),
        source,
    })?;
    let data = Dataset::load_csv(std::io::BufReader::new(file), None)
        .map_err(|e| e.in_stage("ingest"))?;

    let data = data
        .drop_columns(&cfg.drop)
        .map_err(|e| e.in_stage("drop"))?;

    let mut data = data;
    for rule in &cfg.discretize {
        data = data.discretize(rule).map_err(|e| e.in_stage("discretize"))?;
    }

    validate_against_data(cfg, &data).map_err(|e| e.in_stage("validate"))?;

    // A constant contributes nothing to any score; exclude it from learning.
    let mut warnings = Vec::new();
    let constant: Vec<String> = data
        .variables()
        .iter()
        .filter(|v| v.arity() < 2)
        .map(|v| v.name.clone())
        .collect();
    if !constant.is_empty() {
        if let Some(t) = cfg.targets.iter().find(|t| constant.contains(t)) {
            return Err(Error::Config(format!(
                "target '{t}' is constant after preprocessing"
            ))
            .in_stage("validate"));
        }
        for name in &constant {
            warnings.push(format!(
                "excluding constant column '{name}' from learning"
            ));
        }
        data = data.drop_columns(&constant).map_err(|e| e.in_stage("validate"))?;
    }

    // Constant columns may still have (now unused) tier entries.
    let remaining: BTreeSet<&str> = data.variables().iter().map(|v| v.name.as_str()).collect();
    let tiers = cfg
        .tiers
        .iter()
        .filter(|(name, _)| remaining.contains(name.as_str()))
        .map(|(name, &tier)| (name.clone(), tier))
        .collect();
    let data = data
        .with_tiers(&tiers)
        .map_err(|e| e.in_stage("validate"))?;

    Ok(Preprocessed {
        dataset: data,
        warnings,
    })
}

fn validate_against_data(cfg: &PipelineConfig, data: &Dataset) -> Result<()> {
    let columns: BTreeSet<&str> = data.variables().iter().map(|v| v.name.as_str()).collect();
    let missing_from_data: Vec<&str> = cfg
        .tiers
        .keys()
        .map(String::as_str)
        .filter(|n| !columns.contains(n))
        .collect();
    if !missing_from_data.is_empty() {
        return Err(Error::Config(format!(
            "tiers reference unknown column(s): {}",
            missing_from_data.join(", ")
        )));
    }
    let untiered: Vec<&str> = columns
        .iter()
        .filter(|n| !cfg.tiers.contains_key(**n))
        .copied()
        .collect();
    if !untiered.is_empty() {
        return Err(Error::Config(format!(
            "column(s) without a tier assignment: {}",
            untiered.join(", ")
        )));
    }
    for target in &cfg.targets {
        if !columns.contains(target.as_str()) {
            return Err(Error::Config(format!("unknown target '{target}'")));
        }
    }
    Ok(())
}

/// Tier constraints for a preprocessed dataset.
pub fn constraints_for(data: &Dataset) -> Result<ConstraintSet> {
    let tiers = TierSpec::new(data.variables().iter().map(|v| v.tier).collect())?;
    Ok(tiers_to_constraints(&tiers))
}

/// Run the bootstrap + hill-climbing ensemble configured in `cfg`.
pub fn learn_frequencies(
    cfg: &PipelineConfig,
    data: &Dataset,
) -> Result<(EdgeFrequencyTable, Vec<RunSummary>)> {
    let constraints = constraints_for(data)?;
    let ensemble_cfg = EnsembleConfig {
        runs: cfg.runs,
        threshold: cfg.threshold,
        base_seed: cfg.seed,
        workers: cfg.workers.unwrap_or_else(|| EnsembleConfig::default().workers),
        max_iterations: None,
    };
    learn_ensemble(data, &constraints, &ensemble_cfg).map_err(|e| e.in_stage("learn"))
}

/// Provenance block recorded in every output document.
pub fn provenance(cfg: &PipelineConfig) -> Provenance {
    Provenance {
        config_digest: cfg.config_digest.clone(),
        seed: cfg.seed,
        runs: cfg.runs,
        threshold: cfg.threshold,
    }
}

/// Threshold the frequency table and assemble the full-graph document.
pub fn average_stage(
    cfg: &PipelineConfig,
    doc: &EnsembleDocument,
) -> Result<(AveragedGraph, GraphDocument)> {
    let table = doc.to_table().map_err(|e| e.in_stage("average"))?;
    let averaged = average_graph(&table, cfg.threshold).map_err(|e| e.in_stage("average"))?;
    let variables: Vec<crate::dataset::Variable> = doc
        .variables
        .iter()
        .map(|v| crate::dataset::Variable::new(v.name.clone(), Vec::new()).with_tier(v.tier))
        .collect();
    let full = GraphDocument::from_averaged(&variables, &averaged, doc.provenance.clone())
        .map_err(|e| e.in_stage("average"))?;
    Ok((averaged, full))
}

/// Restrict a full-graph document to the Markov blanket of the targets.
pub fn mb_stage(cfg: &PipelineConfig, full: &GraphDocument) -> Result<GraphDocument> {
    let index = full.name_index().map_err(|e| e.in_stage("mb"))?;
    let dag = full.to_dag().map_err(|e| e.in_stage("mb"))?;
    let mut targets = NodeSet::new();
    for t in &cfg.targets {
        match index.get(t.as_str()) {
            Some(&i) => {
                targets.insert(i);
            }
            None => {
                return Err(
                    Error::Config(format!("target '{t}' is not in the graph document"))
                        .in_stage("mb"),
                )
            }
        }
    }
    let (_, mapping) = dag.mb_subgraph(&targets).map_err(|e| e.in_stage("mb"))?;
    full.restrict_to(&mapping).map_err(|e| e.in_stage("mb"))
}

/// Everything `run` produces, with the paths it wrote.
#[derive(Debug)]
pub struct PipelineOutput {
    pub averaged: AveragedGraph,
    pub full_document: GraphDocument,
    pub mb_document: GraphDocument,
    pub summaries: Vec<RunSummary>,
    pub warnings: Vec<String>,
    pub written: Vec<PathBuf>,
}

/// Execute the whole pipeline and write the output documents.
///
/// Produces `edge_frequencies.json`, `full_graph.json`, `full_graph.dot`,
/// `markov_blanket.json`, and `markov_blanket.dot` under `cfg.out`. Output
/// bytes are a pure function of the input file and config.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let pre = preprocess(cfg)?;
    let (table, summaries) = learn_frequencies(cfg, &pre.dataset)?;
    let freq_doc =
        EnsembleDocument::from_table(pre.dataset.variables(), &table, Some(provenance(cfg)))
            .map_err(|e| e.in_stage("learn"))?;
    let (averaged, full) = average_stage(cfg, &freq_doc)?;
    let mb = mb_stage(cfg, &full)?;

    let mut written = Vec::new();
    let outputs: [(&str, String); 5] = [
        ("edge_frequencies.json", freq_doc.to_json()?),
        ("full_graph.json", full.to_json()?),
        (
            "full_graph.dot",
            export_dot(&full, &cfg.palette).map_err(|e| e.in_stage("export"))?,
        ),
        ("markov_blanket.json", mb.to_json()?),
        (
            "markov_blanket.dot",
            export_dot(&mb, &cfg.palette).map_err(|e| e.in_stage("export"))?,
        ),
    ];
    for (name, text) in outputs {
        let path = cfg.out.join(name);
        write_atomic(&path, &text)?;
        written.push(path);
    }

    Ok(PipelineOutput {
        averaged,
        full_document: full,
        mb_document: mb,
        summaries,
        warnings: pre.warnings,
        written,
    })
}

/// Write-then-rename so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let wrap = |source: std::io::Error| Error::WriteFile {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(wrap)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents).map_err(wrap)?;
    std::fs::rename(&tmp, path).map_err(wrap)
}

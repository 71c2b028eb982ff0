//! Causal graph discovery for discrete observational data.
//!
//! The pipeline mirrors the usual score-based recipe: ingest a CSV, drop
//! irrelevant columns, discretize, compile tier-based prior knowledge into
//! forbidden edges, learn many graphs by hill-climbing over the BIC score
//! on bootstrap resamples, average them by edge frequency, and restrict
//! the result to the Markov blanket of the target variables.
//!
//! ```no_run
//! use cgforge::prelude::*;
//!
//! # fn main() -> cgforge::Result<()> {
//! let file = std::fs::File::open("data.csv")?;
//! let data = Dataset::load_csv(file, None)?;
//! let tiers = TierSpec::new(vec![1, 1, 2, 2, 3])?;
//! let constraints = tiers_to_constraints(&tiers);
//! let (table, _) = learn_ensemble(&data, &constraints, &EnsembleConfig::default())?;
//! let averaged = average_graph(&table, 0.9)?;
//! let blanket = averaged.dag.markov_blanket(4)?;
//! # let _ = blanket;
//! # Ok(())
//! # }
//! ```

pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod graph;
pub mod pipeline;
pub mod scoring;
pub mod search;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::dataset::{Dataset, DiscretizationRule, DiscretizeKind, Variable};
    pub use crate::ensemble::{
        average_graph, learn_ensemble, AveragedGraph, EdgeFrequencyTable, EnsembleConfig,
    };
    pub use crate::error::{Error, Result};
    pub use crate::graph::{Dag, Edge, Move, NodeSet};
    pub use crate::pipeline::{run_pipeline, GraphDocument, PipelineConfig};
    pub use crate::scoring::{delta_score, local_bic, total_bic, ScoreCache};
    pub use crate::search::{
        exhaustive_search, hill_climb, legal_moves, tiers_to_constraints, ConstraintSet,
        SearchConfig, SearchTrace, StartGraph, TierSpec,
    };
}

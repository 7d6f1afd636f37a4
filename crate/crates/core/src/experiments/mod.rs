//! Batch experiments: bias sweeps, the assortativity study and model
//! comparisons, plus the CSV/JSON files they produce.

mod report;
mod study;
mod sweep;

use thiserror::Error;

pub use report::{
    write_alpha_study, write_model_comparison, write_sweep, write_trials, OutputFormat,
};
pub use study::{alpha_study, ExperimentPlan, GraphRun, RewireRecord, RewireSettings, TargetSummary, AlphaStudy};
pub use sweep::{
    compare_model, optimal_interval, sweep_beta, BetaGrid, BetaPoint, ModelComparison, OptimalBeta,
    SweepConfig, SweepMeta, SweepResult,
};

use crate::generators::GeneratorError;
use crate::graph::GraphError;
use crate::reduced::ModelError;
use crate::rewire::RewireError;
use crate::walker::WalkError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Rewire(#[from] RewireError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error("bias grid is empty")]
    EmptyGrid,
    #[error("nothing to report")]
    EmptyResults,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

//! Experiment orchestration: suite registry, theorem pipelines,
//! sparse-domination sweeps, operator-norm probes and deterministic
//! CSV/JSON/SVG reporting.
//!
//! Everything here is `f64`-concrete. A fixed master seed makes every suite
//! bit-reproducible: per-trial generators derive their streams from the seed
//! and the trial index only.

mod config;
mod domination;
mod opnorm;
mod random;
mod report;
mod suites;
mod svg;
mod theorems;

pub use config::{DomainConfig, ExperimentConfig, FunctionDecl, OperatorConfig, Tolerances};
pub use domination::{domination_sweep, DominationKind};
pub use opnorm::estimate_operator_norm;
pub use random::{random_exponent_step, random_positive_step, random_step, trial_rng};
pub use report::{Report, ReportRow};
pub use suites::{run_suite, suite_ids};
pub use svg::render_series_plot;
pub use theorems::{theorem_ids, verify_theorem};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown id `{id}`; known: {known}")]
    UnknownId { id: String, known: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("inconsistent exponent relation: {0}")]
    ExponentRelation(String),
    #[error(transparent)]
    Expr(#[from] crate::expr::ExprError),
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
    #[error(transparent)]
    Exponent(#[from] crate::exponent::ExponentError),
    #[error(transparent)]
    Norm(#[from] crate::gphi::NormError),
    #[error(transparent)]
    Weight(#[from] crate::weights::WeightError),
    #[error(transparent)]
    Sparse(#[from] crate::sparse::SparseError),
    #[error(transparent)]
    Operator(#[from] crate::operators::OperatorError),
    #[error("i/o error: {0}")]
    Io(String),
}

//! Prediction-function inference for AR(1), ARMA(1,1), GARCH(1,1) and
//! threshold GARCH(1,1) models.
//!
//! The crate simulates the models, estimates their parameters, evaluates
//! truncated prediction functions ψ(X; θ) with exact derivatives, builds
//! delta-method confidence intervals under the two-independent-processes
//! and sample-split schemes, and checks coverage by Monte Carlo.

pub mod cli;
pub mod error;
pub mod estimate;
pub mod interval;
pub mod model;
pub mod optim;
pub mod predict;
pub mod stats;
pub mod toeplitz;
pub mod verify;

pub use error::{Error, Result};
pub use estimate::{estimate, EstimationResult};
pub use model::{
    simulate, stationarity_margin, validate_params, InnovationLaw, InnovationSpec, ModelKind,
    ParamVector, Series,
};
pub use interval::{make_split_plan, ConfidenceInterval, Scheme, SplitPlan};
pub use optim::{InitPolicy, OptimizerConfig};
pub use predict::{evaluate_prediction, prediction_gap, PredEval, TruncationSpec};
pub use verify::{run_coverage, run_coverage_with_jobs, CoverageReport, ExperimentConfig};

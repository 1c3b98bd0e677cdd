use thiserror::Error;

use crate::validate::ValidationReport;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid bounds and step must be finite")]
    NonFinite,
    #[error("grid step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("grid end {t_end} must exceed start {t0}")]
    EmptyHorizon { t0: f64, t_end: f64 },
    #[error("grid step {dt} leaves no whole step in span {span}")]
    StepTooLarge { dt: f64, span: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionError {
    #[error("{family} expects {expected} parameters, got {got}")]
    Arity {
        family: &'static str,
        expected: &'static str,
        got: usize,
    },
    #[error("non-finite parameter in {0}")]
    NonFinite(&'static str),
    #[error("tabulated knots must be strictly increasing")]
    UnsortedKnots,
    #[error("tabulated functions only support central-difference derivatives")]
    TabulatedAnalytic,
    #[error("{0} cannot be used with a finite-difference derivative step of zero")]
    Degenerate(&'static str),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("scenario invalid: {0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Function(#[from] FunctionError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SupplyDemandError {
    #[error("mean supply must be positive, got {0}")]
    NonPositiveSupply(f64),
    #[error("standard deviation must be non-negative and finite, got {0}")]
    BadSigma(f64),
    #[error("correlation {0} outside [-1, 0]")]
    BadCorrelation(f64),
    #[error("covariance matrix is not positive semidefinite")]
    NotPsd,
    #[error("density is singular at x = -1")]
    Singular,
    #[error("exact ratio density requires correlation -1, got {0}")]
    NotAnticorrelated(f64),
    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(f64),
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("scenario failed validation: {0}")]
    Invalid(ValidationReport),
    #[error("guard violated on path {path} at step {step} (t = {time}): {detail}")]
    Guard {
        path: usize,
        step: usize,
        time: f64,
        detail: &'static str,
    },
    #[error("non-finite state on path {path} at step {step} (t = {time})")]
    NonFinite { path: usize, step: usize, time: f64 },
    #[error("time {0} is not on the simulation grid")]
    OffGrid(f64),
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("{0} requires a constant sigma")]
    NonConstantSigma(&'static str),
    #[error("missing input: {0}")]
    MissingInput(&'static str),
    #[error("model {0} has no closed form for this quantity")]
    Unsupported(String),
    #[error(transparent)]
    Function(#[from] FunctionError),
}

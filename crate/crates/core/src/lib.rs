//! Supply/demand driven log-price SDEs, their analytic moments, and
//! verification that the limiting-volatility extremum precedes the peak of
//! the expected log price.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod coefficients;
pub mod error;
pub mod export;
pub mod extrema;
pub mod function;
pub mod grid;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod runner;
pub mod scenario;
pub mod sde;
pub mod stats;
pub mod supply_demand;
pub mod validate;

pub use analytic::{solve_curves, AnalyticCurves};
pub use error::{
    AnalyticError, FunctionError, GridError, ScenarioError, SimulationError, SupplyDemandError,
};
pub use extrema::{locate_extrema, ExtremaReport};
pub use function::{DerivativeMode, Family, FunctionSpec};
pub use grid::TimeGrid;
pub use scenario::{CoefficientForm, Model, Scenario, Sigma};
pub use sde::{simulate, PathEnsemble};
pub use validate::{validate_scenario, ValidationReport};

//! Fitting the convective parameters `h`, `T_c_side`, `T_c_top` to measured
//! mean top-surface traces.

mod nelder_mead;
mod problem;
mod response;
mod trace;

use thiserror::Error;

use crate::thermal::SolverError;

pub use nelder_mead::{minimize, Minimum, NelderMeadOptions};
pub use problem::{
    fit, sweep, validate, Bounds, CalibrationCase, CalibrationProblem, CostEntry, FitResult, Lattice,
    ValidationEntry, ValidationReport,
};
pub use response::{MeanBasis, ResponseModel, Temperatures, UnitResponses};
pub use trace::{cost, Envelope, ExperimentTrace};

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("invalid trace: {0}")]
    Trace(String),
    #[error("simulated and measured traces of '{id}' share no time range")]
    EmptyOverlap { id: String },
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("simulation failed at lattice point h = {h}: {source}")]
    Simulation {
        h: f64,
        #[source]
        source: SolverError,
    },
    #[error("every candidate failed: {}", .0.join("; "))]
    AllFailed(Vec<String>),
}

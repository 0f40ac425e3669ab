//! Transient heat conduction on voxel grids: trilinear hexahedral elements,
//! lumped capacity, heated-bed Dirichlet and two-zone Robin boundaries,
//! backward Euler in time.

mod cg;
mod element;
mod scenario;
mod sparse;
mod system;
mod transient;

use thiserror::Error;

pub use cg::{pcg, CgStats, ConstrainedOperator};
pub use element::{brick_conductivity, brick_lumped_capacity, face_mass, Integration};
pub use scenario::ThermalScenario;
pub use sparse::CsrMatrix;
pub use system::{
    assemble, assemble_with, assemble_with_source, build_system, build_system_with, Convection, Face, MaterialProperties, Materials,
    ThermalSystem,
};
pub use transient::{
    default_probes, run_transient, run_transient_with, steady_state, steady_state_of, steady_state_with,
    step,
    ProbeSeries, TemperatureField, TransientOptions, TransientResult, TransientSolver,
    STEADY_TOLERANCE, STEP_TOLERANCE,
};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {relative_residual:.3e})")]
    NotConverged { iterations: usize, relative_residual: f64 },
    #[error("conjugate gradients broke down after {iterations} iterations (relative residual {relative_residual:.3e})")]
    Breakdown { iterations: usize, relative_residual: f64 },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("invalid input: {0}")]
    Shape(String),
    #[error("at t = {time} s: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<SolverError>,
    },
}

impl SolverError {
    pub fn at_time(self, time: f64) -> Self {
        SolverError::AtTime {
            time,
            source: Box::new(self),
        }
    }
}

//! Configuration files, experiment and result CSVs, grid/field export, and the
//! run/compare/calibrate workflows the command-line tool drives.

mod compare;
mod config;
mod csvio;
mod geometry;
mod grid_file;
mod run;
mod vtk;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::calibration::CalibrationError;
use crate::mesostructure::MeshError;
use crate::thermal::SolverError;

pub use compare::{compare, pairwise, ComparisonReport, PairDeviation, Variant, VariantResult, DEFAULT_THRESHOLD_PCT};
pub use config::{
    emit_config, parse_config, parse_config_str, CalibrationConfig, GeometryConfig, OutputConfig, RunConfig,
    SolverConfig, VoidConfig,
};
pub use csvio::{
    ingest_experiment, read_cost_table, read_experiment, write_cost_table, write_probe_csv, write_probe_series,
};
pub use geometry::build_grid;
pub use grid_file::{read_grid, read_grid_from, write_grid, write_grid_to};
pub use run::{calibrate, calibration_problem, run_simulation, write_fit_report, CalibrationRun, SimulationSummary};
pub use vtk::{write_field_vtk, write_grid_vtk};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("{field} {constraint}")]
    Invalid { field: String, constraint: String },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<IoError>,
    },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

impl IoError {
    pub(crate) fn file(path: &Path, source: std::io::Error) -> Self {
        IoError::File {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn in_file(self, path: &Path) -> Self {
        match self {
            e @ (IoError::File { .. } | IoError::InFile { .. }) => e,
            e => IoError::InFile {
                path: path.to_path_buf(),
                source: Box::new(e),
            },
        }
    }
}

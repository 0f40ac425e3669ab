//! Voxel mesostructures of FFF-printed blocks: dense continuum, inter-filament
//! air voids, rectilinear/gyroid infill, and coarsened variants.

mod coarsen;
mod grid;
mod infill;
mod voids;

use thiserror::Error;

pub use coarsen::{coarsen, coarsen_by, coarsened_dims};
pub use grid::{build_continuum_grid, continuum_dims, FilamentSection, Material, VoxelGrid};
pub use infill::{
    build_infill_grid, build_infill_grid_with_interior, build_simplified_infill_grid, gyroid,
    interior_density, InfillPattern, InfillSpec, Interior, DEFAULT_GYROID_PERIOD, DENSITY_TOLERANCE,
};
pub use voids::{
    a_from_void_fraction, build_void_grid, cross_section_mask, fractions_from_measurement,
    void_fraction_from_a, SampleMeasurement, VoidGeometry, VolumeFractions, MEASUREMENT_TOLERANCE,
    VOID_FRACTION_TOLERANCE,
};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("extruded volume {extruded:.4} cm³ exceeds measured total volume {total:.4} cm³")]
    InconsistentMeasurement { extruded: f64, total: f64 },
    #[error("unresolved void geometry: {0}")]
    Unresolved(String),
    #[error("infill density {requested} unreachable on this raster, achieved {achieved:.4}")]
    DensityUnreachable { requested: f64, achieved: f64 },
}

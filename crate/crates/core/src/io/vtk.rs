//! Legacy VTK structured-points output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::IoError;
use crate::mesostructure::VoxelGrid;
use crate::thermal::TemperatureField;

fn header(out: &mut impl Write, title: &str, points: [usize; 3], origin: [f64; 3], spacing: [f64; 3]) -> std::io::Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{title}")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_POINTS")?;
    writeln!(out, "DIMENSIONS {} {} {}", points[0], points[1], points[2])?;
    writeln!(out, "ORIGIN {} {} {}", origin[0], origin[1], origin[2])?;
    writeln!(out, "SPACING {} {} {}", spacing[0], spacing[1], spacing[2])
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path).map(BufWriter::new).map_err(|e| IoError::file(path, e))
}

/// Cell labels as `CELL_DATA material` (0 = air, 1 = PLA). Lengths in mm.
pub fn write_grid_vtk(path: &Path, grid: &VoxelGrid) -> Result<(), IoError> {
    let mut out = create(path)?;
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        header(out, "voxel grid", grid.node_dims(), grid.origin(), grid.spacing())?;
        writeln!(out, "CELL_DATA {}", grid.cell_count())?;
        writeln!(out, "SCALARS material unsigned_char 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for row in grid.materials().chunks(grid.nx()) {
            let line: Vec<String> = row.iter().map(|m| m.code().to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| IoError::file(path, e))
}

/// Nodal temperatures (°C) as `POINT_DATA temperature`.
pub fn write_field_vtk(path: &Path, field: &TemperatureField) -> Result<(), IoError> {
    let mut out = create(path)?;
    let nx = field.node_dims()[0];
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        header(
            out,
            &format!("temperature at t = {} s", field.time()),
            field.node_dims(),
            field.origin(),
            field.spacing(),
        )?;
        writeln!(out, "POINT_DATA {}", field.values().len())?;
        writeln!(out, "SCALARS temperature double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for row in field.values().chunks(nx) {
            let line: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| IoError::file(path, e))
}

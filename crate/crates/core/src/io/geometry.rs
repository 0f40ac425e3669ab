use super::config::GeometryConfig;
use super::IoError;
use crate::mesostructure::{
    build_continuum_grid, build_infill_grid, build_simplified_infill_grid, build_void_grid, coarsen, coarsen_by,
    InfillPattern, VoidGeometry, VoxelGrid,
};

/// Grid for a geometry block.
///
/// Infill is re-rasterized on the coarse lattice rather than merged cell by
/// cell, since majority merging erases one-filament lines. Void grids merge
/// `coarsen × subdivision` sub-cells in y and z so that they land back on the
/// filament lattice.
pub fn build_grid(g: &GeometryConfig) -> Result<VoxelGrid, IoError> {
    let (l, w, h, f) = (g.length_mm, g.width_mm, g.height_mm, g.coarsen);
    if let Some(v) = &g.voids {
        let geom = VoidGeometry::new(v.a, g.filament)?;
        let grid = build_void_grid(&geom, l, w, h, v.subdivision)?;
        if f == 1 {
            return Ok(grid);
        }
        let s = if v.a == 0.0 { 1 } else { v.subdivision };
        return Ok(coarsen_by(&grid, [f, f * s, f * s])?);
    }
    match g.infill {
        Some(spec) if spec.pattern != InfillPattern::Dense => {
            if f == 1 {
                Ok(build_infill_grid(&spec, l, w, h, &g.filament)?)
            } else {
                Ok(build_simplified_infill_grid(&spec, l, w, h, &g.filament, f)?)
            }
        }
        _ => {
            let grid = build_continuum_grid(l, w, h, &g.filament)?;
            if f == 1 {
                Ok(grid)
            } else {
                Ok(coarsen(&grid, f)?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{RunConfig, VoidConfig};

    #[test]
    fn coarsened_void_grid_is_on_filament_lattice() {
        let mut c = RunConfig::block(4.95, 4.95, 2.0);
        c.geometry.voids = Some(VoidConfig { a: 0.16, subdivision: 8 });
        let fine = build_grid(&c.geometry).unwrap();
        assert_eq!(fine.dims(), [10, 80, 80]);
        c.geometry.coarsen = 5;
        let coarse = build_grid(&c.geometry).unwrap();
        assert_eq!(coarse.dims(), [2, 2, 2]);
        assert_eq!(coarse.pla_fraction(), 1.0);
    }

    #[test]
    fn dense_counts() {
        let mut c = RunConfig::block(30.0, 30.0, 20.0);
        assert_eq!(build_grid(&c.geometry).unwrap().cell_count(), 422_500);
        c.geometry.coarsen = 5;
        assert_eq!(build_grid(&c.geometry).unwrap().cell_count(), 3_380);
    }
}

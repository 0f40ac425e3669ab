//! Rectilinear and gyroid infill on a voxel lattice.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::coarsen::coarsened_dims;
use super::grid::{continuum_dims, FilamentSection, Material, VoxelGrid};
use super::MeshError;

/// Allowed gap between the requested and rasterized interior density.
pub const DENSITY_TOLERANCE: f64 = 0.03;

pub const DEFAULT_GYROID_PERIOD: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfillPattern {
    Rectilinear,
    Gyroid,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfillSpec {
    pub pattern: InfillPattern,
    pub density: f64,
    #[serde(default = "default_walls")]
    pub perimeter_walls: usize,
    #[serde(default)]
    pub solid_top_bottom_layers: usize,
    /// Period of the gyroid surface in mm.
    #[serde(default = "default_period", rename = "gyroid_period_mm")]
    pub gyroid_period: f64,
}

fn default_walls() -> usize {
    2
}

fn default_period() -> f64 {
    DEFAULT_GYROID_PERIOD
}

impl InfillSpec {
    pub fn new(pattern: InfillPattern, density: f64) -> Result<Self, MeshError> {
        let spec = Self {
            pattern,
            density,
            perimeter_walls: default_walls(),
            solid_top_bottom_layers: 0,
            gyroid_period: DEFAULT_GYROID_PERIOD,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dense() -> Self {
        Self {
            pattern: InfillPattern::Dense,
            density: 1.0,
            perimeter_walls: default_walls(),
            solid_top_bottom_layers: 0,
            gyroid_period: DEFAULT_GYROID_PERIOD,
        }
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(MeshError::Domain(format!(
                "infill density must lie in (0, 1], got {}",
                self.density
            )));
        }
        if self.pattern == InfillPattern::Dense && self.density != 1.0 {
            return Err(MeshError::Domain(format!(
                "dense infill requires density 1, got {}",
                self.density
            )));
        }
        if !(self.gyroid_period > 0.0 && self.gyroid_period.is_finite()) {
            return Err(MeshError::Domain(format!(
                "gyroid period must be > 0, got {}",
                self.gyroid_period
            )));
        }
        Ok(())
    }
}

/// Index box of the infill region (everything but walls and solid layers).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interior {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl Interior {
    pub fn new(dims: [usize; 3], walls: usize, solid_layers: usize) -> Option<Self> {
        let lo = [walls, walls, solid_layers];
        let hi = [
            dims[0].checked_sub(walls)?,
            dims[1].checked_sub(walls)?,
            dims[2].checked_sub(solid_layers)?,
        ];
        (0..3).all(|d| lo[d] < hi[d]).then_some(Self { lo, hi })
    }

    pub fn contains(&self, i: usize, j: usize, k: usize) -> bool {
        (self.lo[0]..self.hi[0]).contains(&i)
            && (self.lo[1]..self.hi[1]).contains(&j)
            && (self.lo[2]..self.hi[2]).contains(&k)
    }

    pub fn cell_count(&self) -> usize {
        (0..3).map(|d| self.hi[d] - self.lo[d]).product()
    }
}

/// PLA fraction of the infill region of `grid`.
pub fn interior_density(grid: &VoxelGrid, interior: &Interior) -> f64 {
    let mut pla = 0usize;
    for k in interior.lo[2]..interior.hi[2] {
        for j in interior.lo[1]..interior.hi[1] {
            for i in interior.lo[0]..interior.hi[0] {
                if grid.material_at(i, j, k) == Material::Pla {
                    pla += 1;
                }
            }
        }
    }
    pla as f64 / interior.cell_count() as f64
}

/// Gyroid level-set function with period `period`.
pub fn gyroid(x: f64, y: f64, z: f64, period: f64) -> f64 {
    let w = 2.0 * PI / period;
    let (sx, cx) = (w * x).sin_cos();
    let (sy, cy) = (w * y).sin_cos();
    let (sz, cz) = (w * z).sin_cos();
    sx * cy + sy * cz + sz * cx
}

// Raster line selection: position `m` carries a line when the running count
// `floor(m·d + phase)` steps up. Lines per layer come out as `n·d` within one.
fn raster_line(m: usize, density: f64, phase: f64) -> bool {
    ((m + 1) as f64 * density + phase).floor() > (m as f64 * density + phase).floor()
}

/// Rasterize `spec` on a lattice with the given wall and solid-layer
/// thicknesses (in cells).
fn rasterize(
    spec: &InfillSpec,
    dims: [usize; 3],
    spacing: [f64; 3],
    walls: usize,
    solid_layers: usize,
) -> Result<(VoxelGrid, Interior), MeshError> {
    spec.validate()?;
    let interior = Interior::new(dims, walls, solid_layers).ok_or_else(|| {
        MeshError::Domain(format!(
            "{walls} walls and {solid_layers} solid layers leave no infill region in a {dims:?} grid"
        ))
    })?;
    let mut grid = VoxelGrid::filled(dims, spacing, Material::Pla)?;
    if spec.pattern == InfillPattern::Dense || spec.density >= 1.0 {
        return Ok((grid, interior));
    }

    let mut material = grid.materials().to_vec();
    match spec.pattern {
        InfillPattern::Rectilinear => {
            for k in interior.lo[2]..interior.hi[2] {
                let along_x = k % 2 == 0;
                for j in interior.lo[1]..interior.hi[1] {
                    for i in interior.lo[0]..interior.hi[0] {
                        let on_line = if along_x {
                            raster_line(j - interior.lo[1], spec.density, 0.25)
                        } else {
                            raster_line(i - interior.lo[0], spec.density, 0.75)
                        };
                        if !on_line {
                            material[grid.cell_index(i, j, k)] = Material::Air;
                        }
                    }
                }
            }
        }
        InfillPattern::Gyroid => {
            let mut cells = Vec::with_capacity(interior.cell_count());
            for k in interior.lo[2]..interior.hi[2] {
                for j in interior.lo[1]..interior.hi[1] {
                    for i in interior.lo[0]..interior.hi[0] {
                        let [x, y, z] = grid.cell_center(i, j, k);
                        cells.push((grid.cell_index(i, j, k), gyroid(x, y, z, spec.gyroid_period).abs()));
                    }
                }
            }
            let n = cells.len() as f64;
            let fraction = |t: f64| cells.iter().filter(|c| c.1 <= t).count() as f64 / n;
            let (mut lo, mut hi) = (0.0_f64, 1.5_f64);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if fraction(mid) < spec.density {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = if (fraction(lo) - spec.density).abs() < (fraction(hi) - spec.density).abs() {
                lo
            } else {
                hi
            };
            for &(idx, v) in &cells {
                if v > t {
                    material[idx] = Material::Air;
                }
            }
        }
        InfillPattern::Dense => unreachable!(),
    }
    grid = VoxelGrid::new(dims, spacing, material)?;
    let achieved = interior_density(&grid, &interior);
    if (achieved - spec.density).abs() > DENSITY_TOLERANCE {
        return Err(MeshError::DensityUnreachable {
            requested: spec.density,
            achieved,
        });
    }
    Ok((grid, interior))
}

/// Infill block at filament resolution, with perimeter walls in x/y.
pub fn build_infill_grid(
    spec: &InfillSpec,
    length: f64,
    width: f64,
    height: f64,
    section: &FilamentSection,
) -> Result<VoxelGrid, MeshError> {
    build_infill_grid_with_interior(spec, length, width, height, section).map(|(g, _)| g)
}

pub fn build_infill_grid_with_interior(
    spec: &InfillSpec,
    length: f64,
    width: f64,
    height: f64,
    section: &FilamentSection,
) -> Result<(VoxelGrid, Interior), MeshError> {
    let dims = continuum_dims(length, width, height, section)?;
    let spacing = [length / dims[0] as f64, width / dims[1] as f64, height / dims[2] as f64];
    rasterize(spec, dims, spacing, spec.perimeter_walls, spec.solid_top_bottom_layers)
}

/// Infill re-rasterized on the `factor`-coarsened lattice.
///
/// Cell counts follow [`coarsen`](super::coarsen::coarsen). Walls and solid
/// layers keep the thickness the majority rule would give them
/// (`round(n / factor)` coarse cells, halves up), while the infill itself is
/// re-rasterized with one-cell lines so it keeps its density instead of being
/// averaged away.
pub fn build_simplified_infill_grid(
    spec: &InfillSpec,
    length: f64,
    width: f64,
    height: f64,
    section: &FilamentSection,
    factor: usize,
) -> Result<VoxelGrid, MeshError> {
    if factor == 0 {
        return Err(MeshError::Domain("coarsening factor must be >= 1".into()));
    }
    let fine = continuum_dims(length, width, height, section)?;
    let dims = coarsened_dims(fine, factor);
    let spacing = [length / dims[0] as f64, width / dims[1] as f64, height / dims[2] as f64];
    let majority = |n: usize| (2 * n + factor) / (2 * factor);
    let walls = majority(spec.perimeter_walls);
    let solid = majority(spec.solid_top_bottom_layers);
    rasterize(spec, dims, spacing, walls, solid).map(|(g, _)| g)
}

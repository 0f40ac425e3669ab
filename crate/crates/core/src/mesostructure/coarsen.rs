use super::grid::{Material, VoxelGrid};
use super::MeshError;

/// Cell counts after merging `factor` cells per axis (`ceil(n / factor)`).
pub fn coarsened_dims(dims: [usize; 3], factor: usize) -> [usize; 3] {
    dims.map(|n| n.div_ceil(factor))
}

/// Merge `factor³` blocks of cells into one coarse cell.
///
/// A coarse cell is PLA when at least half of the fine cells it covers are
/// PLA. Trailing blocks that cover fewer fine cells are judged on what they
/// cover. The bounding box is unchanged; spacings grow to fit.
pub fn coarsen(grid: &VoxelGrid, factor: usize) -> Result<VoxelGrid, MeshError> {
    if factor < 2 {
        return Err(MeshError::Domain(format!(
            "coarsening factor must be >= 2, got {factor}"
        )));
    }
    coarsen_by(grid, [factor; 3])
}

/// As [`coarsen`] with a separate factor per axis, e.g. to merge the
/// sub-cells of a void grid back onto its filament lattice.
pub fn coarsen_by(grid: &VoxelGrid, factors: [usize; 3]) -> Result<VoxelGrid, MeshError> {
    if factors.contains(&0) {
        return Err(MeshError::Domain(format!("coarsening factors must be >= 1, got {factors:?}")));
    }
    let fine = grid.dims();
    let dims: [usize; 3] = std::array::from_fn(|a| fine[a].div_ceil(factors[a]));
    let extent = grid.extent();
    let spacing = [
        extent[0] / dims[0] as f64,
        extent[1] / dims[1] as f64,
        extent[2] / dims[2] as f64,
    ];
    let [fx, fy, fz] = factors;

    let mut material = Vec::with_capacity(dims.iter().product());
    for kc in 0..dims[2] {
        let ks = kc * fz..((kc + 1) * fz).min(fine[2]);
        for jc in 0..dims[1] {
            let js = jc * fy..((jc + 1) * fy).min(fine[1]);
            for ic in 0..dims[0] {
                let is = ic * fx..((ic + 1) * fx).min(fine[0]);
                let (mut pla, mut total) = (0usize, 0usize);
                for k in ks.clone() {
                    for j in js.clone() {
                        for i in is.clone() {
                            total += 1;
                            if grid.material_at(i, j, k) == Material::Pla {
                                pla += 1;
                            }
                        }
                    }
                }
                material.push(if 2 * pla >= total {
                    Material::Pla
                } else {
                    Material::Air
                });
            }
        }
    }
    Ok(VoxelGrid::new(dims, spacing, material)?.with_origin(grid.origin()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesostructure::{build_continuum_grid, FilamentSection};

    #[test]
    fn table_mesh_counts() {
        let g = build_continuum_grid(30.0, 30.0, 20.0, &FilamentSection::default()).unwrap();
        let m2 = coarsen(&g, 2).unwrap();
        assert_eq!(m2.dims(), [33, 33, 50]);
        assert_eq!(m2.cell_count(), 54_450);
        let m3 = coarsen(&g, 5).unwrap();
        assert_eq!(m3.dims(), [13, 13, 20]);
        assert_eq!(m3.cell_count(), 3_380);
        assert_eq!(m3.count(Material::Pla), 3_380);
        for (a, b) in m2.extent().iter().zip(g.extent()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn majority_rule() {
        // 2x1x1 with one PLA, one AIR -> tie goes to PLA; 3x1x1 with one PLA -> AIR
        let g = VoxelGrid::new([2, 1, 1], [1.0; 3], vec![Material::Pla, Material::Air]).unwrap();
        assert_eq!(coarsen(&g, 2).unwrap().materials(), &[Material::Pla]);
        let g = VoxelGrid::new([3, 1, 1], [1.0; 3], vec![Material::Air, Material::Pla, Material::Air]).unwrap();
        assert_eq!(coarsen(&g, 3).unwrap().materials(), &[Material::Air]);
    }

    #[test]
    fn per_axis_factors() {
        let g = VoxelGrid::filled([4, 8, 8], [1.0, 0.25, 0.25], Material::Pla).unwrap();
        let c = coarsen_by(&g, [2, 8, 8]).unwrap();
        assert_eq!(c.dims(), [2, 1, 1]);
        assert_eq!(c.spacing(), [2.0, 2.0, 2.0]);
        assert!(coarsen_by(&g, [0, 1, 1]).is_err());
        assert_eq!(coarsen_by(&g, [1, 1, 1]).unwrap(), g);
    }

    #[test]
    fn factor_one_rejected() {
        let g = VoxelGrid::filled([2, 2, 2], [1.0; 3], Material::Pla).unwrap();
        assert!(coarsen(&g, 1).is_err());
    }
}

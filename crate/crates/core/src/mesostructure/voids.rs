//! Diamond-shaped inter-filament air voids.
//!
//! Each filament cross-section `w × h_l` carries a quarter diamond at each of
//! its four corners. A quarter is a right triangle with legs `a·w` and `a·h_l`,
//! so the void area fraction is `2a²`.

use serde::{Deserialize, Serialize};

use super::grid::{build_continuum_grid, FilamentSection, Material, VoxelGrid};
use super::MeshError;

/// Relative slack allowed when the extruded volume `m/ρ` exceeds the
/// caliper-measured total volume.
pub const MEASUREMENT_TOLERANCE: f64 = 1e-3;

/// Largest admissible deviation between the voxelized and nominal void fraction.
pub const VOID_FRACTION_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoidGeometry {
    /// Void parameter, `0 ≤ a < 1/√2`.
    pub a: f64,
    #[serde(default)]
    pub section: FilamentSection,
}

impl VoidGeometry {
    pub fn new(a: f64, section: FilamentSection) -> Result<Self, MeshError> {
        check_a(a)?;
        section.validate()?;
        Ok(Self { a, section })
    }

    pub fn void_fraction(&self) -> f64 {
        2.0 * self.a * self.a
    }
}

fn check_a(a: f64) -> Result<(), MeshError> {
    if !(a >= 0.0 && a < std::f64::consts::FRAC_1_SQRT_2) {
        return Err(MeshError::Domain(format!(
            "void parameter a must lie in [0, 1/sqrt(2)), got {a}"
        )));
    }
    Ok(())
}

/// Air area fraction of a filament cross-section, `2a²`.
pub fn void_fraction_from_a(a: f64) -> Result<f64, MeshError> {
    check_a(a)?;
    Ok(2.0 * a * a)
}

/// Inverse of [`void_fraction_from_a`].
pub fn a_from_void_fraction(fraction: f64) -> Result<f64, MeshError> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(MeshError::Domain(format!(
            "void fraction must lie in [0, 1), got {fraction}"
        )));
    }
    Ok((fraction / 2.0).sqrt())
}

/// Weighed and caliper-measured printed sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMeasurement {
    /// g
    pub mass: f64,
    /// cm³
    pub total_volume: f64,
    /// g/cm³
    pub density: f64,
    pub extrusion_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeFractions {
    /// Extruded volume `m/ρ` in cm³.
    pub extruded_volume: f64,
    pub filament_fraction: f64,
    pub air_fraction: f64,
    pub a: f64,
}

pub fn fractions_from_measurement(s: &SampleMeasurement) -> Result<VolumeFractions, MeshError> {
    for (name, v) in [
        ("mass", s.mass),
        ("total_volume", s.total_volume),
        ("density", s.density),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(MeshError::Domain(format!("{name} must be > 0, got {v}")));
        }
    }
    let extruded_volume = s.mass / s.density;
    if extruded_volume > s.total_volume * (1.0 + MEASUREMENT_TOLERANCE) {
        return Err(MeshError::InconsistentMeasurement {
            extruded: extruded_volume,
            total: s.total_volume,
        });
    }
    let filament_fraction = extruded_volume / s.total_volume;
    let air_fraction = (1.0 - filament_fraction).max(0.0);
    let a = (air_fraction / 2.0).sqrt();
    Ok(VolumeFractions {
        extruded_volume,
        filament_fraction: filament_fraction.min(1.0),
        air_fraction,
        a,
    })
}

/// Air mask of one subdivided cross-section, indexed `[sy + s * sz]`.
///
/// Sub-cells are ranked by how much of them the four corner triangles cover,
/// and the `round(2a²s²)` best covered become air. This keeps the air area
/// as close to `2a²` as the subdivision allows.
pub fn cross_section_mask(a: f64, subdivision: usize) -> Vec<bool> {
    let s = subdivision;
    const SAMPLES: usize = 16;
    let in_void = |u: f64, v: f64| {
        u + v <= a || (1.0 - u) + v <= a || u + (1.0 - v) <= a || (1.0 - u) + (1.0 - v) <= a
    };
    let mut coverage: Vec<(usize, usize)> = (0..s * s)
        .map(|idx| {
            let (sy, sz) = (idx % s, idx / s);
            let mut hits = 0;
            for p in 0..SAMPLES {
                for q in 0..SAMPLES {
                    let u = (sy as f64 + (p as f64 + 0.5) / SAMPLES as f64) / s as f64;
                    let v = (sz as f64 + (q as f64 + 0.5) / SAMPLES as f64) / s as f64;
                    if in_void(u, v) {
                        hits += 1;
                    }
                }
            }
            (idx, hits)
        })
        .collect();
    coverage.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    let target = (2.0 * a * a * (s * s) as f64).round() as usize;
    let mut mask = vec![false; s * s];
    for &(idx, _) in coverage.iter().take(target) {
        mask[idx] = true;
    }
    mask
}

/// Continuum grid whose filament cells are each split `subdivision×` in y and
/// z, with corner sub-cells labeled air. Filaments run along x.
pub fn build_void_grid(
    geom: &VoidGeometry,
    length: f64,
    width: f64,
    height: f64,
    subdivision: usize,
) -> Result<VoxelGrid, MeshError> {
    check_a(geom.a)?;
    if subdivision < 4 || subdivision % 2 != 0 {
        return Err(MeshError::Domain(format!(
            "subdivision must be even and >= 4, got {subdivision}"
        )));
    }
    let base = build_continuum_grid(length, width, height, &geom.section)?;
    if geom.a == 0.0 {
        return Ok(base);
    }
    let s = subdivision;
    if geom.a * (s as f64) < 1.0 {
        return Err(MeshError::Unresolved(format!(
            "subdivision {s} cannot resolve a = {} (a * subdivision < 1)",
            geom.a
        )));
    }
    let mask = cross_section_mask(geom.a, s);
    let achieved = mask.iter().filter(|&&m| m).count() as f64 / (s * s) as f64;
    if (achieved - geom.void_fraction()).abs() > VOID_FRACTION_TOLERANCE {
        return Err(MeshError::Unresolved(format!(
            "subdivision {s} gives void fraction {achieved:.4}, nominal {:.4}",
            geom.void_fraction()
        )));
    }

    let [nx, ny, nz] = base.dims();
    let [dx, dy, dz] = base.spacing();
    let dims = [nx, ny * s, nz * s];
    let mut material = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
    for kk in 0..dims[2] {
        let sz = kk % s;
        for jj in 0..dims[1] {
            let sy = jj % s;
            let m = if mask[sy + s * sz] {
                Material::Air
            } else {
                Material::Pla
            };
            material.extend(std::iter::repeat_n(m, nx));
        }
    }
    VoxelGrid::new(dims, [dx, dy / s as f64, dz / s as f64], material)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round2(x: f64) -> f64 {
        (x * 100.0).round() / 100.0
    }

    #[test]
    fn fraction_from_a_table_rows() {
        assert!((void_fraction_from_a(0.16).unwrap() - 0.0512).abs() < 1e-15);
        assert_eq!(round2(void_fraction_from_a(0.16).unwrap()), 0.05);
        assert!((void_fraction_from_a(0.07).unwrap() - 0.0098).abs() < 1e-15);
        assert_eq!(round2(void_fraction_from_a(0.07).unwrap()), 0.01);
        assert_eq!(void_fraction_from_a(0.0).unwrap(), 0.0);
        assert!(void_fraction_from_a(0.75).is_err());
        assert!(void_fraction_from_a(-0.1).is_err());
    }

    #[test]
    fn measurement_inversion() {
        let ef10 = SampleMeasurement {
            mass: 2.10,
            total_volume: 1.78,
            density: 1.24,
            extrusion_factor: 1.0,
        };
        let f = fractions_from_measurement(&ef10).unwrap();
        assert_eq!(round2(f.extruded_volume), 1.69);
        assert_eq!(round2(f.filament_fraction), 0.95);
        assert_eq!(round2(f.air_fraction), 0.05);
        assert_eq!(round2(f.a), 0.16);

        let ef11 = SampleMeasurement {
            mass: 2.32,
            total_volume: 1.89,
            ..ef10
        };
        let f = fractions_from_measurement(&ef11).unwrap();
        assert_eq!(round2(f.extruded_volume), 1.87);
        assert_eq!(round2(f.filament_fraction), 0.99);
        assert_eq!(round2(f.air_fraction), 0.01);
        assert_eq!(round2(f.a), 0.07);
    }

    #[test]
    fn fully_dense_and_inconsistent() {
        let dense = SampleMeasurement {
            mass: 1.24 * 1.5,
            total_volume: 1.5,
            density: 1.24,
            extrusion_factor: 1.0,
        };
        let f = fractions_from_measurement(&dense).unwrap();
        assert_eq!(f.air_fraction, 0.0);
        assert_eq!(f.a, 0.0);

        let slightly_over = SampleMeasurement {
            mass: 1.24 * 1.5 * 1.0005,
            ..dense
        };
        assert_eq!(fractions_from_measurement(&slightly_over).unwrap().a, 0.0);

        let heavy = SampleMeasurement {
            mass: 2.5,
            ..dense
        };
        assert!(matches!(
            fractions_from_measurement(&heavy),
            Err(MeshError::InconsistentMeasurement { .. })
        ));
    }

    #[test]
    fn void_grid_fractions() {
        let s = FilamentSection::default();
        let g = build_void_grid(&VoidGeometry::new(0.16, s).unwrap(), 2.0, 2.0, 0.4, 8).unwrap();
        let f = g.air_fraction();
        assert!((0.041..=0.061).contains(&f), "{f}");
        assert!((f - 0.0512).abs() <= 0.01);

        let g = build_void_grid(&VoidGeometry::new(0.07, s).unwrap(), 2.0, 2.0, 0.4, 16).unwrap();
        let f = g.air_fraction();
        assert!((0.005..=0.015).contains(&f), "{f}");
    }

    #[test]
    fn void_grid_shape_and_a_zero() {
        let s = FilamentSection::default();
        let cont = build_continuum_grid(3.0, 3.0, 1.0, &s).unwrap();
        let g = build_void_grid(&VoidGeometry::new(0.16, s).unwrap(), 3.0, 3.0, 1.0, 8).unwrap();
        assert_eq!(g.dims(), [cont.nx(), cont.ny() * 8, cont.nz() * 8]);
        for (a, b) in g.extent().iter().zip(cont.extent()) {
            assert!((a - b).abs() < 1e-12);
        }
        let zero = build_void_grid(&VoidGeometry::new(0.0, s).unwrap(), 3.0, 3.0, 1.0, 8).unwrap();
        assert_eq!(zero, cont);
    }

    #[test]
    fn void_grid_errors() {
        let s = FilamentSection::default();
        let g = VoidGeometry::new(0.16, s).unwrap();
        assert!(build_void_grid(&g, 3.0, 3.0, 1.0, 4).is_err());
        assert!(build_void_grid(&g, 3.0, 3.0, 1.0, 6 + 1).is_err());
        assert!(build_void_grid(&g, 3.0, 3.0, 1.0, 2).is_err());
    }

    #[test]
    fn corner_voids_touch_corners() {
        let mask = cross_section_mask(0.36, 8);
        assert!(mask[0]);
        // centre of the section is filament
        assert!(!mask[4 + 8 * 4]);
    }
}

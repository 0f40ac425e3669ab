use serde::{Deserialize, Serialize};

use super::MeshError;

/// Cell material label. The discriminants are the on-disk codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum Material {
    Air = 0,
    Pla = 1,
}

impl Material {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Material::Air),
            1 => Some(Material::Pla),
            _ => None,
        }
    }
}

/// Cross-section of a single extruded filament, in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilamentSection {
    /// Extrusion width.
    #[serde(rename = "width_mm")]
    pub width: f64,
    /// Layer height.
    #[serde(rename = "layer_height_mm")]
    pub layer_height: f64,
}

impl Default for FilamentSection {
    fn default() -> Self {
        Self {
            width: 0.45,
            layer_height: 0.2,
        }
    }
}

impl FilamentSection {
    pub fn new(width: f64, layer_height: f64) -> Result<Self, MeshError> {
        let section = Self {
            width,
            layer_height,
        };
        section.validate()?;
        Ok(section)
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(MeshError::Domain(format!(
                "filament width must be > 0, got {}",
                self.width
            )));
        }
        if !(self.layer_height > 0.0 && self.layer_height.is_finite()) {
            return Err(MeshError::Domain(format!(
                "layer height must be > 0, got {}",
                self.layer_height
            )));
        }
        Ok(())
    }
}

/// Structured hexahedral grid with one material label per cell.
///
/// Cells are stored x-fastest, then y, then z. The plane `z = 0` is the bed
/// contact face; the remaining five faces of the bounding box form the free
/// surface (four sides and the top). Lengths are in millimetres.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    material: Vec<Material>,
}

impl VoxelGrid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], material: Vec<Material>) -> Result<Self, MeshError> {
        if dims.iter().any(|&n| n == 0) {
            return Err(MeshError::Domain(format!("cell counts must be >= 1, got {dims:?}")));
        }
        if spacing.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(MeshError::Domain(format!("spacings must be > 0, got {spacing:?}")));
        }
        let expected = dims[0] * dims[1] * dims[2];
        if material.len() != expected {
            return Err(MeshError::Domain(format!(
                "material field has {} cells, expected {expected}",
                material.len()
            )));
        }
        Ok(Self {
            dims,
            spacing,
            origin: [0.0; 3],
            material,
        })
    }

    pub fn filled(dims: [usize; 3], spacing: [f64; 3], fill: Material) -> Result<Self, MeshError> {
        let n = dims.iter().product();
        Self::new(dims, spacing, vec![fill; n])
    }

    pub fn with_origin(mut self, origin: [f64; 3]) -> Self {
        self.origin = origin;
        self
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn nx(&self) -> usize {
        self.dims[0]
    }

    pub fn ny(&self) -> usize {
        self.dims[1]
    }

    pub fn nz(&self) -> usize {
        self.dims[2]
    }

    /// Cell edge lengths in mm.
    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    /// Position of the bed-contact corner in mm.
    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    /// Physical size of the bounding box in mm.
    pub fn extent(&self) -> [f64; 3] {
        [
            self.dims[0] as f64 * self.spacing[0],
            self.dims[1] as f64 * self.spacing[1],
            self.dims[2] as f64 * self.spacing[2],
        ]
    }

    pub fn cell_count(&self) -> usize {
        self.material.len()
    }

    /// Cell volume in mm³.
    pub fn cell_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    pub fn node_dims(&self) -> [usize; 3] {
        [self.dims[0] + 1, self.dims[1] + 1, self.dims[2] + 1]
    }

    pub fn node_count(&self) -> usize {
        let [a, b, c] = self.node_dims();
        a * b * c
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _] = self.node_dims();
        i + nx * (j + ny * k)
    }

    #[inline]
    pub fn material_at(&self, i: usize, j: usize, k: usize) -> Material {
        self.material[self.cell_index(i, j, k)]
    }

    pub fn materials(&self) -> &[Material] {
        &self.material
    }

    pub fn count(&self, material: Material) -> usize {
        self.material.iter().filter(|&&m| m == material).count()
    }

    pub fn pla_fraction(&self) -> f64 {
        self.count(Material::Pla) as f64 / self.cell_count() as f64
    }

    pub fn air_fraction(&self) -> f64 {
        1.0 - self.pla_fraction()
    }

    /// Centre of cell `(i, j, k)` in mm.
    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.spacing[0],
            self.origin[1] + (j as f64 + 0.5) * self.spacing[1],
            self.origin[2] + (k as f64 + 0.5) * self.spacing[2],
        ]
    }
}

/// Cell counts for a continuum mesh of a `length × width × height` block.
///
/// In-plane, mesh nodes sit on the centerlines of the filaments that fit in
/// the footprint, so the count is one less than the number of filaments (a
/// lone filament still gets one cell). Vertically there is one cell per layer.
pub fn continuum_dims(length: f64, width: f64, height: f64, section: &FilamentSection) -> Result<[usize; 3], MeshError> {
    section.validate()?;
    for (name, v) in [("length", length), ("width", width), ("height", height)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(MeshError::Domain(format!("{name} must be > 0, got {v}")));
        }
    }
    let in_plane = |extent: f64, name: &str| -> Result<usize, MeshError> {
        let filaments = (extent / section.width + 1e-9).floor() as usize;
        if filaments == 0 {
            return Err(MeshError::Domain(format!(
                "{name} {extent} mm holds no {} mm filament",
                section.width
            )));
        }
        Ok((filaments - 1).max(1))
    };
    let nx = in_plane(length, "length")?;
    let ny = in_plane(width, "width")?;
    let nz = (height / section.layer_height).round() as usize;
    if nz == 0 {
        return Err(MeshError::Domain(format!(
            "height {height} mm holds no {} mm layer",
            section.layer_height
        )));
    }
    Ok([nx, ny, nz])
}

/// Dense all-PLA grid with one cell per filament cross-section.
pub fn build_continuum_grid(length: f64, width: f64, height: f64, section: &FilamentSection) -> Result<VoxelGrid, MeshError> {
    let dims = continuum_dims(length, width, height, section)?;
    let spacing = [
        length / dims[0] as f64,
        width / dims[1] as f64,
        height / dims[2] as f64,
    ];
    VoxelGrid::filled(dims, spacing, Material::Pla)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_block_counts() {
        let g = build_continuum_grid(30.0, 30.0, 20.0, &FilamentSection::default()).unwrap();
        assert_eq!(g.dims(), [65, 65, 100]);
        assert_eq!(g.cell_count(), 422_500);
        assert_eq!(g.count(Material::Pla), 422_500);
        let e = g.extent();
        assert!((e[0] - 30.0).abs() < 1e-12 && (e[2] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn thin_plate_counts() {
        let g = build_continuum_grid(30.0, 30.0, 2.0, &FilamentSection::default()).unwrap();
        assert_eq!(g.dims(), [65, 65, 10]);
    }

    #[test]
    fn single_cell() {
        let g = build_continuum_grid(0.45, 0.45, 0.2, &FilamentSection::default()).unwrap();
        assert_eq!(g.dims(), [1, 1, 1]);
        assert!((g.cell_volume() - 0.45 * 0.45 * 0.2).abs() < 1e-15);
    }

    #[test]
    fn too_small_is_rejected() {
        let s = FilamentSection::default();
        assert!(build_continuum_grid(0.3, 1.0, 1.0, &s).is_err());
        assert!(build_continuum_grid(1.0, 1.0, 0.05, &s).is_err());
        assert!(build_continuum_grid(-1.0, 1.0, 1.0, &s).is_err());
        assert!(FilamentSection::new(0.0, 0.2).is_err());
    }

    #[test]
    fn material_codes() {
        assert_eq!(Material::from_code(Material::Pla.code()), Some(Material::Pla));
        assert_eq!(Material::from_code(0), Some(Material::Air));
        assert_eq!(Material::from_code(7), None);
    }
}

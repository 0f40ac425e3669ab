//! Compact binary grid dump: `nx ny nz` as little-endian u64, `dx dy dz` as
//! little-endian f64 (mm), then one material code per cell.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::IoError;
use crate::mesostructure::{Material, VoxelGrid};

const HEADER_BYTES: usize = 48;

pub fn write_grid_to(mut out: impl Write, grid: &VoxelGrid) -> std::io::Result<()> {
    for n in grid.dims() {
        out.write_all(&(n as u64).to_le_bytes())?;
    }
    for d in grid.spacing() {
        out.write_all(&d.to_le_bytes())?;
    }
    let codes: Vec<u8> = grid.materials().iter().map(|m| m.code()).collect();
    out.write_all(&codes)?;
    out.flush()
}

pub fn read_grid_from(mut input: impl Read) -> Result<VoxelGrid, IoError> {
    let mut head = [0u8; HEADER_BYTES];
    input
        .read_exact(&mut head)
        .map_err(|_| IoError::Format("grid file shorter than its 48-byte header".into()))?;
    let word = |i: usize| <[u8; 8]>::try_from(&head[8 * i..8 * i + 8]).expect("8 bytes");
    let dims = [0, 1, 2].map(|i| u64::from_le_bytes(word(i)) as usize);
    let spacing = [3, 4, 5].map(|i| f64::from_le_bytes(word(i)));
    let cells = dims
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| IoError::Format(format!("grid dimensions {dims:?} overflow")))?;
    let mut codes = Vec::new();
    input
        .read_to_end(&mut codes)
        .map_err(|e| IoError::Format(e.to_string()))?;
    if codes.len() != cells {
        return Err(IoError::Format(format!(
            "grid {dims:?} needs {cells} cell bytes, file has {}",
            codes.len()
        )));
    }
    let material = codes
        .iter()
        .enumerate()
        .map(|(i, &c)| Material::from_code(c).ok_or_else(|| IoError::Format(format!("cell {i}: unknown material code {c}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VoxelGrid::new(dims, spacing, material)?)
}

pub fn write_grid(path: &Path, grid: &VoxelGrid) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| IoError::file(path, e))?;
    write_grid_to(BufWriter::new(file), grid).map_err(|e| IoError::file(path, e))
}

pub fn read_grid(path: &Path) -> Result<VoxelGrid, IoError> {
    let file = File::open(path).map_err(|e| IoError::file(path, e))?;
    read_grid_from(BufReader::new(file)).map_err(|e| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let cells: Vec<Material> = (0..30).map(|i| if i % 7 == 0 { Material::Air } else { Material::Pla }).collect();
        let g = VoxelGrid::new([5, 3, 2], [0.45, 0.45 / 8.0, 0.2], cells).unwrap();
        let mut buf = Vec::new();
        write_grid_to(&mut buf, &g).unwrap();
        assert_eq!(buf.len(), HEADER_BYTES + 30);
        assert_eq!(read_grid_from(buf.as_slice()).unwrap(), g);
    }

    #[test]
    fn rejects_truncated_and_bad_codes() {
        let g = VoxelGrid::filled([2, 2, 2], [1.0; 3], Material::Pla).unwrap();
        let mut buf = Vec::new();
        write_grid_to(&mut buf, &g).unwrap();
        assert!(read_grid_from(&buf[..buf.len() - 1]).is_err());
        assert!(read_grid_from(&buf[..20]).is_err());
        let last = buf.len() - 1;
        buf[last] = 9;
        assert!(read_grid_from(buf.as_slice()).is_err());
    }
}

//! The shared binary array format.
//!
//! Layout (all integers little-endian):
//!   magic   4 bytes  b"GSFB"
//!   version 1 byte   (1)
//!   endian  1 byte   b'L' (little-endian mandated)
//!   dtype   1 byte   0 = f64 real, 1 = complex128 interleaved (re, im)
//!   dim     1 byte
//!   ncomp   u32
//!   shape   dim × u64
//!   origin  dim × f64
//!   step    dim × f64
//!   data    ncomp × prod(shape) values, component-major, row-major C order

use crate::error::{Error, Result};
use crate::grid::{Grid, VectorField};
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"GSFB";
const VERSION: u8 = 1;

fn write_header(
    w: &mut impl Write,
    dtype: u8,
    grid: &Grid,
    ncomp: u32,
) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION, b'L', dtype, grid.dim() as u8])?;
    w.write_all(&ncomp.to_le_bytes())?;
    for &s in &grid.shape {
        w.write_all(&(s as u64).to_le_bytes())?;
    }
    for &o in &grid.origin {
        w.write_all(&o.to_le_bytes())?;
    }
    for &s in &grid.step {
        w.write_all(&s.to_le_bytes())?;
    }
    Ok(())
}

fn read_header(r: &mut impl Read) -> Result<(u8, Grid, u32)> {
    let mut head = [0u8; 8];
    r.read_exact(&mut head)?;
    if &head[..4] != MAGIC {
        return Err(Error::config("not a gapsol binary field (bad magic)"));
    }
    if head[4] != VERSION {
        return Err(Error::config(format!("unsupported version {}", head[4])));
    }
    if head[5] != b'L' {
        return Err(Error::config("only little-endian files are supported"));
    }
    let dtype = head[6];
    let dim = head[7] as usize;
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    let ncomp = u32::from_le_bytes(buf4);
    let mut shape = Vec::with_capacity(dim);
    let mut buf8 = [0u8; 8];
    for _ in 0..dim {
        r.read_exact(&mut buf8)?;
        shape.push(u64::from_le_bytes(buf8) as usize);
    }
    let mut origin = Vec::with_capacity(dim);
    for _ in 0..dim {
        r.read_exact(&mut buf8)?;
        origin.push(f64::from_le_bytes(buf8));
    }
    let mut step = Vec::with_capacity(dim);
    for _ in 0..dim {
        r.read_exact(&mut buf8)?;
        step.push(f64::from_le_bytes(buf8));
    }
    Ok((dtype, Grid::new(shape, origin, step), ncomp))
}

/// Write a complex multi-component field.
pub fn write_vector_field(path: &Path, field: &VectorField) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut w, 1, &field.grid, field.ncomp() as u32)?;
    for comp in &field.components {
        for v in comp {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Read a complex multi-component field.
pub fn read_vector_field(path: &Path) -> Result<VectorField> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let (dtype, grid, ncomp) = read_header(&mut r)?;
    if dtype != 1 {
        return Err(Error::config("expected a complex field file"));
    }
    let len = grid.len();
    let mut components = Vec::with_capacity(ncomp as usize);
    let mut buf8 = [0u8; 8];
    for _ in 0..ncomp {
        let mut comp = Vec::with_capacity(len);
        for _ in 0..len {
            r.read_exact(&mut buf8)?;
            let re = f64::from_le_bytes(buf8);
            r.read_exact(&mut buf8)?;
            let im = f64::from_le_bytes(buf8);
            comp.push(Complex64::new(re, im));
        }
        components.push(comp);
    }
    VectorField::from_components(grid, components)
}

/// Write a real scalar field (dtype 0, one component).
pub fn write_real_field(path: &Path, grid: &Grid, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::config("value count does not match the grid"));
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut w, 0, grid, 1)?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Read a real scalar field.
pub fn read_real_field(path: &Path) -> Result<(Grid, Vec<f64>)> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let (dtype, grid, ncomp) = read_header(&mut r)?;
    if dtype != 0 || ncomp != 1 {
        return Err(Error::config("expected a single-component real field file"));
    }
    let len = grid.len();
    let mut values = Vec::with_capacity(len);
    let mut buf8 = [0u8; 8];
    for _ in 0..len {
        r.read_exact(&mut buf8)?;
        values.push(f64::from_le_bytes(buf8));
    }
    Ok((grid, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_field_round_trip() {
        let dir = std::env::temp_dir().join("gapsol_bin_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.gsfb");
        let grid = Grid::new(vec![4, 6], vec![-1.0, 0.5], vec![0.25, 0.125]);
        let mut f = VectorField::zeros(grid, 3);
        for (j, c) in f.components.iter_mut().enumerate() {
            for (i, v) in c.iter_mut().enumerate() {
                *v = Complex64::new(i as f64 + j as f64, -(i as f64) * 0.5);
            }
        }
        write_vector_field(&path, &f).unwrap();
        let g = read_vector_field(&path).unwrap();
        assert!(f.grid.same_layout(&g.grid));
        for (a, b) in f.components.iter().zip(&g.components) {
            assert_eq!(a, b);
        }
        std::fs::remove_file(path).unwrap();
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = std::env::temp_dir().join("gapsol_bin_test2");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.gsfb");
        std::fs::write(&path, b"not a field at all").unwrap();
        assert!(read_vector_field(&path).is_err());
        std::fs::remove_file(path).unwrap();
    }
}

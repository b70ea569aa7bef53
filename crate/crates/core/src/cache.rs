//! Binary caches for velocity-grid tables and assembled operators, keyed by
//! the grid parameters. Format: magic + parameters + flat little-endian
//! 64-bit float arrays.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use crate::velocity::{build_grid, VelocityGrid};
use crate::{Error, Result};

const GRID_MAGIC: &[u8; 8] = b"HSGRD001";
const OP_MAGIC: &[u8; 8] = b"HSOPL001";

/// Cache directory: the environment override or a local default.
pub fn cache_dir() -> PathBuf {
    std::env::var_os("HARDSPHERE_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".hardsphere-cache"))
}

fn key(r: f64, n_v: usize, n_angular: usize) -> String {
    format!("r{r:.6}_nv{n_v}_na{n_angular}")
}

pub fn grid_cache_path(dir: &Path, r: f64, n_v: usize, n_angular: usize) -> PathBuf {
    dir.join(format!("grid_{}.bin", key(r, n_v, n_angular)))
}

pub fn operator_cache_path(dir: &Path, r: f64, n_v: usize, n_angular: usize) -> PathBuf {
    dir.join(format!("op_{}.bin", key(r, n_v, n_angular)))
}

fn write_f64s(w: &mut impl Write, xs: &[f64]) -> Result<()> {
    for x in xs {
        w.write_f64::<LittleEndian>(*x)?;
    }
    Ok(())
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(r.read_f64::<LittleEndian>()?);
    }
    Ok(out)
}

/// Persist the expensive grid tables (nu and the orthonormal basis).
pub fn write_grid_cache(grid: &VelocityGrid, n_angular: usize, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(GRID_MAGIC)?;
    w.write_f64::<LittleEndian>(grid.r)?;
    w.write_u32::<LittleEndian>(grid.n_v as u32)?;
    w.write_u32::<LittleEndian>(n_angular as u32)?;
    write_f64s(&mut w, &grid.maxw.nu)?;
    for e in &grid.null.vectors {
        write_f64s(&mut w, e)?;
    }
    w.write_f64::<LittleEndian>(grid.null.gram_condition)?;
    Ok(())
}

/// Load a grid through the cache: rebuild the lattice cheaply and reuse the
/// cached collision-frequency table when the file matches.
pub fn load_grid_cached(r: f64, n_v: usize, n_angular: usize, dir: &Path) -> Result<Arc<VelocityGrid>> {
    let path = grid_cache_path(dir, r, n_v, n_angular);
    if path.exists() {
        if let Ok(grid) = read_grid_cache(&path, r, n_v, n_angular) {
            return Ok(Arc::new(grid));
        }
    }
    let grid = build_grid(r, n_v, n_angular)?;
    let _ = write_grid_cache(&grid, n_angular, &path);
    Ok(Arc::new(grid))
}

fn read_grid_cache(path: &Path, r: f64, n_v: usize, n_angular: usize) -> Result<VelocityGrid> {
    let mut rd = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    rd.read_exact(&mut magic)?;
    if &magic != GRID_MAGIC {
        return Err(Error::Format("not a grid cache".into()));
    }
    let r_file = rd.read_f64::<LittleEndian>()?;
    let n_v_file = rd.read_u32::<LittleEndian>()? as usize;
    let n_a_file = rd.read_u32::<LittleEndian>()? as usize;
    if (r_file - r).abs() > 1e-12 || n_v_file != n_v || n_a_file != n_angular {
        return Err(Error::Format("grid cache key mismatch".into()));
    }
    // Rebuild the cheap parts, then overlay the cached tables. The basis is
    // recomputed (fast) and the cached copy is used as a consistency check.
    let mut grid = crate::velocity::rebuild_without_nu(r, n_v, n_angular)?;
    let n = grid.len();
    grid.maxw.nu = read_f64s(&mut rd, n)?;
    let mut cached_basis = Vec::with_capacity(5);
    for _ in 0..5 {
        cached_basis.push(read_f64s(&mut rd, n)?);
    }
    for (a, b) in grid.null.vectors.iter().zip(&cached_basis) {
        let mut worst = 0.0f64;
        for (x, y) in a.iter().zip(b) {
            worst = worst.max((x - y).abs());
        }
        if worst > 1e-12 {
            return Err(Error::Format("grid cache basis mismatch".into()));
        }
    }
    Ok(grid)
}

/// Persist a dense assembled operator matrix.
pub fn write_operator_cache(
    matrix: &Array2<f64>,
    r: f64,
    n_v: usize,
    n_angular: usize,
    path: &Path,
) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(OP_MAGIC)?;
    w.write_f64::<LittleEndian>(r)?;
    w.write_u32::<LittleEndian>(n_v as u32)?;
    w.write_u32::<LittleEndian>(n_angular as u32)?;
    w.write_u64::<LittleEndian>(matrix.nrows() as u64)?;
    for x in matrix.iter() {
        w.write_f64::<LittleEndian>(*x)?;
    }
    Ok(())
}

pub fn read_operator_cache(
    path: &Path,
    r: f64,
    n_v: usize,
    n_angular: usize,
) -> Result<Array2<f64>> {
    let mut rd = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    rd.read_exact(&mut magic)?;
    if &magic != OP_MAGIC {
        return Err(Error::Format("not an operator cache".into()));
    }
    let r_file = rd.read_f64::<LittleEndian>()?;
    let n_v_file = rd.read_u32::<LittleEndian>()? as usize;
    let n_a_file = rd.read_u32::<LittleEndian>()? as usize;
    if (r_file - r).abs() > 1e-12 || n_v_file != n_v || n_a_file != n_angular {
        return Err(Error::Format("operator cache key mismatch".into()));
    }
    let n = rd.read_u64::<LittleEndian>()? as usize;
    let data = read_f64s(&mut rd, n * n)?;
    Array2::from_shape_vec((n, n), data).map_err(|e| Error::Format(format!("{e}")))
}

//! Field dumps: raw little-endian `f64` in row-major cell order, one file per
//! component, each with a JSON sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub dim: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub component: usize,
    pub name: String,
}

fn paths(dir: &Path, name: &str, component: usize) -> (PathBuf, PathBuf) {
    let stem = format!("{name}_{component}");
    (dir.join(format!("{stem}.bin")), dir.join(format!("{stem}.json")))
}

fn write_component(dir: &Path, name: &str, component: usize, grid: &Grid, values: &[f64]) -> Result<PathBuf> {
    let (bin, side) = paths(dir, name, component);
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(&bin, bytes)?;
    let meta = Sidecar { dim: grid.dim(), n: grid.n(), half_width: grid.half_width(), component, name: name.to_string() };
    fs::write(&side, serde_json::to_string_pretty(&meta)?)?;
    Ok(bin)
}

pub fn dump_scalar(dir: &Path, name: &str, f: &ScalarField) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    Ok(vec![write_component(dir, name, 0, f.grid(), f.values())?])
}

pub fn dump_vector(dir: &Path, name: &str, e: &VectorField) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    (0..3).map(|c| write_component(dir, name, c, e.grid(), e.component(c))).collect()
}

/// Reads one component back; returns the sidecar and a field on a fresh grid.
pub fn load_component(dir: &Path, name: &str, component: usize) -> Result<(Sidecar, ScalarField)> {
    let (bin, side) = paths(dir, name, component);
    let meta: Sidecar = serde_json::from_str(&fs::read_to_string(side)?)?;
    let bytes = fs::read(bin)?;
    if bytes.len() % 8 != 0 {
        return invalid("dump length is not a multiple of 8 bytes");
    }
    let values: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let grid = Grid::new(meta.dim, meta.n, meta.half_width)?;
    let field = ScalarField::new(&grid, values)?;
    Ok((meta, field))
}

//! Field serialization: a flat little-endian binary file plus a JSON sidecar,
//! and CSV export of 2D slices.
//!
//! Binary layout: magic `QMAGRID1`, `u32` n, `u32` m, `f64` lo, `f64` hi, then
//! `m^{4n}` `f64` values in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Grid, GridField};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"QMAGRID1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub format: String,
    pub n: usize,
    pub m: usize,
    pub lo: f64,
    pub hi: f64,
    pub h: f64,
    pub len: usize,
    pub min: f64,
    pub max: f64,
    pub description: String,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

/// Writes `path` (binary) and `path.json` (metadata).
pub fn write_field(path: &Path, field: &GridField, description: &str) -> Result<()> {
    let g = field.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(g.n as u32).to_le_bytes())?;
    w.write_all(&(g.m as u32).to_le_bytes())?;
    w.write_all(&g.lo.to_le_bytes())?;
    w.write_all(&g.hi.to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    let header = FieldHeader {
        format: "qma-grid-v1".into(),
        n: g.n,
        m: g.m,
        lo: g.lo,
        hi: g.hi,
        h: g.h(),
        len: g.len(),
        min: field.min_value(),
        max: field.max_value(),
        description: description.into(),
    };
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&header)? + "\n")?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<GridField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("{}: not a grid field file", path.display())));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let m = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let lo = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let hi = f64::from_le_bytes(b8);
    let grid = Grid::new(n, m, lo, hi)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        r.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    if r.read(&mut b8)? != 0 {
        return Err(Error::Format(format!("{}: trailing bytes after payload", path.display())));
    }
    GridField::from_values(grid, values)
}

/// Reads the JSON sidecar written next to a field file.
pub fn read_field_json(path: &Path) -> Result<FieldHeader> {
    let text = std::fs::read_to_string(sidecar_path(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// CSV of the slice through the grid center spanned by axes `a` and `b`.
pub fn write_slice_csv(path: &Path, field: &GridField, a: usize, b: usize) -> Result<()> {
    let g = field.grid();
    if a >= g.dims() || b >= g.dims() || a == b {
        return Err(Error::domain(format!("invalid slice axes ({a}, {b})")));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([format!("x{a}"), format!("x{b}"), "value".into()])?;
    let mut mi = vec![g.m / 2; g.dims()];
    for i in 0..g.m {
        for j in 0..g.m {
            mi[a] = i;
            mi[b] = j;
            let v = field.get(g.index_of(&mi));
            w.write_record([g.axis_coord(i).to_string(), g.axis_coord(j).to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

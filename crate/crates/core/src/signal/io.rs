//! Signal import and export.
//!
//! CSV has the header `index,re,im` and one row per sample. The binary dump
//! is little-endian: `N` as `u32`, `L` as `f64`, then `N` pairs `(re, im)`
//! of `f64`.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{DiscreteSignal, Grid};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Row {
    index: usize,
    re: f64,
    im: f64,
}

pub fn write_csv<W: Write>(f: &DiscreteSignal, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for (index, c) in f.samples().iter().enumerate() {
        wr.serialize(Row { index, re: c.re, im: c.im })?;
    }
    wr.flush()?;
    Ok(())
}

/// Read a CSV signal; rows may come in any order but must cover
/// `0..N` exactly once. Lines starting with `#` are skipped.
pub fn read_csv<R: Read>(r: R, l: f64) -> Result<DiscreteSignal> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let mut rows: Vec<Row> = Vec::new();
    for row in rd.deserialize() {
        rows.push(row?);
    }
    let grid = Grid::new(rows.len(), l)?;
    let mut samples = vec![None; rows.len()];
    for row in rows {
        let slot = samples
            .get_mut(row.index)
            .ok_or_else(|| Error::Format(format!("row index {} out of range", row.index)))?;
        if slot.is_some() {
            return Err(Error::Format(format!("row index {} repeated", row.index)));
        }
        *slot = Some(Complex64::new(row.re, row.im));
    }
    DiscreteSignal::from_samples(grid, samples.into_iter().map(|s| s.expect("all indices seen")).collect())
}

pub fn write_binary<W: Write>(f: &DiscreteSignal, mut w: W) -> Result<()> {
    let n = u32::try_from(f.len()).map_err(|_| Error::Format("signal too long".into()))?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&f.grid().l().to_le_bytes())?;
    for c in f.samples() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<DiscreteSignal> {
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let l = f64::from_le_bytes(b8);
    let grid = Grid::new(n, l)?;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let im = f64::from_le_bytes(b8);
        samples.push(Complex64::new(re, im));
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes after {n} samples", rest.len())));
    }
    DiscreteSignal::from_samples(grid, samples)
}

//! Path batch serialization.
//!
//! Binary layout, little endian: `H: f64`, `N: u64` (intervals), `count: u64`,
//! `seed: u64`, then `count` rows of `N + 1` doubles. Only uniform grids on
//! `[0, 1]` are representable.

use std::io::{Read, Write};

use crate::error::{domain, usage, Result};
use crate::fbm::{FbmBatch, FbmPath, Hurst};
use crate::grid::GridSpec;

/// CSV with header `path_id,t,value`, one row per grid node.
pub fn write_batch_csv<W: Write>(batch: &FbmBatch, mut out: W) -> Result<()> {
    writeln!(out, "path_id,t,value")?;
    for (id, p) in batch.paths.iter().enumerate() {
        for (t, v) in batch.grid.times().iter().zip(p.values()) {
            writeln!(out, "{id},{t},{v}")?;
        }
    }
    Ok(())
}

pub fn write_batch_binary<W: Write>(batch: &FbmBatch, mut out: W) -> Result<()> {
    if !batch.grid.is_uniform() || batch.grid.horizon() != 1.0 {
        return usage("binary export supports uniform grids on [0, 1] only");
    }
    out.write_all(&batch.hurst.value().to_le_bytes())?;
    out.write_all(&(batch.grid.n_intervals() as u64).to_le_bytes())?;
    out.write_all(&(batch.paths.len() as u64).to_le_bytes())?;
    out.write_all(&batch.seed.to_le_bytes())?;
    for p in &batch.paths {
        for v in p.values() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_batch_binary<R: Read>(mut input: R) -> Result<FbmBatch> {
    let mut word = [0u8; 8];
    let mut next = |input: &mut R| -> Result<[u8; 8]> {
        input.read_exact(&mut word)?;
        Ok(word)
    };
    let hurst = Hurst::new(f64::from_le_bytes(next(&mut input)?))?;
    let n = u64::from_le_bytes(next(&mut input)?) as usize;
    let count = u64::from_le_bytes(next(&mut input)?) as usize;
    let seed = u64::from_le_bytes(next(&mut input)?);
    if n > 1 << 26 {
        return domain(format!("implausible grid size {n} in header"));
    }
    let grid = GridSpec::uniform(n)?;
    let mut paths = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let mut values = Vec::with_capacity(n + 1);
        for _ in 0..=n {
            values.push(f64::from_le_bytes(next(&mut input)?));
        }
        paths.push(FbmPath::new(hurst, &grid, values)?);
    }
    Ok(FbmBatch {
        hurst,
        grid,
        seed,
        paths,
    })
}

//! `L2GF` feature file: little-endian header (magic, version, rows, cols,
//! dim, stride, origin x/y) followed by `rows*cols*dim` f32 values.

use std::io::{Read, Write};
use std::path::Path;

use super::FeatureGrid;
use crate::error::{L2gError, Result};

pub const FEATURE_MAGIC: &[u8; 4] = b"L2GF";
pub const FEATURE_VERSION: u32 = 1;

pub fn encode(grid: &FeatureGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + grid.raw().len() * 4);
    out.extend_from_slice(FEATURE_MAGIC);
    for v in [
        FEATURE_VERSION,
        grid.rows() as u32,
        grid.cols() as u32,
        grid.dim() as u32,
        grid.stride(),
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&grid.origin_offset().0.to_le_bytes());
    out.extend_from_slice(&grid.origin_offset().1.to_le_bytes());
    for v in grid.raw() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, field: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(L2gError::format(
                field,
                format!("truncated: need {n} bytes at offset {}, file has {}", self.pos, self.buf.len()),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, field: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, field)?.try_into().unwrap()))
    }

    fn i32(&mut self, field: &str) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4, field)?.try_into().unwrap()))
    }
}

pub fn decode(buf: &[u8]) -> Result<FeatureGrid> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(4, "magic")? != FEATURE_MAGIC {
        return Err(L2gError::format("magic", "expected \"L2GF\""));
    }
    let version = c.u32("version")?;
    if version != FEATURE_VERSION {
        return Err(L2gError::format("version", format!("unsupported version {version}")));
    }
    let rows = c.u32("rows")? as usize;
    let cols = c.u32("cols")? as usize;
    let dim = c.u32("dim")? as usize;
    let stride = c.u32("stride")?;
    let ox = c.i32("origin_offset_x")?;
    let oy = c.i32("origin_offset_y")?;
    if rows == 0 || cols == 0 || dim == 0 || stride == 0 {
        return Err(L2gError::format("header", "rows, cols, dim and stride must be positive"));
    }
    let expected = rows * cols * dim * 4;
    let remaining = buf.len() - c.pos;
    if remaining != expected {
        return Err(L2gError::format(
            "data",
            format!(
                "truncated or oversized payload: header promises {rows}x{cols}x{dim} floats ({expected} bytes), found {remaining}"
            ),
        ));
    }
    let data = c
        .take(expected, "data")?
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    FeatureGrid::new(rows, cols, dim, stride, (ox, oy), data)
}

pub fn write_feature_file(grid: &FeatureGrid, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode(grid))?;
    Ok(())
}

pub fn read_feature_file(path: &Path) -> Result<FeatureGrid> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    decode(&buf)
}

//! `L2GA` adapter checkpoint: magic, version u32, alpha f64, dim u32,
//! hidden u32, then w1, b1, w2, b2 as little-endian f64.

use std::path::Path;

use crate::error::{L2gError, Result};
use crate::numerics::AdapterParams;

pub const ADAPTER_MAGIC: &[u8; 4] = b"L2GA";
const VERSION: u32 = 1;

pub fn encode_adapter(p: &AdapterParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + p.num_params() * 8);
    out.extend_from_slice(ADAPTER_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&p.alpha.to_le_bytes());
    out.extend_from_slice(&(p.dim as u32).to_le_bytes());
    out.extend_from_slice(&(p.hidden as u32).to_le_bytes());
    for v in p.to_flat() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_adapter(buf: &[u8]) -> Result<AdapterParams> {
    let need = |n: usize, field: &str| -> Result<()> {
        if buf.len() < n {
            Err(L2gError::format(field, format!("truncated: file has {} bytes, need {n}", buf.len())))
        } else {
            Ok(())
        }
    };
    need(4, "magic")?;
    if &buf[..4] != ADAPTER_MAGIC {
        return Err(L2gError::format("magic", "expected \"L2GA\""));
    }
    need(8, "version")?;
    let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(L2gError::format("version", format!("unsupported version {version}")));
    }
    need(24, "dims")?;
    let alpha = f64::from_le_bytes(buf[8..16].try_into().unwrap());
    let dim = u32::from_le_bytes(buf[16..20].try_into().unwrap()) as usize;
    let hidden = u32::from_le_bytes(buf[20..24].try_into().unwrap()) as usize;
    if dim == 0 || hidden == 0 {
        return Err(L2gError::format("dims", "dim and hidden must be positive"));
    }
    let mut p = AdapterParams::zeros(dim, hidden, alpha);
    let expected = 24 + p.num_params() * 8;
    if buf.len() != expected {
        return Err(L2gError::format(
            "weights",
            format!("truncated or oversized: expected {expected} bytes for D={dim}, H={hidden}, found {}", buf.len()),
        ));
    }
    let flat: Vec<f64> = buf[24..].chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    p.set_flat(&flat)?;
    Ok(p)
}

pub fn write_adapter(p: &AdapterParams, path: &Path) -> Result<()> {
    std::fs::write(path, encode_adapter(p))?;
    Ok(())
}

pub fn read_adapter(path: &Path) -> Result<AdapterParams> {
    decode_adapter(&std::fs::read(path)?)
}

//! Raw 16-bit volume files.
//!
//! Layout: 4-byte magic, then little-endian `u32` width, height and number
//! of disparity levels, then `width * height * levels` little-endian `u16`
//! cells in pixel-major, disparity-minor order.

use std::path::Path;

use super::read_bytes;
use crate::error::{Error, Result};
use crate::priors::OffsetVolume;

pub const COST_MAGIC: [u8; 4] = *b"OFFC";
pub const OFFSET_MAGIC: [u8; 4] = *b"OFFV";

const HEADER_LEN: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawVolume {
    pub width: usize,
    pub height: usize,
    pub levels: usize,
    pub data: Vec<u16>,
}

pub fn encode_volume(magic: [u8; 4], vol: &RawVolume) -> Vec<u8> {
    assert_eq!(vol.data.len(), vol.width * vol.height * vol.levels);
    let mut out = Vec::with_capacity(HEADER_LEN + vol.data.len() * 2);
    out.extend_from_slice(&magic);
    for v in [vol.width, vol.height, vol.levels] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for c in &vol.data {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out
}

pub fn decode_volume(magic: [u8; 4], bytes: &[u8]) -> Result<RawVolume> {
    let fmt = if magic == COST_MAGIC { "OFFC" } else { "OFFV" };
    if bytes.len() < HEADER_LEN {
        return Err(Error::malformed(fmt, "file shorter than header"));
    }
    if bytes[..4] != magic {
        return Err(Error::malformed(fmt, "bad magic"));
    }
    let field = |i: usize| {
        let o = 4 + 4 * i;
        u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as usize
    };
    let (width, height, levels) = (field(0), field(1), field(2));
    if width == 0 || height == 0 || levels == 0 {
        return Err(Error::malformed(fmt, "zero dimension"));
    }
    let cells = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(levels))
        .ok_or_else(|| Error::malformed(fmt, "dimensions overflow"))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != cells * 2 {
        return Err(Error::malformed(
            fmt,
            format!("payload is {} bytes, expected {}", payload.len(), cells * 2),
        ));
    }
    let data = payload
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .collect();
    Ok(RawVolume {
        width,
        height,
        levels,
        data,
    })
}

pub fn read_volume(magic: [u8; 4], path: impl AsRef<Path>) -> Result<RawVolume> {
    decode_volume(magic, &read_bytes(path.as_ref())?)
}

pub fn write_volume(magic: [u8; 4], vol: &RawVolume, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_volume(magic, vol))?;
    Ok(())
}

pub fn write_offset_volume(vol: &OffsetVolume, path: impl AsRef<Path>) -> Result<()> {
    let raw = RawVolume {
        width: vol.width(),
        height: vol.height(),
        levels: vol.levels(),
        data: vol.cells().to_vec(),
    };
    write_volume(OFFSET_MAGIC, &raw, path)
}

/// Reads an `OFFV` file; the file does not carry `d_min`, so the caller
/// supplies it (normally from the calibration).
pub fn read_offset_volume(path: impl AsRef<Path>, d_min: i32) -> Result<OffsetVolume> {
    let raw = read_volume(OFFSET_MAGIC, path)?;
    OffsetVolume::from_cells(raw.width, raw.height, d_min, d_min + raw.levels as i32 - 1, raw.data)
}

//! Portable float map (PFM) reading and writing.
//!
//! Rows are stored bottom-up. The sign of the scale field selects the byte
//! order: negative is little-endian. We always write `-1.0`.

use std::path::Path;

use super::{read_bytes, FloatMap};
use crate::error::{Error, Result};

const FORMAT: &str = "PFM";

struct Header {
    channels: usize,
    width: usize,
    height: usize,
    little_endian: bool,
    payload_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let mut next_token = |what: &str| -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::malformed(FORMAT, format!("missing {what}")));
        }
        let tok = std::str::from_utf8(&bytes[start..pos])
            .map_err(|_| Error::malformed(FORMAT, format!("non-ASCII {what}")))?;
        Ok(tok.to_owned())
    };

    let magic = next_token("magic")?;
    let channels = match magic.as_str() {
        "Pf" => 1,
        "PF" => 3,
        other => {
            return Err(Error::malformed(FORMAT, format!("bad magic `{other}`")));
        }
    };
    let width: usize = next_token("width")?
        .parse()
        .map_err(|_| Error::malformed(FORMAT, "width is not an integer"))?;
    let height: usize = next_token("height")?
        .parse()
        .map_err(|_| Error::malformed(FORMAT, "height is not an integer"))?;
    let scale: f64 = next_token("scale")?
        .parse()
        .map_err(|_| Error::malformed(FORMAT, "scale is not a number"))?;
    if width == 0 || height == 0 {
        return Err(Error::malformed(FORMAT, "zero dimension"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::malformed(FORMAT, "scale must be finite and nonzero"));
    }
    // Exactly one whitespace byte separates the header from the payload.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::malformed(FORMAT, "header not terminated"));
    }
    Ok(Header {
        channels,
        width,
        height,
        little_endian: scale < 0.0,
        payload_start: pos + 1,
    })
}

fn decode_payload(bytes: &[u8], h: &Header) -> Result<Vec<f32>> {
    let count = h
        .width
        .checked_mul(h.height)
        .and_then(|n| n.checked_mul(h.channels))
        .ok_or_else(|| Error::malformed(FORMAT, "dimensions overflow"))?;
    let payload = &bytes[h.payload_start..];
    if payload.len() < count * 4 {
        return Err(Error::malformed(
            FORMAT,
            format!("truncated payload: need {} bytes, have {}", count * 4, payload.len()),
        ));
    }
    let row_len = h.width * h.channels;
    let mut out = vec![0f32; count];
    for (file_row, chunk) in payload[..count * 4].chunks_exact(row_len * 4).enumerate() {
        let y = h.height - 1 - file_row;
        let dst = &mut out[y * row_len..(y + 1) * row_len];
        for (v, b) in dst.iter_mut().zip(chunk.chunks_exact(4)) {
            let raw = [b[0], b[1], b[2], b[3]];
            *v = if h.little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
        }
    }
    Ok(out)
}

/// Decodes a single-channel (`Pf`) PFM file.
pub fn decode_pfm(bytes: &[u8]) -> Result<FloatMap> {
    let header = parse_header(bytes)?;
    if header.channels != 1 {
        return Err(Error::UnsupportedFormat(
            "color PFM (`PF`) where a single-channel map was expected".into(),
        ));
    }
    let data = decode_payload(bytes, &header)?;
    FloatMap::new(header.width, header.height, data)
}

/// Decodes a three-channel (`PF`) PFM file into per-pixel triples.
pub fn decode_pfm_rgb(bytes: &[u8]) -> Result<(usize, usize, Vec<[f32; 3]>)> {
    let header = parse_header(bytes)?;
    if header.channels != 3 {
        return Err(Error::UnsupportedFormat(
            "single-channel PFM (`Pf`) where a 3-channel map was expected".into(),
        ));
    }
    let flat = decode_payload(bytes, &header)?;
    let px = flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    Ok((header.width, header.height, px))
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<FloatMap> {
    decode_pfm(&read_bytes(path.as_ref())?)
}

pub fn read_pfm_rgb(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<[f32; 3]>)> {
    decode_pfm_rgb(&read_bytes(path.as_ref())?)
}

fn encode(magic: &str, width: usize, height: usize, row_len: usize, data: &[f32]) -> Vec<u8> {
    let header = format!("{magic}\n{width} {height}\n-1.0\n");
    let mut out = Vec::with_capacity(header.len() + data.len() * 4);
    out.extend_from_slice(header.as_bytes());
    for y in (0..height).rev() {
        for v in &data[y * row_len..(y + 1) * row_len] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Encodes a map as little-endian `Pf` with rows bottom-up.
pub fn encode_pfm(map: &FloatMap) -> Vec<u8> {
    encode("Pf", map.width(), map.height(), map.width(), map.data())
}

pub fn encode_pfm_rgb(width: usize, height: usize, px: &[[f32; 3]]) -> Vec<u8> {
    assert_eq!(px.len(), width * height, "pixel count must match dimensions");
    let flat: Vec<f32> = px.iter().flat_map(|p| p.iter().copied()).collect();
    encode("PF", width, height, width * 3, &flat)
}

pub fn write_pfm(map: &FloatMap, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_pfm(map))?;
    Ok(())
}

//! Raster types and the external file formats: PFM disparity maps, PGM/PNG
//! images, Middlebury `calib.txt`, evaluation masks, 16-bit offset images
//! and the `OFFC`/`OFFV` binary volumes.

mod binary;
mod calib;
mod gray;
mod pfm;

use std::path::Path;

pub use binary::{
    decode_volume, encode_volume, read_offset_volume, read_volume, write_offset_volume,
    write_volume, RawVolume, COST_MAGIC, OFFSET_MAGIC,
};
pub use calib::{parse_calib, parse_calib_str, write_calib, CalibInfo};
pub use gray::{
    decode_gray, read_gray, read_mask, read_offset_image, write_gray_png, write_offset_image,
};
pub use pfm::{decode_pfm, decode_pfm_rgb, encode_pfm, encode_pfm_rgb, read_pfm, read_pfm_rgb, write_pfm};

use crate::error::{Error, Result};

/// 8-bit grayscale image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

/// Row-major grid of `f32` values. Non-finite entries mean "no data".
///
/// Disparity maps store disparities in pixels with `+inf` as the unknown
/// sentinel; uncertainty maps reuse the same container.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

pub type DisparityMap = FloatMap;
pub type UncertaintyMap = FloatMap;

/// Sentinel for pixels without a disparity.
pub const UNKNOWN: f32 = f32::INFINITY;

impl FloatMap {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        assert!(width > 0 && height > 0, "map dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        assert!(width > 0 && height > 0, "map dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn is_known(&self, idx: usize) -> bool {
        self.data[idx].is_finite()
    }

    pub fn known_count(&self) -> usize {
        self.data.iter().filter(|v| v.is_finite()).count()
    }

    /// Adds `offset` to every known value.
    pub fn shifted(&self, offset: f32) -> Self {
        let data = self
            .data
            .iter()
            .map(|&v| if v.is_finite() { v + offset } else { v })
            .collect();
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Evaluation mask: `true` where a pixel takes part in evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn all(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![true; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn passes(&self, idx: usize) -> bool {
        self.data[idx]
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::DimensionMismatch(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::DimensionMismatch(format!(
            "{width}x{height} grid needs {} values, got {len}",
            width.saturating_mul(height)
        )));
    }
    Ok(())
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    Ok(std::fs::read(path)?)
}

/// Errors unless two grids have the same size.
pub fn same_dims(what: &str, a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("{what}: {}x{} vs {}x{}", a.0, a.1, b.0, b.1)));
    }
    Ok(())
}

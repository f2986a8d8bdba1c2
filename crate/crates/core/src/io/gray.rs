//! Grayscale image, mask and 16-bit offset-image I/O.

use std::path::Path;

use image::DynamicImage;

use super::{read_bytes, GrayImage, Mask};
use crate::error::{Error, Result};
use crate::priors::OffsetImage;

#[inline]
fn luma(r: u8, g: u8, b: u8) -> u8 {
    // round(0.299 R + 0.587 G + 0.114 B) in exact integer arithmetic.
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

fn to_gray(img: DynamicImage) -> Result<GrayImage> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<u8> = match img {
        DynamicImage::ImageLuma8(b) => b.into_raw(),
        DynamicImage::ImageLumaA8(b) => b.pixels().map(|p| p.0[0]).collect(),
        DynamicImage::ImageLuma16(b) => b.pixels().map(|p| (p.0[0] >> 8) as u8).collect(),
        DynamicImage::ImageLumaA16(b) => b.pixels().map(|p| (p.0[0] >> 8) as u8).collect(),
        DynamicImage::ImageRgb8(b) => b.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgba8(b) => b.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgb16(b) => b
            .pixels()
            .map(|p| luma((p.0[0] >> 8) as u8, (p.0[1] >> 8) as u8, (p.0[2] >> 8) as u8))
            .collect(),
        DynamicImage::ImageRgba16(b) => b
            .pixels()
            .map(|p| luma((p.0[0] >> 8) as u8, (p.0[1] >> 8) as u8, (p.0[2] >> 8) as u8))
            .collect(),
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "pixel layout {:?}",
                other.color()
            )))
        }
    };
    GrayImage::new(w, h, data)
}

/// Decodes PNG or PGM bytes to 8-bit gray.
pub fn decode_gray(bytes: &[u8]) -> Result<GrayImage> {
    let format = image::guess_format(bytes)
        .map_err(|_| Error::UnsupportedFormat("not a PNG or PNM image".into()))?;
    if !matches!(format, image::ImageFormat::Png | image::ImageFormat::Pnm) {
        return Err(Error::UnsupportedFormat(format!("{format:?}")));
    }
    to_gray(image::load_from_memory_with_format(bytes, format)?)
}

pub fn read_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_gray(&read_bytes(path.as_ref())?)
}

pub fn write_gray_png(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.data().to_vec())
        .expect("buffer length matches dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

/// Reads an evaluation mask. Pixel value 255 means "evaluate".
pub fn read_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let img = read_gray(path)?;
    let data = img.data().iter().map(|&v| v == 255).collect();
    Mask::new(img.width(), img.height(), data)
}

/// Writes an offset image as a binary 16-bit PGM. Values are clamped to
/// `0..=65535`.
pub fn write_offset_image(img: &OffsetImage, path: impl AsRef<Path>) -> Result<()> {
    let header = format!("P5\n{} {}\n65535\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.values().len() * 2);
    out.extend_from_slice(header.as_bytes());
    for &v in img.values() {
        out.extend_from_slice(&(v.clamp(0, u16::MAX as i32) as u16).to_be_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_offset_image(path: impl AsRef<Path>) -> Result<OffsetImage> {
    let bytes = read_bytes(path.as_ref())?;
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Pnm)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values = match img {
        DynamicImage::ImageLuma16(b) => b.pixels().map(|p| p.0[0] as i32).collect(),
        DynamicImage::ImageLuma8(b) => b.pixels().map(|p| p.0[0] as i32).collect(),
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "offset image must be a gray PGM, got {:?}",
                other.color()
            )))
        }
    };
    OffsetImage::new(w, h, values)
}

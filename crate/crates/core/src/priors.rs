//! Orientation priors for the smoothness term.
//!
//! A prior surface is rasterized to integer disparities; the integer steps
//! between neighbouring pixels along a scan direction are the disparity
//! jumps that the aggregation treats as free transitions.
//!
//! - [`OffsetImage`] holds one rounded surface per pixel. Jumps are the same
//!   at every disparity.
//! - [`OffsetVolume`] holds, for each pixel and disparity, the rounded value
//!   of the surface closest to that disparity (a 1D Voronoi partition of
//!   each pixel's disparity column), so jumps depend on the disparity.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Surface;
use crate::scalar::{round_to_i32, Real};
use crate::sgm::Direction;

/// Rounded prior disparity per pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OffsetImage {
    width: usize,
    height: usize,
    values: Vec<i32>,
}

impl OffsetImage {
    pub fn new(width: usize, height: usize, values: Vec<i32>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "offset image {width}x{height} with {} values",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn constant(width: usize, height: usize, value: i32) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("positive dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> i32 {
        self.values[y * self.width + x]
    }
}

/// Rounded disparity of the nearest prior surface for every (pixel,
/// disparity) cell, stored as 16-bit values in pixel-major order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OffsetVolume {
    width: usize,
    height: usize,
    d_min: i32,
    d_max: i32,
    cells: Vec<u16>,
}

impl OffsetVolume {
    pub fn from_cells(width: usize, height: usize, d_min: i32, d_max: i32, cells: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 || d_min > d_max {
            return Err(Error::InvalidParameter(format!(
                "offset volume {width}x{height} with range [{d_min}, {d_max}]"
            )));
        }
        let levels = (d_max - d_min + 1) as usize;
        if cells.len() != width * height * levels {
            return Err(Error::DimensionMismatch(format!(
                "offset volume needs {} cells, got {}",
                width * height * levels,
                cells.len()
            )));
        }
        Ok(Self {
            width,
            height,
            d_min,
            d_max,
            cells,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn d_min(&self) -> i32 {
        self.d_min
    }

    pub fn d_max(&self) -> i32 {
        self.d_max
    }

    pub fn levels(&self) -> usize {
        (self.d_max - self.d_min + 1) as usize
    }

    pub fn cells(&self) -> &[u16] {
        &self.cells
    }

    #[inline]
    pub fn column(&self, x: usize, y: usize) -> &[u16] {
        let l = self.levels();
        let o = (y * self.width + x) * l;
        &self.cells[o..o + l]
    }

    /// Rounded disparity of the surface nearest to `d` at `(x, y)`.
    #[inline]
    pub fn nearest(&self, x: usize, y: usize, d: i32) -> i32 {
        self.column(x, y)[(d - self.d_min) as usize] as i32
    }

    /// The disparity-`d` slice as an offset image.
    pub fn slice(&self, d: i32) -> OffsetImage {
        let i = (d - self.d_min) as usize;
        let l = self.levels();
        let values = self.cells.chunks_exact(l).map(|c| c[i] as i32).collect();
        OffsetImage::new(self.width, self.height, values).expect("dimensions are valid")
    }
}

/// A prior handed to the aggregator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Prior {
    Image(OffsetImage),
    Volume(OffsetVolume),
}

impl Prior {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Prior::Image(o) => (o.width(), o.height()),
            Prior::Volume(v) => (v.width(), v.height()),
        }
    }
}

/// Rounds a surface to integer disparities (ties away from zero).
///
/// Every pixel must be defined; fill holes before calling.
pub fn rasterize_surface<T: Real>(surface: &Surface<T>) -> Result<OffsetImage> {
    let w = surface.width();
    let values = surface
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| round_to_i32(v).ok_or(Error::NonFinite { x: i % w, y: i / w }))
        .collect::<Result<Vec<_>>>()?;
    OffsetImage::new(w, surface.height(), values)
}

/// Jump field for one scan direction: `Ŝ(p + dir) - Ŝ(p)`, zero where
/// `p + dir` leaves the image.
pub fn jumps(offset: &OffsetImage, dir: Direction) -> Vec<i32> {
    let (w, h) = (offset.width(), offset.height());
    let mut out = vec![0i32; w * h];
    for y in 0..h {
        for x in 0..w {
            if let Some((nx, ny)) = dir.step(x, y, w, h) {
                out[y * w + x] = offset.get(nx, ny) - offset.get(x, y);
            }
        }
    }
    out
}

/// Jump at fixed disparity `d` from `(x, y)` towards `dir`; zero at the
/// image border.
#[inline]
pub fn volume_jumps(vol: &OffsetVolume, x: usize, y: usize, d: i32, dir: Direction) -> i32 {
    match dir.step(x, y, vol.width(), vol.height()) {
        Some((nx, ny)) => vol.nearest(nx, ny, d) - vol.nearest(x, y, d),
        None => 0,
    }
}

#[inline]
fn to_cell<T: Real>(v: T) -> u16 {
    round_to_i32(v).unwrap_or(0).clamp(0, u16::MAX as i32) as u16
}

/// Fills one disparity column with the rounded nearest surface value.
///
/// `sorted` must be sorted ascending and finite. Ties between a lower and a
/// higher surface at equal distance go to the lower one.
fn fill_column<T: Real>(sorted: &[T], d_min: i32, column: &mut [u16]) {
    let levels = column.len();
    // Forward scan: largest surface at or below d.
    let mut below: Vec<Option<T>> = vec![None; levels];
    let mut k = 0;
    let mut last = None;
    for (i, slot) in below.iter_mut().enumerate() {
        let d = T::from_i64_lossy((d_min + i as i32) as i64);
        while k < sorted.len() && sorted[k] <= d {
            last = Some(sorted[k]);
            k += 1;
        }
        *slot = last;
    }
    // Backward scan: smallest surface strictly above d.
    let mut k = sorted.len();
    let mut next = None;
    for i in (0..levels).rev() {
        let d = T::from_i64_lossy((d_min + i as i32) as i64);
        while k > 0 && sorted[k - 1] > d {
            next = Some(sorted[k - 1]);
            k -= 1;
        }
        let pick = match (below[i], next) {
            (Some(lo), Some(hi)) => {
                if d - lo <= hi - d {
                    lo
                } else {
                    hi
                }
            }
            (Some(lo), None) => lo,
            (None, Some(hi)) => hi,
            (None, None) => T::zero(),
        };
        column[i] = to_cell(pick);
    }
}

/// Builds an offset volume from per-pixel lists of surface disparities.
///
/// Non-finite entries are ignored. A pixel without any surface gets a
/// single fronto-parallel surface at disparity 0, which makes the prior a
/// no-op there. Cells hold the nearest surface rounded and clamped to the
/// 16-bit range.
pub fn build_offset_volume<T: Real>(
    width: usize,
    height: usize,
    surfaces: &[Vec<T>],
    d_min: i32,
    d_max: i32,
) -> Result<OffsetVolume> {
    if surfaces.len() != width * height {
        return Err(Error::DimensionMismatch(format!(
            "{} surface lists for a {width}x{height} image",
            surfaces.len()
        )));
    }
    if d_min > d_max {
        return Err(Error::InvalidParameter(format!("empty range [{d_min}, {d_max}]")));
    }
    let levels = (d_max - d_min + 1) as usize;
    let mut cells = vec![0u16; width * height * levels];
    cells
        .par_chunks_mut(levels)
        .zip(surfaces.par_iter())
        .for_each(|(column, list)| {
            let mut sorted: Vec<T> = list.iter().copied().filter(|v| v.is_finite()).collect();
            if sorted.is_empty() {
                sorted.push(T::zero());
            }
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
            fill_column(&sorted, d_min, column);
        });
    OffsetVolume::from_cells(width, height, d_min, d_max, cells)
}

/// Convenience wrapper: builds the per-pixel lists from a family of
/// surfaces (undefined samples are skipped).
pub fn offset_volume_from_family<T: Real>(
    family: &[Surface<T>],
    width: usize,
    height: usize,
    d_min: i32,
    d_max: i32,
) -> Result<OffsetVolume> {
    let mut lists: Vec<Vec<T>> = vec![Vec::new(); width * height];
    for s in family {
        if (s.width(), s.height()) != (width, height) {
            return Err(Error::DimensionMismatch("surface family member size".into()));
        }
        for (list, &v) in lists.iter_mut().zip(s.values()) {
            if v.is_finite() {
                list.push(v);
            }
        }
    }
    build_offset_volume(width, height, &lists, d_min, d_max)
}

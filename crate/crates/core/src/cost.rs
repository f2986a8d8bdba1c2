//! Unary matching costs.
//!
//! The built-in cost is negated, truncated normalized cross correlation over
//! square grayscale windows, `round(scale * (1 - max(0, NCC)))`, with a small
//! regularizer added to both variance terms of the NCC denominator. For every
//! horizontal disparity the right window may also be displaced vertically by
//! up to `vertical_tol` rows; the smallest cost wins.
//!
//! Costs from other matchers can be supplied through the `OFFC` file format.

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{self, CalibInfo, GrayImage, RawVolume, COST_MAGIC};

/// Per-pixel, per-disparity matching cost, pixel-major and disparity-minor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostVolume {
    width: usize,
    height: usize,
    d_min: i32,
    d_max: i32,
    data: Vec<u16>,
}

impl CostVolume {
    pub fn new(width: usize, height: usize, d_min: i32, d_max: i32, data: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 || d_min > d_max {
            return Err(Error::InvalidParameter(format!(
                "cost volume {width}x{height} with range [{d_min}, {d_max}]"
            )));
        }
        let levels = (d_max - d_min + 1) as usize;
        if data.len() != width * height * levels {
            return Err(Error::DimensionMismatch(format!(
                "cost volume needs {} cells, got {}",
                width * height * levels,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            d_min,
            d_max,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, d_min: i32, d_max: i32, value: u16) -> Self {
        let levels = (d_max - d_min + 1) as usize;
        Self::new(width, height, d_min, d_max, vec![value; width * height * levels])
            .expect("valid dimensions")
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

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u16] {
        &mut self.data
    }

    /// Costs of one pixel over the whole disparity range.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u16] {
        let l = self.levels();
        let o = (y * self.width + x) * l;
        &self.data[o..o + l]
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, d: i32) -> u16 {
        self.pixel(x, y)[(d - self.d_min) as usize]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NccParams {
    /// Odd window side length.
    pub window: usize,
    /// Regularizer added to each variance term of the denominator.
    pub eps: f64,
    pub scale: u16,
    /// Vertical displacement tolerance in rows, 0 or 1.
    pub vertical_tol: usize,
}

impl Default for NccParams {
    fn default() -> Self {
        Self {
            window: 5,
            eps: 1.0,
            scale: 255,
            vertical_tol: 1,
        }
    }
}

impl NccParams {
    pub fn validate(&self) -> Result<()> {
        if self.window.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "NCC window must be odd, got {}",
                self.window
            )));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("NCC eps must be >= 0, got {}", self.eps)));
        }
        if self.vertical_tol > 1 {
            return Err(Error::InvalidParameter(format!(
                "vertical tolerance must be 0 or 1, got {}",
                self.vertical_tol
            )));
        }
        Ok(())
    }
}

/// Summed-area tables of intensities and squared intensities.
struct Integral {
    stride: usize,
    sum: Vec<i64>,
    sq: Vec<i64>,
}

impl Integral {
    fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width(), img.height());
        let stride = w + 1;
        let mut sum = vec![0i64; stride * (h + 1)];
        let mut sq = vec![0i64; stride * (h + 1)];
        for y in 0..h {
            let (mut rs, mut rq) = (0i64, 0i64);
            for x in 0..w {
                let v = img.get(x, y) as i64;
                rs += v;
                rq += v * v;
                sum[(y + 1) * stride + x + 1] = sum[y * stride + x + 1] + rs;
                sq[(y + 1) * stride + x + 1] = sq[y * stride + x + 1] + rq;
            }
        }
        Self { stride, sum, sq }
    }

    /// Sums over the window of radius `r` centered at `(x, y)`.
    #[inline]
    fn window(&self, x: usize, y: usize, r: usize) -> (i64, i64) {
        let (x0, y0, x1, y1) = (x - r, y - r, x + r + 1, y + r + 1);
        let s = self.stride;
        let f = |t: &[i64]| t[y1 * s + x1] - t[y0 * s + x1] - t[y1 * s + x0] + t[y0 * s + x0];
        (f(&self.sum), f(&self.sq))
    }
}

/// Cost from exact integer window sums.
#[inline]
pub(crate) fn ncc_to_cost(n: i64, sa: i64, saa: i64, sb: i64, sbb: i64, sab: i64, params: &NccParams) -> u16 {
    let nf = n as f64;
    let num = (n * sab - sa * sb) as f64 / nf;
    let va = (n * saa - sa * sa) as f64 / nf;
    let vb = (n * sbb - sb * sb) as f64 / nf;
    let den = ((va + params.eps) * (vb + params.eps)).sqrt();
    let ncc = if den > 0.0 { num / den } else { 0.0 };
    let scale = params.scale as f64;
    (scale * (1.0 - ncc.max(0.0))).round().clamp(0.0, scale) as u16
}

/// Builds the truncated-NCC cost volume for a rectified pair.
///
/// The right window for disparity `d` is centered at `x - d`. Windows that
/// leave either image get cost `scale`.
pub fn ncc_cost(
    left: &GrayImage,
    right: &GrayImage,
    calib: &CalibInfo,
    params: &NccParams,
) -> Result<CostVolume> {
    params.validate()?;
    let (w, h) = (left.width(), left.height());
    if (right.width(), right.height()) != (w, h) {
        return Err(Error::DimensionMismatch(format!(
            "left is {w}x{h}, right is {}x{}",
            right.width(),
            right.height()
        )));
    }
    if calib.d_max >= w as i32 {
        return Err(Error::InvalidParameter(format!(
            "d_max {} must be below the image width {w}",
            calib.d_max
        )));
    }
    let (d_min, d_max) = (calib.d_min, calib.d_max);
    let levels = calib.levels();
    let r = params.window / 2;
    let n = (params.window * params.window) as i64;
    let tol = params.vertical_tol as isize;
    let li = Integral::new(left);
    let ri = Integral::new(right);
    let (lp, rp) = (left.data(), right.data());

    let mut data = vec![params.scale; w * h * levels];
    data.par_chunks_mut(w * levels).enumerate().for_each(|(y, row)| {
        if y < r || y + r >= h {
            return;
        }
        let mut colsum = vec![0i64; w];
        for v in -tol..=tol {
            let ry = y as isize + v;
            if ry < r as isize || ry + r as isize >= h as isize {
                continue;
            }
            let ry = ry as usize;
            for d in d_min..=d_max {
                let di = (d - d_min) as usize;
                // Valid centers: both windows fully inside their images.
                let x_lo = (r as i64).max(r as i64 + d as i64);
                let x_hi = ((w - 1 - r) as i64).min((w - 1 - r) as i64 + d as i64);
                if x_lo > x_hi {
                    continue;
                }
                let (c_lo, c_hi) = ((x_lo - r as i64) as usize, (x_hi + r as i64) as usize);
                for x in c_lo..=c_hi {
                    let xr = (x as i64 - d as i64) as usize;
                    let mut s = 0i64;
                    for k in 0..=2 * r {
                        let a = lp[(y + k - r) * w + x] as i64;
                        let b = rp[(ry + k - r) * w + xr] as i64;
                        s += a * b;
                    }
                    colsum[x] = s;
                }
                let mut sab: i64 = colsum[c_lo..c_lo + 2 * r + 1].iter().sum();
                for x in x_lo as usize..=x_hi as usize {
                    if x > x_lo as usize {
                        sab += colsum[x + r] - colsum[x - r - 1];
                    }
                    let xr = (x as i64 - d as i64) as usize;
                    let (sa, saa) = li.window(x, y, r);
                    let (sb, sbb) = ri.window(xr, ry, r);
                    let c = ncc_to_cost(n, sa, saa, sb, sbb, sab, params);
                    let cell = &mut row[x * levels + di];
                    if c < *cell {
                        *cell = c;
                    }
                }
            }
        }
    });
    CostVolume::new(w, h, d_min, d_max, data)
}

/// Loads an `OFFC` cost volume and checks it against the calibration range.
pub fn load_cost_volume(path: impl AsRef<Path>, calib: &CalibInfo) -> Result<CostVolume> {
    let raw = io::read_volume(COST_MAGIC, path)?;
    if raw.levels != calib.levels() {
        return Err(Error::RangeMismatch {
            expected: calib.levels(),
            found: raw.levels,
        });
    }
    CostVolume::new(raw.width, raw.height, calib.d_min, calib.d_max, raw.data)
}

pub fn store_cost_volume(vol: &CostVolume, path: impl AsRef<Path>) -> Result<()> {
    let raw = RawVolume {
        width: vol.width,
        height: vol.height,
        levels: vol.levels(),
        data: vol.data.clone(),
    };
    io::write_volume(COST_MAGIC, &raw, path)
}

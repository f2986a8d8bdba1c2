//! Middlebury `calib.txt` parsing.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Stereo rig parameters and disparity search range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibInfo {
    /// Focal length in pixels.
    pub f: f64,
    /// Baseline, in whatever length unit the scene uses.
    pub baseline: f64,
    /// Principal point.
    pub cx: f64,
    pub cy: f64,
    pub d_min: i32,
    pub d_max: i32,
    /// Middlebury `doffs`: x-difference of the principal points. Depth is
    /// `baseline * f / (d + d_offs)`.
    pub d_offs: f64,
}

impl CalibInfo {
    pub fn new(f: f64, baseline: f64, d_min: i32, d_max: i32) -> Result<Self> {
        let c = Self {
            f,
            baseline,
            cx: 0.0,
            cy: 0.0,
            d_min,
            d_max,
            d_offs: 0.0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_principal_point(mut self, cx: f64, cy: f64) -> Self {
        self.cx = cx;
        self.cy = cy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, value: String| {
            Err(Error::InvalidValue {
                key: key.into(),
                value,
            })
        };
        if !(self.f > 0.0 && self.f.is_finite()) {
            return bad("f", self.f.to_string());
        }
        if !(self.baseline > 0.0 && self.baseline.is_finite()) {
            return bad("baseline", self.baseline.to_string());
        }
        if self.d_min > self.d_max {
            return bad("ndisp", format!("d_min {} > d_max {}", self.d_min, self.d_max));
        }
        if !(self.d_offs >= 0.0 && self.d_offs.is_finite()) {
            return bad("doffs", self.d_offs.to_string());
        }
        Ok(())
    }

    /// Number of disparity levels `d_max - d_min + 1`.
    pub fn levels(&self) -> usize {
        (self.d_max - self.d_min + 1) as usize
    }

    /// Calibration for images downsampled by an integer factor `k`.
    pub fn downscaled(&self, k: usize) -> Self {
        let kf = k as f64;
        let ki = k as i32;
        let levels = self.d_max - self.d_min + 1;
        let d_min = self.d_min.div_euclid(ki);
        Self {
            f: self.f / kf,
            baseline: self.baseline,
            cx: self.cx / kf,
            cy: self.cy / kf,
            d_min,
            d_max: d_min + (levels + ki - 1) / ki - 1,
            d_offs: self.d_offs / kf,
        }
    }

    /// Depth for a matching-space disparity.
    pub fn depth(&self, d: f64) -> f64 {
        self.baseline * self.f / (d + self.d_offs)
    }

    /// Matching-space disparity for a depth.
    pub fn disparity(&self, z: f64) -> f64 {
        self.baseline * self.f / z - self.d_offs
    }
}

fn parse_number(key: &str, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::InvalidValue {
        key: key.into(),
        value: s.trim().into(),
    })
}

fn parse_matrix(key: &str, s: &str) -> Result<[[f64; 3]; 3]> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| Error::InvalidValue {
            key: key.into(),
            value: s.trim().into(),
        })?;
    let mut m = [[0.0; 3]; 3];
    let rows: Vec<&str> = inner.split(';').collect();
    if rows.len() != 3 {
        return Err(Error::InvalidValue {
            key: key.into(),
            value: s.trim().into(),
        });
    }
    for (r, row) in rows.iter().enumerate() {
        let vals: Vec<&str> = row.split_whitespace().collect();
        if vals.len() != 3 {
            return Err(Error::InvalidValue {
                key: key.into(),
                value: s.trim().into(),
            });
        }
        for (c, v) in vals.iter().enumerate() {
            m[r][c] = parse_number(key, v)?;
        }
    }
    Ok(m)
}

pub fn parse_calib_str(text: &str) -> Result<CalibInfo> {
    let kv: HashMap<&str, &str> = text
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim(), v.trim()))
        .collect();
    let get = |key: &str| kv.get(key).copied().ok_or_else(|| Error::MissingKey(key.into()));

    let cam0 = parse_matrix("cam0", get("cam0")?)?;
    let baseline = parse_number("baseline", get("baseline")?)?;
    let ndisp_raw = get("ndisp")?;
    let ndisp: i32 = ndisp_raw.parse().map_err(|_| Error::InvalidValue {
        key: "ndisp".into(),
        value: ndisp_raw.into(),
    })?;
    if ndisp < 1 {
        return Err(Error::InvalidValue {
            key: "ndisp".into(),
            value: ndisp_raw.into(),
        });
    }
    let d_offs = match kv.get("doffs") {
        Some(v) => parse_number("doffs", v)?,
        None => 0.0,
    };
    let calib = CalibInfo {
        f: cam0[0][0],
        baseline,
        cx: cam0[0][2],
        cy: cam0[1][2],
        d_min: 0,
        d_max: ndisp - 1,
        d_offs,
    };
    calib.validate()?;
    Ok(calib)
}

pub fn parse_calib(path: impl AsRef<Path>) -> Result<CalibInfo> {
    parse_calib_str(&std::fs::read_to_string(path)?)
}

/// Writes the fields retained by [`parse_calib`] in Middlebury layout.
pub fn write_calib(calib: &CalibInfo, path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::new();
    let cam = format!(
        "[{} 0 {}; 0 {} {}; 0 0 1]",
        calib.f, calib.cx, calib.f, calib.cy
    );
    let _ = writeln!(s, "cam0={cam}");
    let _ = writeln!(s, "cam1={cam}");
    let _ = writeln!(s, "doffs={}", calib.d_offs);
    let _ = writeln!(s, "baseline={}", calib.baseline);
    let _ = writeln!(s, "ndisp={}", calib.d_max + 1);
    std::fs::write(path, s)?;
    Ok(())
}

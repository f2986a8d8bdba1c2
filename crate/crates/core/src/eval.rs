//! Error rates, uncertainty sweeps and error maps.

use std::io::Write;

use crate::error::{Error, Result};
use crate::io::{same_dims, DisparityMap, GrayImage, Mask, UncertaintyMap};

/// How pixels without a produced disparity are treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Density {
    /// Unmatched pixels count as errors.
    #[default]
    Dense,
    /// Unmatched pixels are left out.
    Sparse,
}

fn evaluable(gt: &DisparityMap, mask: Option<&Mask>, i: usize) -> bool {
    gt.data()[i].is_finite() && mask.is_none_or(|m| m.passes(i))
}

fn is_error(disp: f32, gt: f32, t: f64) -> bool {
    !disp.is_finite() || (disp as f64 - gt as f64).abs() > t
}

fn check_inputs(disp: &DisparityMap, gt: &DisparityMap, mask: Option<&Mask>) -> Result<()> {
    same_dims("disparity vs ground truth", (disp.width(), disp.height()), (gt.width(), gt.height()))?;
    if let Some(m) = mask {
        same_dims("mask vs ground truth", (m.width(), m.height()), (gt.width(), gt.height()))?;
    }
    Ok(())
}

/// Fraction of evaluated pixels whose disparity is off by more than `t`.
pub fn error_rate(
    disp: &DisparityMap,
    gt: &DisparityMap,
    t: f64,
    mask: Option<&Mask>,
    density: Density,
) -> Result<f64> {
    check_inputs(disp, gt, mask)?;
    let (mut n, mut bad) = (0usize, 0usize);
    for i in 0..gt.data().len() {
        if !evaluable(gt, mask, i) {
            continue;
        }
        let d = disp.data()[i];
        if density == Density::Sparse && !d.is_finite() {
            continue;
        }
        n += 1;
        bad += is_error(d, gt.data()[i], t) as usize;
    }
    if n == 0 {
        return Err(Error::InsufficientData("no pixels to evaluate".into()));
    }
    Ok(bad as f64 / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub completeness: f64,
    pub error_rate: f64,
}

/// Error rate against completeness when accepting only pixels with
/// uncertainty up to a threshold. Thresholds are 0, `n_steps` quantiles
/// of the observed uncertainties and the maximum, without duplicates.
pub fn roc_curve(
    disp: &DisparityMap,
    unc: &UncertaintyMap,
    gt: &DisparityMap,
    t: f64,
    mask: Option<&Mask>,
    n_steps: usize,
) -> Result<Vec<RocPoint>> {
    check_inputs(disp, gt, mask)?;
    same_dims("uncertainty vs ground truth", (unc.width(), unc.height()), (gt.width(), gt.height()))?;
    let mut px: Vec<(f32, bool)> = Vec::new();
    for i in 0..gt.data().len() {
        if !evaluable(gt, mask, i) {
            continue;
        }
        let u = unc.data()[i];
        if !u.is_finite() {
            return Err(Error::NonFinite { x: i % gt.width(), y: i / gt.width() });
        }
        px.push((u, is_error(disp.data()[i], gt.data()[i], t)));
    }
    if px.is_empty() {
        return Err(Error::InsufficientData("no pixels to evaluate".into()));
    }
    px.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = px.len();
    let mut thresholds = vec![0.0f32];
    for s in 1..=n_steps {
        thresholds.push(px[(s * (n - 1)) / n_steps.max(1)].0);
    }
    thresholds.push(px[n - 1].0);
    thresholds.sort_by(f32::total_cmp);
    thresholds.dedup();

    let mut out = Vec::with_capacity(thresholds.len());
    let (mut taken, mut bad) = (0usize, 0usize);
    for th in thresholds {
        while taken < n && px[taken].0 <= th {
            bad += px[taken].1 as usize;
            taken += 1;
        }
        out.push(RocPoint {
            threshold: th as f64,
            completeness: taken as f64 / n as f64,
            error_rate: if taken == 0 { 0.0 } else { bad as f64 / taken as f64 },
        });
    }
    Ok(out)
}

/// Writes `threshold,completeness,error_rate` rows with six decimals.
pub fn write_roc_csv(points: &[RocPoint], mut out: impl Write) -> Result<()> {
    writeln!(out, "threshold,completeness,error_rate")?;
    for p in points {
        writeln!(out, "{:.6},{:.6},{:.6}", p.threshold, p.completeness, p.error_rate)?;
    }
    Ok(())
}

/// Black where wrong, white where right, mid-gray where not evaluated.
pub fn error_map(disp: &DisparityMap, gt: &DisparityMap, t: f64, mask: Option<&Mask>) -> Result<GrayImage> {
    check_inputs(disp, gt, mask)?;
    let w = gt.width();
    Ok(GrayImage::from_fn(w, gt.height(), |x, y| {
        let i = y * w + x;
        if !evaluable(gt, mask, i) {
            128
        } else if is_error(disp.data()[i], gt.data()[i], t) {
            0
        } else {
            255
        }
    }))
}

//! Plane priors estimated from a coarse disparity map, and oracle priors
//! built from ground truth.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, Plane, Surface};
use crate::io::{DisparityMap, GrayImage, UncertaintyMap};
use crate::priors::{build_offset_volume, rasterize_surface, OffsetImage, OffsetVolume};
use crate::scalar::Real;

/// Box-filter downsampling by an integer factor. Partial blocks at the
/// right and bottom edges are dropped; block means round half up.
pub fn downsample(img: &GrayImage, k: usize) -> Result<GrayImage> {
    if k == 0 {
        return Err(Error::InvalidParameter("downsampling factor must be at least 1".into()));
    }
    let (w, h) = (img.width() / k, img.height() / k);
    if w == 0 || h == 0 {
        return Err(Error::InvalidParameter(format!(
            "factor {k} exceeds a {}x{} image",
            img.width(),
            img.height()
        )));
    }
    let n = (k * k) as u32;
    Ok(GrayImage::from_fn(w, h, |x, y| {
        let mut sum = 0u32;
        for yy in y * k..(y + 1) * k {
            for xx in x * k..(x + 1) * k {
                sum += img.get(xx, yy) as u32;
            }
        }
        ((2 * sum + n) / (2 * n)) as u8
    }))
}

/// Planes fitted to a disparity map and the per-pixel plane labels.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneHypothesisSet<T> {
    pub planes: Vec<Plane<T>>,
    /// Inlier count of each plane at the time it was accepted.
    pub support: Vec<usize>,
    pub labels: Vec<Option<usize>>,
    pub width: usize,
    pub height: usize,
}

impl<T: Real> PlaneHypothesisSet<T> {
    pub fn label(&self, x: usize, y: usize) -> Option<usize> {
        self.labels[y * self.width + x]
    }

    /// Plain-text dump: the planes, then the label grid (`-1` = none).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "planes {}", self.planes.len());
        for (i, p) in self.planes.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {} {} {}", p.a, p.b, p.c, self.support[i]);
        }
        let _ = writeln!(s, "labels {} {}", self.width, self.height);
        for row in self.labels.chunks(self.width) {
            let line: Vec<String> = row
                .iter()
                .map(|l| l.map_or_else(|| "-1".to_string(), |v| v.to_string()))
                .collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Settings for [`cluster_planes`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterParams {
    /// Inlier distance in disparity units.
    pub tau: f64,
    pub iterations: usize,
    pub max_planes: usize,
    /// Minimum inliers as a fraction of the known pixels.
    pub min_support: f64,
    pub seed: u64,
    /// With an uncertainty map, pixels above this percentile are not used
    /// for fitting.
    pub confidence_percentile: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            tau: 1.0,
            iterations: 500,
            max_planes: 24,
            min_support: 0.01,
            seed: 0,
            confidence_percentile: 0.8,
        }
    }
}

fn trial_seed(seed: u64, plane: usize, trial: usize) -> u64 {
    // splitmix64 finalizer over the combined key
    let mut z = seed
        ^ (plane as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (trial as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn percentile(values: &mut [f32], q: f64) -> f32 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let idx = ((values.len() - 1) as f64 * q).round() as usize;
    values[idx.min(values.len() - 1)]
}

/// Greedy sequential RANSAC plane extraction.
///
/// Each round runs `iterations` independent trials (seeded from
/// `(seed, round, trial)`) on the remaining pixels, keeps the trial with
/// the most inliers (lowest index on ties), refits it by least squares
/// and removes its inliers. Rounds stop once the best plane falls below
/// the support threshold. Finally every known pixel is labelled with the
/// nearest plane within `tau`.
pub fn cluster_planes<T: Real>(
    disp: &DisparityMap,
    conf: Option<&UncertaintyMap>,
    params: &ClusterParams,
) -> Result<PlaneHypothesisSet<T>> {
    let (w, h) = (disp.width(), disp.height());
    if let Some(u) = conf {
        if (u.width(), u.height()) != (w, h) {
            return Err(Error::DimensionMismatch("uncertainty map size".into()));
        }
    }
    let known: Vec<usize> = (0..w * h).filter(|&i| disp.data()[i].is_finite()).collect();
    if known.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} known disparities, need at least 3",
            known.len()
        )));
    }
    let mut remaining = known.clone();
    if let Some(u) = conf {
        let mut us: Vec<f32> = known.iter().map(|&i| u.data()[i]).filter(|v| v.is_finite()).collect();
        if !us.is_empty() {
            let cut = percentile(&mut us, params.confidence_percentile);
            remaining.retain(|&i| u.data()[i] <= cut);
        }
    }
    let tau = T::lit(params.tau);
    let min_count = ((params.min_support * known.len() as f64).ceil() as usize).max(3);
    let point = |i: usize| {
        [
            T::from_usize_lossy(i % w),
            T::from_usize_lossy(i / w),
            T::from_f32(disp.data()[i]).unwrap_or(T::nan()),
        ]
    };
    let resid = |p: &Plane<T>, i: usize| {
        let q = point(i);
        (p.eval(q[0], q[1]) - q[2]).abs()
    };

    let mut planes = Vec::new();
    let mut support = Vec::new();
    for round in 0..params.max_planes {
        if remaining.len() < min_count {
            break;
        }
        let best = (0..params.iterations)
            .into_par_iter()
            .map(|trial| {
                let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(params.seed, round, trial));
                let n = remaining.len();
                for _ in 0..8 {
                    let a = rng.gen_range(0..n);
                    let b = rng.gen_range(0..n);
                    let c = rng.gen_range(0..n);
                    if a == b || b == c || a == c {
                        continue;
                    }
                    let pts = [point(remaining[a]), point(remaining[b]), point(remaining[c])];
                    if let Some(p) = Plane::through(pts) {
                        let count = remaining.iter().filter(|&&i| resid(&p, i) <= tau).count();
                        return (count, trial, Some(p));
                    }
                }
                (0, trial, None)
            })
            .reduce(
                || (0, usize::MAX, None),
                |x, y| if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x },
            );
        let (count, _, Some(plane)) = best else { break };
        if count < min_count {
            break;
        }
        let inliers: Vec<usize> = remaining.iter().copied().filter(|&i| resid(&plane, i) <= tau).collect();
        let pts: Vec<[T; 3]> = inliers.iter().map(|&i| point(i)).collect();
        let refit = Plane::fit_least_squares(&pts).filter(|p| p.is_finite()).unwrap_or(plane);
        remaining.retain(|&i| resid(&plane, i) > tau);
        planes.push(refit);
        support.push(inliers.len());
    }

    let mut labels = vec![None; w * h];
    for &i in &known {
        let mut best: Option<(usize, T)> = None;
        for (k, p) in planes.iter().enumerate() {
            let r = resid(p, i);
            if r <= tau && best.is_none_or(|(_, br)| r < br) {
                best = Some((k, r));
            }
        }
        labels[i] = best.map(|b| b.0);
    }
    Ok(PlaneHypothesisSet {
        planes,
        support,
        labels,
        width: w,
        height: h,
    })
}

/// Image segmentation into compact regions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperpixelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub count: usize,
}

impl SuperpixelMap {
    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }
}

/// Rectangular tiling with roughly `target` tiles.
pub fn grid_superpixels(width: usize, height: usize, target: usize) -> SuperpixelMap {
    let target = target.max(1);
    let nx = ((target as f64 * width as f64 / height as f64).sqrt().round() as usize).clamp(1, width.min(target));
    let ny = target.div_ceil(nx).clamp(1, height);
    let mut labels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            labels.push(((y * ny / height) * nx + x * nx / width) as u32);
        }
    }
    relabel(width, height, labels)
}

/// SLIC settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlicParams {
    pub compactness: f64,
    pub iterations: usize,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self {
            compactness: 10.0,
            iterations: 10,
        }
    }
}

/// SLIC clustering on intensity and position, followed by merging of
/// disconnected fragments into a neighbouring segment.
pub fn superpixels(img: &GrayImage, target: usize, params: &SlicParams) -> SuperpixelMap {
    let (w, h) = (img.width(), img.height());
    if target <= 1 {
        return SuperpixelMap {
            width: w,
            height: h,
            labels: vec![0; w * h],
            count: 1,
        };
    }
    let step = ((w * h) as f64 / target as f64).sqrt().max(1.0);
    let nx = ((w as f64 / step).round() as usize).max(1);
    let ny = ((h as f64 / step).round() as usize).max(1);
    // (intensity, x, y)
    let mut centers: Vec<[f64; 3]> = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = ((i as f64 + 0.5) * w as f64 / nx as f64).floor().min((w - 1) as f64);
            let y = ((j as f64 + 0.5) * h as f64 / ny as f64).floor().min((h - 1) as f64);
            centers.push([img.get(x as usize, y as usize) as f64, x, y]);
        }
    }
    let spatial = (params.compactness / step).powi(2);
    let dist = |c: &[f64; 3], x: usize, y: usize| {
        let di = img.get(x, y) as f64 - c[0];
        let (dx, dy) = (x as f64 - c[1], y as f64 - c[2]);
        di * di + (dx * dx + dy * dy) * spatial
    };
    let radius = (2.0 * step).ceil() as i64;
    let mut labels = vec![u32::MAX; w * h];
    let mut best = vec![f64::INFINITY; w * h];
    for _ in 0..params.iterations.max(1) {
        best.fill(f64::INFINITY);
        labels.fill(u32::MAX);
        for (k, c) in centers.iter().enumerate() {
            let (cx, cy) = (c[1].round() as i64, c[2].round() as i64);
            let x0 = (cx - radius).max(0) as usize;
            let x1 = ((cx + radius) as usize).min(w - 1);
            let y0 = (cy - radius).max(0) as usize;
            let y1 = ((cy + radius) as usize).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let d = dist(c, x, y);
                    if d < best[y * w + x] {
                        best[y * w + x] = d;
                        labels[y * w + x] = k as u32;
                    }
                }
            }
        }
        for i in 0..w * h {
            if labels[i] == u32::MAX {
                let (x, y) = (i % w, i / w);
                let k = (0..centers.len())
                    .min_by(|&a, &b| dist(&centers[a], x, y).total_cmp(&dist(&centers[b], x, y)))
                    .unwrap_or(0);
                labels[i] = k as u32;
            }
        }
        let mut acc = vec![[0.0f64; 4]; centers.len()];
        for i in 0..w * h {
            let a = &mut acc[labels[i] as usize];
            a[0] += img.data()[i] as f64;
            a[1] += (i % w) as f64;
            a[2] += (i / w) as f64;
            a[3] += 1.0;
        }
        for (c, a) in centers.iter_mut().zip(&acc) {
            if a[3] > 0.0 {
                *c = [a[0] / a[3], a[1] / a[3], a[2] / a[3]];
            }
        }
    }
    let min_size = ((step * step) / 4.0) as usize;
    enforce_connectivity(w, h, labels, min_size)
}

/// Splits every label into 4-connected components and merges components
/// smaller than `min_size` into the previously visited adjacent one.
fn enforce_connectivity(w: usize, h: usize, labels: Vec<u32>, min_size: usize) -> SuperpixelMap {
    let mut out = vec![u32::MAX; w * h];
    let mut next = 0u32;
    let mut stack = Vec::new();
    let mut members = Vec::new();
    for start in 0..w * h {
        if out[start] != u32::MAX {
            continue;
        }
        // Label of an already finished neighbour, used if this fragment is small.
        let (sx, sy) = (start % w, start / w);
        let adjacent = [(sx.wrapping_sub(1), sy), (sx, sy.wrapping_sub(1))]
            .into_iter()
            .filter(|&(x, y)| x < w && y < h)
            .map(|(x, y)| out[y * w + x])
            .find(|&l| l != u32::MAX);
        members.clear();
        stack.push(start);
        out[start] = next;
        while let Some(i) = stack.pop() {
            members.push(i);
            let (x, y) = (i % w, i / w);
            let nbrs = [
                (x > 0).then(|| i - 1),
                (x + 1 < w).then(|| i + 1),
                (y > 0).then(|| i - w),
                (y + 1 < h).then(|| i + w),
            ];
            for j in nbrs.into_iter().flatten() {
                if out[j] == u32::MAX && labels[j] == labels[i] {
                    out[j] = next;
                    stack.push(j);
                }
            }
        }
        match adjacent {
            Some(a) if members.len() < min_size => {
                for &m in &members {
                    out[m] = a;
                }
            }
            _ => next += 1,
        }
    }
    relabel(w, h, out)
}

/// Renumbers labels densely in order of first appearance.
fn relabel(w: usize, h: usize, labels: Vec<u32>) -> SuperpixelMap {
    let mut map = std::collections::HashMap::new();
    let labels: Vec<u32> = labels
        .into_iter()
        .map(|l| {
            let n = map.len() as u32;
            *map.entry(l).or_insert(n)
        })
        .collect();
    SuperpixelMap {
        width: w,
        height: h,
        count: map.len(),
        labels,
    }
}

/// Coarse label at full-resolution pixel `(x, y)`.
fn coarse_label<T: Real>(hs: &PlaneHypothesisSet<T>, k: usize, x: usize, y: usize) -> Option<usize> {
    hs.label((x / k).min(hs.width - 1), (y / k).min(hs.height - 1))
}

/// Offset image from plane hypotheses found at `1/k` resolution: each
/// superpixel takes the plane most of its pixels are labelled with, or
/// disparity 0 if that plane's share is below `theta`.
pub fn build_epi_prior<T: Real>(
    hs: &PlaneHypothesisSet<T>,
    sp: &SuperpixelMap,
    k: usize,
    theta: f64,
) -> Result<OffsetImage> {
    if k == 0 {
        return Err(Error::InvalidParameter("scale must be at least 1".into()));
    }
    let (w, h) = (sp.width, sp.height);
    let np = hs.planes.len();
    let mut votes = vec![0usize; sp.count * (np + 1)];
    let mut sizes = vec![0usize; sp.count];
    for y in 0..h {
        for x in 0..w {
            let s = sp.label(x, y) as usize;
            sizes[s] += 1;
            let slot = coarse_label(hs, k, x, y).unwrap_or(np);
            votes[s * (np + 1) + slot] += 1;
        }
    }
    let winner: Vec<Option<usize>> = (0..sp.count)
        .map(|s| {
            let row = &votes[s * (np + 1)..s * (np + 1) + np];
            let (best, &count) = row.iter().enumerate().rev().max_by_key(|(_, &c)| c)?;
            (count > 0 && count as f64 >= theta * sizes[s] as f64).then_some(best)
        })
        .collect();
    let full: Vec<Plane<T>> = hs.planes.iter().map(|p| p.upscaled(k)).collect();
    let surface = Surface::from_fn(w, h, |x, y| match winner[sp.label(x, y) as usize] {
        Some(p) => full[p].at_pixel(x, y),
        None => T::zero(),
    });
    rasterize_surface(&surface)
}

/// Offset volume from plane hypotheses found at `1/k` resolution. Each
/// plane with at least three labelled pixels is bounded by the convex hull
/// of their full-resolution blocks and contributes a surface inside it.
pub fn build_epv_prior<T: Real>(
    hs: &PlaneHypothesisSet<T>,
    k: usize,
    width: usize,
    height: usize,
    d_min: i32,
    d_max: i32,
) -> Result<OffsetVolume> {
    if k == 0 {
        return Err(Error::InvalidParameter("scale must be at least 1".into()));
    }
    let mut lists: Vec<Vec<T>> = vec![Vec::new(); width * height];
    for (pi, plane) in hs.planes.iter().enumerate() {
        let Some(hull) = plane_hull(hs, pi, k) else { continue };
        let full = plane.upscaled(k);
        let (y0, y1) = hull.y_range();
        for y in y0.max(0)..=y1.min(height as i64 - 1) {
            let Some((x0, x1)) = hull.row_span(y) else { continue };
            for x in x0.max(0)..=x1.min(width as i64 - 1) {
                let (x, y) = (x as usize, y as usize);
                lists[y * width + x].push(full.at_pixel(x, y));
            }
        }
    }
    build_offset_volume(width, height, &lists, d_min, d_max)
}

/// Convex hull of the full-resolution blocks of a plane's labelled
/// pixels, or `None` with fewer than three of them.
pub fn plane_hull<T: Real>(hs: &PlaneHypothesisSet<T>, plane: usize, k: usize) -> Option<ConvexPolygon> {
    let mut corners = Vec::new();
    let mut n = 0;
    let kk = k as i64;
    for y in 0..hs.height {
        // Only the extreme pixels of each row can be hull vertices.
        let row = &hs.labels[y * hs.width..(y + 1) * hs.width];
        let mine: Vec<usize> = (0..hs.width).filter(|&x| row[x] == Some(plane)).collect();
        n += mine.len();
        if let (Some(&a), Some(&b)) = (mine.first(), mine.last()) {
            let (y0, y1) = (y as i64 * kk, y as i64 * kk + kk - 1);
            for x in [a as i64 * kk, b as i64 * kk + kk - 1] {
                corners.push((x, y0));
                corners.push((x, y1));
            }
        }
    }
    if n < 3 {
        return None;
    }
    ConvexPolygon::hull(&corners)
}

/// Fills unknown pixels with the value of the Euclidean-nearest known
/// pixel, ties going to the smaller linear index.
pub fn fill_nearest(gt: &DisparityMap) -> Result<DisparityMap> {
    let (w, h) = (gt.width(), gt.height());
    if gt.known_count() == 0 {
        return Err(Error::InsufficientData("ground truth has no known pixels".into()));
    }
    // Per column, nearest known row for every row (ties to the upper one).
    let mut col_near = vec![u32::MAX; w * h];
    for x in 0..w {
        let mut last: Option<usize> = None;
        let mut up = vec![None; h];
        for (y, slot) in up.iter_mut().enumerate() {
            if gt.get(x, y).is_finite() {
                last = Some(y);
            }
            *slot = last;
        }
        let mut next: Option<usize> = None;
        for y in (0..h).rev() {
            if gt.get(x, y).is_finite() {
                next = Some(y);
            }
            let pick = match (up[y], next) {
                (Some(a), Some(b)) => Some(if y - a <= b - y { a } else { b }),
                (a, b) => a.or(b),
            };
            if let Some(p) = pick {
                col_near[y * w + x] = p as u32;
            }
        }
    }
    let mut out = gt.clone();
    out.data_mut().par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, v) in row.iter_mut().enumerate() {
            if v.is_finite() {
                continue;
            }
            let mut best: Option<(u64, usize)> = None;
            let cand = |xx: usize, best: &mut Option<(u64, usize)>| {
                let r = col_near[y * w + xx];
                if r == u32::MAX {
                    return;
                }
                let (dx, dy) = (xx.abs_diff(x) as u64, (r as usize).abs_diff(y) as u64);
                let key = (dx * dx + dy * dy, r as usize * w + xx);
                if best.is_none_or(|b| key < b) {
                    *best = Some(key);
                }
            };
            for off in 0..w {
                let dx2 = (off * off) as u64;
                if best.is_some_and(|b| dx2 > b.0) {
                    break;
                }
                if off <= x {
                    cand(x - off, &mut best);
                }
                if off > 0 && x + off < w {
                    cand(x + off, &mut best);
                }
            }
            let (_, idx) = best.expect("some column has a known pixel");
            *v = gt.data()[idx];
        }
    });
    Ok(out)
}

/// Ground-truth surface prior: holes filled with the nearest known value,
/// then rounded.
pub fn oracle_prior_gs(gt: &DisparityMap) -> Result<OffsetImage> {
    let filled = fill_nearest(gt)?;
    let surface = Surface::from_fn(gt.width(), gt.height(), |x, y| filled.get(x, y) as f64);
    rasterize_surface(&surface)
}

/// Piecewise-planar ground-truth prior: planes clustered on the ground
/// truth at full resolution, assigned per superpixel.
pub fn oracle_prior_gp(
    gt: &DisparityMap,
    sp: &SuperpixelMap,
    params: &ClusterParams,
    theta: f64,
) -> Result<OffsetImage> {
    let hs = cluster_planes::<f64>(gt, None, params)?;
    build_epi_prior(&hs, sp, 1, theta)
}

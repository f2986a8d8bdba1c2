//! Surface-normal priors.
//!
//! A scene-space tangent plane `n · X = h` seen by a pinhole camera with
//! focal length `f` maps to the disparity plane
//! `d(u, v) = (b / h) (n_x u + n_y v + f n_z)` with `(u, v)` measured from
//! the principal point. Its slant depends on `h`, so a normal map alone
//! yields a family of disparity surfaces, one per depth. We integrate the
//! normals into a log-depth surface per grid cell, scale that surface to a
//! set of depths and hand the family to the offset-volume builder.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::geometry::{Plane, Surface};
use crate::io::{CalibInfo, DisparityMap, GrayImage};
use crate::scalar::Real;

/// Per-pixel unit normals in camera coordinates; `None` where unknown.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalMap<T> {
    width: usize,
    height: usize,
    normals: Vec<Option<[T; 3]>>,
}

fn normalized<T: Real>(n: [T; 3]) -> Option<[T; 3]> {
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    (len.is_finite() && len > T::zero()).then(|| [n[0] / len, n[1] / len, n[2] / len])
}

impl<T: Real> NormalMap<T> {
    /// Builds a map, normalizing every vector. Zero-length or non-finite
    /// vectors become undefined.
    pub fn new(width: usize, height: usize, normals: Vec<Option<[T; 3]>>) -> Result<Self> {
        if width == 0 || height == 0 || normals.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "normal map {width}x{height} with {} entries",
                normals.len()
            )));
        }
        let normals = normals.into_iter().map(|n| n.and_then(normalized)).collect();
        Ok(Self {
            width,
            height,
            normals,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Option<[T; 3]>) -> Result<Self> {
        let mut v = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                v.push(f(x, y));
            }
        }
        Self::new(width, height, v)
    }

    /// From a 3-channel float image with `(R, G, B) = (n_x, n_y, n_z)`.
    pub fn from_rgb(width: usize, height: usize, px: &[[f32; 3]]) -> Result<Self> {
        let v = px
            .iter()
            .map(|p| {
                Some([
                    T::from_f32(p[0]).unwrap_or(T::nan()),
                    T::from_f32(p[1]).unwrap_or(T::nan()),
                    T::from_f32(p[2]).unwrap_or(T::nan()),
                ])
            })
            .collect();
        Self::new(width, height, v)
    }

    /// From a label image plus a normal per label. Unlisted labels are
    /// undefined.
    pub fn from_labels(labels: &GrayImage, table: &HashMap<u32, [T; 3]>) -> Result<Self> {
        let v = labels.data().iter().map(|&l| table.get(&(l as u32)).copied()).collect();
        Self::new(labels.width(), labels.height(), v)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<[T; 3]> {
        self.normals[y * self.width + x]
    }
}

/// Parses a label-normal side file: one `label n_x n_y n_z` per line,
/// `#` starts a comment.
pub fn parse_label_normals(text: &str) -> Result<HashMap<u32, [f64; 3]>> {
    let mut out = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::InvalidValue {
            key: format!("label normals line {}", lineno + 1),
            value: line.to_string(),
        };
        if fields.len() != 4 {
            return Err(bad());
        }
        let label: u32 = fields[0].parse().map_err(|_| bad())?;
        let mut n = [0.0; 3];
        for (slot, f) in n.iter_mut().zip(&fields[1..]) {
            *slot = f.parse().map_err(|_| bad())?;
        }
        out.insert(label, normalized(n).ok_or_else(bad)?);
    }
    Ok(out)
}

/// Disparity plane of the scene plane `n · X = h`, in coordinates relative
/// to the principal point: `a = b n_x / h`, `b' = b n_y / h`, `c = b f n_z / h`.
pub fn normal_plane_to_disparity<T: Real>(n: [T; 3], h: T, calib: &CalibInfo) -> Result<Plane<T>> {
    if h == T::zero() || !h.is_finite() {
        return Err(Error::DegeneratePlane);
    }
    let b = T::lit(calib.baseline);
    let f = T::lit(calib.f);
    Ok(Plane::new(b * n[0] / h, b * n[1] / h, b * f * n[2] / h))
}

/// Inverse of [`normal_plane_to_disparity`]: unit normal and offset `h > 0`
/// of the scene plane behind a (principal-point-centered) disparity plane.
pub fn disparity_plane_to_normal<T: Real>(plane: &Plane<T>, calib: &CalibInfo) -> Result<([T; 3], T)> {
    let f = T::lit(calib.f);
    let v = [plane.a, plane.b, plane.c / f];
    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if len == T::zero() || !len.is_finite() {
        return Err(Error::DegeneratePlane);
    }
    Ok(([v[0] / len, v[1] / len, v[2] / len], T::lit(calib.baseline) / len))
}

/// Log-depth gradient at one pixel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gradient<T> {
    Defined { du: T, dv: T },
    /// No normal at this pixel.
    Undefined,
    /// Tangent plane nearly contains the viewing ray.
    Grazing,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientField<T> {
    width: usize,
    height: usize,
    values: Vec<Gradient<T>>,
}

impl<T: Real> GradientField<T> {
    pub fn new(width: usize, height: usize, values: Vec<Gradient<T>>) -> Self {
        assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Gradient<T> {
        self.values[y * self.width + x]
    }

    pub fn grazing_pixels(&self) -> Vec<(usize, usize)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, g)| matches!(g, Gradient::Grazing))
            .map(|(i, _)| (i % self.width, i / self.width))
            .collect()
    }
}

/// Minimum |cos| between normal and viewing ray before a pixel is flagged
/// as grazing.
pub const GRAZING_COS: f64 = 1e-3;

/// Gradients of `ln z` implied by the local tangent planes:
/// `(-n_x / D, -n_y / D)` with `D = n_x u + n_y v + f n_z`.
pub fn normals_to_logz_gradients<T: Real>(nm: &NormalMap<T>, calib: &CalibInfo) -> GradientField<T> {
    let f = T::lit(calib.f);
    let (cx, cy) = (T::lit(calib.cx), T::lit(calib.cy));
    let tol = T::lit(GRAZING_COS);
    let mut values = Vec::with_capacity(nm.width * nm.height);
    for y in 0..nm.height {
        for x in 0..nm.width {
            let g = match nm.get(x, y) {
                None => Gradient::Undefined,
                Some(n) => {
                    let u = T::from_usize_lossy(x) - cx;
                    let v = T::from_usize_lossy(y) - cy;
                    let d = n[0] * u + n[1] * v + f * n[2];
                    let ray = (u * u + v * v + f * f).sqrt();
                    if d.abs() < tol * ray {
                        Gradient::Grazing
                    } else {
                        Gradient::Defined {
                            du: -n[0] / d,
                            dv: -n[1] / d,
                        }
                    }
                }
            };
            values.push(g);
        }
    }
    GradientField::new(nm.width, nm.height, values)
}

/// Depth surface from per-cell integration. Each connected region of a
/// cell has its own arbitrary scale, fixed by `z = 1` at its anchor pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct ZSurface<T> {
    width: usize,
    height: usize,
    z: Vec<T>,
    region: Vec<Option<u32>>,
    anchors: Vec<usize>,
}

impl<T: Real> ZSurface<T> {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Depths; NaN where undefined.
    pub fn z(&self) -> &[T] {
        &self.z
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.z[y * self.width + x]
    }

    pub fn region(&self, x: usize, y: usize) -> Option<u32> {
        self.region[y * self.width + x]
    }

    /// Linear pixel index of each region's anchor.
    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }
}

struct Edge<T> {
    a: usize,
    b: usize,
    /// Target for `w[b] - w[a]`.
    g: T,
}

/// Least-squares fit of `w = ln z` to the gradient field, independently
/// in each `cell_size` square cell, solved with conjugate gradients.
pub fn integrate_logz<T: Real>(grad: &GradientField<T>, cell_size: usize) -> Result<ZSurface<T>> {
    if cell_size == 0 {
        return Err(Error::InvalidParameter("cell size must be positive".into()));
    }
    let (w, h) = (grad.width, grad.height);
    let mut z = vec![T::nan(); w * h];
    let mut region = vec![None; w * h];
    let mut anchors = Vec::new();
    let half = T::lit(0.5);
    let max_iter = 10 * cell_size * cell_size;

    for cy0 in (0..h).step_by(cell_size) {
        for cx0 in (0..w).step_by(cell_size) {
            let (cw, ch) = ((w - cx0).min(cell_size), (h - cy0).min(cell_size));
            let local = |x: usize, y: usize| (y - cy0) * cw + (x - cx0);
            let mut defined = vec![None; cw * ch];
            for y in cy0..cy0 + ch {
                for x in cx0..cx0 + cw {
                    if let Gradient::Defined { du, dv } = grad.get(x, y) {
                        defined[local(x, y)] = Some((du, dv));
                    }
                }
            }
            let mut edges = Vec::new();
            for ly in 0..ch {
                for lx in 0..cw {
                    let i = ly * cw + lx;
                    let Some((du, dv)) = defined[i] else { continue };
                    if lx + 1 < cw {
                        if let Some((du2, _)) = defined[i + 1] {
                            edges.push(Edge { a: i, b: i + 1, g: (du + du2) * half });
                        }
                    }
                    if ly + 1 < ch {
                        if let Some((_, dv2)) = defined[i + cw] {
                            edges.push(Edge { a: i, b: i + cw, g: (dv + dv2) * half });
                        }
                    }
                }
            }
            let mut adj: Vec<Vec<(usize, T)>> = vec![Vec::new(); cw * ch];
            for e in &edges {
                adj[e.a].push((e.b, e.g));
                adj[e.b].push((e.a, -e.g));
            }

            let mut comp = vec![usize::MAX; cw * ch];
            for start in 0..cw * ch {
                if defined[start].is_none() || comp[start] != usize::MAX {
                    continue;
                }
                // Breadth-first walk: collects the component and integrates
                // along the spanning tree as the CG starting point.
                let mut members = vec![start];
                let mut init = HashMap::new();
                init.insert(start, T::zero());
                comp[start] = start;
                let mut queue = VecDeque::from([start]);
                while let Some(i) = queue.pop_front() {
                    let wi = init[&i];
                    for &(j, g) in &adj[i] {
                        if comp[j] == usize::MAX {
                            comp[j] = start;
                            init.insert(j, wi + g);
                            members.push(j);
                            queue.push_back(j);
                        }
                    }
                }
                members.sort_unstable();
                let logz = solve_component(&members, &adj, &init, max_iter);
                let id = anchors.len() as u32;
                let (ax, ay) = (cx0 + start % cw, cy0 + start / cw);
                anchors.push(ay * w + ax);
                for (&m, &lz) in members.iter().zip(&logz) {
                    let (x, y) = (cx0 + m % cw, cy0 + m / cw);
                    z[y * w + x] = lz.exp();
                    region[y * w + x] = Some(id);
                }
            }
        }
    }
    Ok(ZSurface {
        width: w,
        height: h,
        z,
        region,
        anchors,
    })
}

/// Solves the graph-Laplacian normal equations of one connected component
/// with its first member (the anchor) clamped to zero. Returns `ln z` for
/// each member in order.
fn solve_component<T: Real>(
    members: &[usize],
    adj: &[Vec<(usize, T)>],
    init: &HashMap<usize, T>,
    max_iter: usize,
) -> Vec<T> {
    let n = members.len();
    let pos: HashMap<usize, usize> = members.iter().enumerate().map(|(k, &m)| (m, k)).collect();
    let anchor = 0usize;
    // rhs: b_i = Σ_j g(i -> j) sign-adjusted; anchor row is the identity.
    let mut rhs = vec![T::zero(); n];
    for (k, &m) in members.iter().enumerate() {
        if k == anchor {
            continue;
        }
        for &(_, g) in &adj[m] {
            rhs[k] -= g;
        }
    }
    let matvec = |x: &[T], y: &mut [T]| {
        for (k, &m) in members.iter().enumerate() {
            if k == anchor {
                y[k] = x[k];
                continue;
            }
            let mut acc = T::zero();
            for &(j, _) in &adj[m] {
                acc += x[k];
                let kj = pos[&j];
                if kj != anchor {
                    acc -= x[kj];
                }
            }
            y[k] = acc;
        }
    };
    let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y);

    let mut x: Vec<T> = members.iter().map(|m| init[m]).collect();
    x[anchor] = T::zero();
    let mut ax = vec![T::zero(); n];
    matvec(&x, &mut ax);
    let mut r: Vec<T> = rhs.iter().zip(&ax).map(|(&b, &a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let b_norm = dot(&rhs, &rhs).sqrt().max(T::min_positive_value());
    let tol = T::lit(1e-8) * b_norm;
    let mut ap = vec![T::zero(); n];
    for _ in 0..max_iter {
        if rr.sqrt() <= tol {
            break;
        }
        matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= T::zero() {
            break;
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
        rr = rr_new;
    }
    x
}

/// Family of disparity surfaces obtained by scaling each integrated region
/// so that its anchor lands on `n_levels` evenly spaced disparities in
/// `[max(d_min, 1), d_max]` (the midpoint when `n_levels == 1`).
///
/// With `z_ref` the anchor depth, level `ℓ` gives
/// `d(p) = (ℓ + d_offs) * z_ref / z(p) - d_offs`, i.e. the disparity of the
/// region scaled to put its anchor at disparity `ℓ`.
pub fn plane_family_from_surface<T: Real>(
    zs: &ZSurface<T>,
    calib: &CalibInfo,
    n_levels: usize,
) -> Result<Vec<Surface<T>>> {
    if n_levels == 0 {
        return Err(Error::InvalidParameter("need at least one level".into()));
    }
    let lo = calib.d_min.max(1) as f64;
    let hi = calib.d_max as f64;
    if hi < lo {
        return Err(Error::InvalidParameter(format!(
            "disparity range [{}, {}] has no positive disparities",
            calib.d_min, calib.d_max
        )));
    }
    let levels: Vec<f64> = if n_levels == 1 {
        vec![0.5 * (lo + hi)]
    } else {
        (0..n_levels)
            .map(|k| lo + (hi - lo) * k as f64 / (n_levels - 1) as f64)
            .collect()
    };
    let z_ref: Vec<T> = zs.anchors.iter().map(|&a| zs.z[a]).collect();
    if let Some(bad) = z_ref.iter().position(|&z| !(z > T::zero())) {
        let a = zs.anchors[bad];
        return Err(Error::InvalidValue {
            key: "reference depth".into(),
            value: format!("{} at pixel ({}, {})", z_ref[bad], a % zs.width, a / zs.width),
        });
    }
    let offs = T::lit(calib.d_offs);
    Ok(levels
        .iter()
        .map(|&l| {
            let g = T::lit(l) + offs;
            let values = zs
                .z
                .iter()
                .zip(&zs.region)
                .map(|(&z, r)| match r {
                    Some(id) => g * z_ref[*id as usize] / z - offs,
                    None => T::nan(),
                })
                .collect();
            Surface::new(zs.width, zs.height, values)
        })
        .collect())
}

/// Settings for [`fit_constrained_plane`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstrainedFitParams {
    /// Histogram bin width as a fraction of the spread of `n · x`.
    pub bin_fraction: f64,
    pub max_peaks: usize,
    /// Secondary peaks need at least this fraction of the top bin's count.
    pub min_peak_ratio: f64,
}

impl Default for ConstrainedFitParams {
    fn default() -> Self {
        Self {
            bin_fraction: 0.01,
            max_peaks: 1,
            min_peak_ratio: 0.25,
        }
    }
}

fn median<T: Real>(mut v: Vec<T>) -> T {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) * T::lit(0.5)
    }
}

/// Offsets `h` of planes `n · X = h` with known normal that explain the
/// points: modes of the histogram of `n · x_i`, each refined to the median
/// of the points in its bin and the two neighbouring bins. Strongest first.
pub fn fit_constrained_plane<T: Real>(
    points: &[[T; 3]],
    n: [T; 3],
    params: &ConstrainedFitParams,
) -> Result<Vec<T>> {
    let hs: Vec<T> = points
        .iter()
        .map(|p| n[0] * p[0] + n[1] * p[1] + n[2] * p[2])
        .filter(|h| h.is_finite())
        .collect();
    if hs.is_empty() {
        return Err(Error::InsufficientData("no points for constrained plane fit".into()));
    }
    let lo = hs.iter().copied().fold(T::infinity(), T::min);
    let hi = hs.iter().copied().fold(T::neg_infinity(), T::max);
    let bw = ((hi - lo) * T::lit(params.bin_fraction)).max(T::lit(1e-6));
    let nbins = ((hi - lo) / bw).floor().to_usize().unwrap_or(0) + 1;
    let bin_of = |h: T| ((h - lo) / bw).floor().to_usize().unwrap_or(0).min(nbins - 1);
    let mut counts = vec![0usize; nbins];
    for &h in &hs {
        counts[bin_of(h)] += 1;
    }
    // Local maxima; on plateaus the first bin represents the peak.
    let mut cands: Vec<usize> = (0..nbins)
        .filter(|&i| {
            counts[i] > 0
                && (i == 0 || counts[i] > counts[i - 1])
                && (i + 1 == nbins || counts[i] >= counts[i + 1])
        })
        .collect();
    cands.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let top = counts[cands[0]];
    let mut chosen: Vec<usize> = Vec::new();
    for c in cands {
        if chosen.len() >= params.max_peaks.max(1) {
            break;
        }
        if !chosen.is_empty() && (counts[c] as f64) < params.min_peak_ratio * top as f64 {
            break;
        }
        if chosen.iter().any(|&k| k.abs_diff(c) <= 2) {
            continue;
        }
        chosen.push(c);
    }
    Ok(chosen
        .into_iter()
        .map(|c| {
            let members: Vec<T> = hs.iter().copied().filter(|&h| bin_of(h).abs_diff(c) <= 1).collect();
            median(members)
        })
        .collect())
}

/// Scene point of a matching-space disparity at full-resolution pixel
/// `(x, y)`; `None` for non-positive depth.
pub fn backproject<T: Real>(x: T, y: T, d: T, calib: &CalibInfo) -> Option<[T; 3]> {
    let f = T::lit(calib.f);
    let denom = d + T::lit(calib.d_offs);
    if !(denom > T::zero()) {
        return None;
    }
    let z = T::lit(calib.baseline) * f / denom;
    Some([(x - T::lit(calib.cx)) * z / f, (y - T::lit(calib.cy)) * z / f, z])
}

/// Per-pixel candidate surfaces for Manhattan-world style priors.
///
/// `labels` (full resolution) assign each pixel a segment whose normal is
/// looked up in `normals`. Points come from a disparity map computed at
/// `1/k` resolution. For each segment, planes with the segment's normal are
/// fitted to its points and converted back to disparity planes, which
/// contribute a surface value at every pixel of the segment.
pub fn manhattan_surfaces<T: Real>(
    labels: &GrayImage,
    normals: &HashMap<u32, [T; 3]>,
    coarse: &DisparityMap,
    k: usize,
    calib: &CalibInfo,
    fit: &ConstrainedFitParams,
) -> Result<Vec<Vec<T>>> {
    let (w, h) = (labels.width(), labels.height());
    let kt = T::from_usize_lossy(k);
    let mut points: HashMap<u32, Vec<[T; 3]>> = HashMap::new();
    for cy in 0..coarse.height() {
        for cx in 0..coarse.width() {
            let d = coarse.get(cx, cy);
            if !d.is_finite() {
                continue;
            }
            let (x, y) = ((cx * k).min(w - 1), (cy * k).min(h - 1));
            let label = labels.get(x, y) as u32;
            if !normals.contains_key(&label) {
                continue;
            }
            let dt = T::from_f32(d).unwrap_or(T::nan()) * kt;
            if let Some(p) = backproject(T::from_usize_lossy(x), T::from_usize_lossy(y), dt, calib) {
                points.entry(label).or_default().push(p);
            }
        }
    }
    let mut planes: HashMap<u32, Vec<Plane<T>>> = HashMap::new();
    let mut keys: Vec<u32> = points.keys().copied().collect();
    keys.sort_unstable();
    for label in keys {
        let n = normals[&label];
        let offs = T::lit(calib.d_offs);
        for hv in fit_constrained_plane(&points[&label], n, fit)? {
            let Ok(p) = normal_plane_to_disparity(n, hv, calib) else { continue };
            let p = p.from_centered(T::lit(calib.cx), T::lit(calib.cy));
            planes.entry(label).or_default().push(Plane::new(p.a, p.b, p.c - offs));
        }
    }
    let mut lists = vec![Vec::new(); w * h];
    for y in 0..h {
        for x in 0..w {
            if let Some(ps) = planes.get(&(labels.get(x, y) as u32)) {
                lists[y * w + x] = ps.iter().map(|p| p.at_pixel(x, y)).collect();
            }
        }
    }
    Ok(lists)
}

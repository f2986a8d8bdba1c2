//! Disparity planes, sampled surfaces and small computational-geometry
//! helpers (least-squares plane fits, integer convex hulls).

use crate::scalar::Real;

/// Plane in disparity space: `d(u, v) = a*u + b*v + c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plane<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Real> Plane<T> {
    pub fn new(a: T, b: T, c: T) -> Self {
        Self { a, b, c }
    }

    pub fn fronto_parallel(d: T) -> Self {
        Self::new(T::zero(), T::zero(), d)
    }

    #[inline]
    pub fn eval(&self, u: T, v: T) -> T {
        self.a * u + self.b * v + self.c
    }

    #[inline]
    pub fn at_pixel(&self, x: usize, y: usize) -> T {
        self.eval(T::from_usize_lossy(x), T::from_usize_lossy(y))
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite()
    }

    /// Plane estimated on images downsampled by `k`, expressed at full
    /// resolution: coordinates and disparities both scale by `k`, so the
    /// slopes stay and the intercept scales.
    pub fn upscaled(&self, k: usize) -> Self {
        Self::new(self.a, self.b, self.c * T::from_usize_lossy(k))
    }

    /// Re-expresses a plane given in coordinates relative to `(cx, cy)` in
    /// absolute pixel coordinates.
    pub fn from_centered(&self, cx: T, cy: T) -> Self {
        Self::new(self.a, self.b, self.c - self.a * cx - self.b * cy)
    }

    /// Plane through three `(u, v, d)` points; `None` if the points are
    /// collinear in the image plane.
    pub fn through(p: [[T; 3]; 3]) -> Option<Self> {
        let (u1, v1) = (p[1][0] - p[0][0], p[1][1] - p[0][1]);
        let (u2, v2) = (p[2][0] - p[0][0], p[2][1] - p[0][1]);
        let det = u1 * v2 - u2 * v1;
        if det.abs() <= T::epsilon() {
            return None;
        }
        let (d1, d2) = (p[1][2] - p[0][2], p[2][2] - p[0][2]);
        let a = (d1 * v2 - d2 * v1) / det;
        let b = (u1 * d2 - u2 * d1) / det;
        let c = p[0][2] - a * p[0][0] - b * p[0][1];
        Some(Self::new(a, b, c))
    }

    /// Least-squares fit of `d = a*u + b*v + c` to `(u, v, d)` samples.
    pub fn fit_least_squares(points: &[[T; 3]]) -> Option<Self> {
        if points.len() < 3 {
            return None;
        }
        let n = T::from_usize_lossy(points.len());
        let (mut mu, mut mv, mut md) = (T::zero(), T::zero(), T::zero());
        for p in points {
            mu += p[0];
            mv += p[1];
            md += p[2];
        }
        mu /= n;
        mv /= n;
        md /= n;
        let (mut suu, mut suv, mut svv, mut sud, mut svd) =
            (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        for p in points {
            let (u, v, d) = (p[0] - mu, p[1] - mv, p[2] - md);
            suu += u * u;
            suv += u * v;
            svv += v * v;
            sud += u * d;
            svd += v * d;
        }
        let det = suu * svv - suv * suv;
        let scale = (suu * svv).max(T::min_positive_value());
        if det.abs() <= scale * T::lit(1e-12) {
            return None;
        }
        let a = (sud * svv - svd * suv) / det;
        let b = (suu * svd - suv * sud) / det;
        Some(Self::new(a, b, md - a * mu - b * mv))
    }
}

/// Real-valued surface sampled at every pixel; NaN marks undefined pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct Surface<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
}

impl<T: Real> Surface<T> {
    pub fn new(width: usize, height: usize, values: Vec<T>) -> Self {
        assert_eq!(values.len(), width * height, "surface size mismatch");
        Self {
            width,
            height,
            values,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values)
    }

    pub fn from_plane(width: usize, height: usize, plane: &Plane<T>) -> Self {
        Self::from_fn(width, height, |x, y| plane.at_pixel(x, y))
    }

    pub fn constant(width: usize, height: usize, value: T) -> Self {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn is_defined(&self, idx: usize) -> bool {
        self.values[idx].is_finite()
    }
}

/// Convex polygon with integer vertices in counter-clockwise order
/// (y pointing down, so "counter-clockwise" is with respect to the usual
/// cross-product sign). May degenerate to a segment or a single point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvexPolygon {
    verts: Vec<(i64, i64)>,
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn div_floor(n: i64, d: i64) -> i64 {
    let q = n / d;
    if (n % d != 0) && ((n < 0) != (d < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(n: i64, d: i64) -> i64 {
    -div_floor(-n, d)
}

impl ConvexPolygon {
    /// Convex hull (Andrew's monotone chain). Collinear boundary points are
    /// dropped. Returns `None` for an empty input.
    pub fn hull(points: &[(i64, i64)]) -> Option<Self> {
        let mut pts = points.to_vec();
        pts.sort_unstable();
        pts.dedup();
        if pts.is_empty() {
            return None;
        }
        if pts.len() < 3 {
            return Some(Self { verts: pts });
        }
        let mut lower: Vec<(i64, i64)> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<(i64, i64)> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Some(Self { verts: lower })
    }

    pub fn vertices(&self) -> &[(i64, i64)] {
        &self.verts
    }

    /// Whether the polygon has positive area.
    pub fn is_solid(&self) -> bool {
        self.verts.len() >= 3
    }

    /// Point-in-polygon by edge half-plane tests (boundary counts as inside).
    pub fn contains(&self, x: i64, y: i64) -> bool {
        let n = self.verts.len();
        match n {
            0 => false,
            1 => self.verts[0] == (x, y),
            2 => {
                let (a, b) = (self.verts[0], self.verts[1]);
                cross(a, b, (x, y)) == 0
                    && x >= a.0.min(b.0)
                    && x <= a.0.max(b.0)
                    && y >= a.1.min(b.1)
                    && y <= a.1.max(b.1)
            }
            _ => (0..n).all(|i| cross(self.verts[i], self.verts[(i + 1) % n], (x, y)) >= 0),
        }
    }

    /// Vertical extent `(y_min, y_max)`.
    pub fn y_range(&self) -> (i64, i64) {
        let ys = self.verts.iter().map(|v| v.1);
        (ys.clone().min().unwrap_or(0), ys.max().unwrap_or(-1))
    }

    /// Inclusive range of integer `x` inside the polygon on row `y`.
    pub fn row_span(&self, y: i64) -> Option<(i64, i64)> {
        let n = self.verts.len();
        let (y0, y1) = self.y_range();
        if n == 0 || y < y0 || y > y1 {
            return None;
        }
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        let edges = if n == 1 { 1 } else { n };
        for i in 0..edges {
            let p = self.verts[i];
            let q = self.verts[(i + 1) % n];
            if y < p.1.min(q.1) || y > p.1.max(q.1) {
                continue;
            }
            if p.1 == q.1 {
                lo = lo.min(p.0.min(q.0));
                hi = hi.max(p.0.max(q.0));
            } else {
                // x = p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y)
                let num = p.0 * (q.1 - p.1) + (y - p.1) * (q.0 - p.0);
                let den = q.1 - p.1;
                lo = lo.min(div_ceil(num, den));
                hi = hi.max(div_floor(num, den));
            }
        }
        (lo <= hi).then_some((lo, hi))
    }
}

//! Semi-global aggregation.
//!
//! For each of the 8 scan directions `r` the aggregated cost is
//!
//! ```text
//! L_r(p, d) = C_p(d) + min_d' ( L_r(p - r, d') + V(d' + j(d'), d) ) - min_d' L_r(p - r, d')
//! ```
//!
//! where `V` is the first-order smoothness penalty (0 / P1 / P2) and `j` is
//! the disparity jump encouraged by the prior between the predecessor and
//! `p` (zero without a prior). The subtracted minimum keeps values bounded;
//! it is constant per pixel and direction, so winners and the uncertainty
//! measure are unaffected. The subtracted amounts are tracked so that true
//! path energies can be recovered.

use std::borrow::Cow;

use rayon::prelude::*;

use crate::cost::CostVolume;
use crate::error::{Error, Result};
use crate::io::{DisparityMap, FloatMap, GrayImage, UncertaintyMap};
use crate::priors::{jumps, OffsetVolume, Prior};

/// Unit scan step. `(1, 0)` scans left to right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Direction {
    dx: i8,
    dy: i8,
}

impl Direction {
    /// The 8 directions; entries `i` and `i + 4` are opposite.
    pub const ALL: [Direction; 8] = [
        Direction::new(1, 0),
        Direction::new(0, 1),
        Direction::new(1, 1),
        Direction::new(-1, 1),
        Direction::new(-1, 0),
        Direction::new(0, -1),
        Direction::new(-1, -1),
        Direction::new(1, -1),
    ];

    pub const fn new(dx: i8, dy: i8) -> Self {
        assert!(dx >= -1 && dx <= 1 && dy >= -1 && dy <= 1 && !(dx == 0 && dy == 0));
        Self { dx, dy }
    }

    pub fn dx(self) -> i8 {
        self.dx
    }

    pub fn dy(self) -> i8 {
        self.dy
    }

    pub fn reversed(self) -> Self {
        Self::new(-self.dx, -self.dy)
    }

    /// The representative of this direction's opposing pair (one of the
    /// first four entries of [`Direction::ALL`]).
    pub fn canonical(self) -> Self {
        if Self::ALL[..4].contains(&self) {
            self
        } else {
            self.reversed()
        }
    }

    /// `(x, y) + self` if it stays inside a `w x h` image.
    #[inline]
    pub fn step(self, x: usize, y: usize, w: usize, h: usize) -> Option<(usize, usize)> {
        let nx = x as isize + self.dx as isize;
        let ny = y as isize + self.dy as isize;
        (nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h).then_some((nx as usize, ny as usize))
    }

    /// Pixel sequences along this direction, each starting at the image
    /// border, in raster order of their start pixel.
    pub fn scanlines(self, w: usize, h: usize) -> Vec<Vec<(usize, usize)>> {
        let back = self.reversed();
        let mut lines = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if back.step(x, y, w, h).is_some() {
                    continue;
                }
                let mut line = vec![(x, y)];
                let mut cur = (x, y);
                while let Some(n) = self.step(cur.0, cur.1, w, h) {
                    line.push(n);
                    cur = n;
                }
                lines.push(line);
            }
        }
        lines
    }
}

/// Smoothness penalties. `P2(ΔI) = p1 * (1 + alpha * exp(-ΔI / beta))`,
/// rounded to an integer, so large jumps are cheaper across strong edges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PenaltyParams {
    pub p1: u32,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        Self {
            p1: 100,
            alpha: 8.0,
            beta: 10.0,
        }
    }
}

impl PenaltyParams {
    pub fn validate(&self) -> Result<()> {
        if self.p1 == 0 || !(self.alpha >= 0.0) || !(self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!("penalties {self:?}")));
        }
        Ok(())
    }

    pub fn p2(&self, delta_i: u8) -> u32 {
        let p = self.p1 as f64 * (1.0 + self.alpha * (-(delta_i as f64) / self.beta).exp());
        p.round() as u32
    }

    fn p2_table(&self) -> [u32; 256] {
        let mut t = [0u32; 256];
        for (i, v) in t.iter_mut().enumerate() {
            *v = self.p2(i as u8);
        }
        t
    }
}

/// First-order smoothness `V(shifted, other)`: 0 if equal, P1 for a
/// difference of one, P2 otherwise. Only the difference matters, so
/// arguments outside the disparity range are fine.
pub fn penalty(shifted: i32, other: i32, params: &PenaltyParams, delta_i: u8) -> u32 {
    match (shifted - other).abs() {
        0 => 0,
        1 => params.p1,
        _ => params.p2(delta_i),
    }
}

/// One direction's aggregated costs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectionalCosts {
    width: usize,
    height: usize,
    levels: usize,
    /// Normalized `L_r`, same layout as the cost volume.
    costs: Vec<u32>,
    /// `min_d L_r(p, d)` of the normalized values.
    minima: Vec<u32>,
    /// Total amount subtracted along the path up to each pixel.
    offsets: Vec<u64>,
}

impl DirectionalCosts {
    pub fn costs(&self) -> &[u32] {
        &self.costs
    }

    pub fn minima(&self) -> &[u32] {
        &self.minima
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u32] {
        let o = (y * self.width + x) * self.levels;
        &self.costs[o..o + self.levels]
    }

    /// Un-normalized `L_r(p, d)`: the minimum path energy ending at `p`
    /// with disparity index `di`.
    pub fn energy(&self, x: usize, y: usize, di: usize) -> u64 {
        self.pixel(x, y)[di] as u64 + self.offsets[y * self.width + x]
    }
}

/// Sum of the 8 directional costs plus each direction's per-pixel minimum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggregatedVolume {
    width: usize,
    height: usize,
    d_min: i32,
    d_max: i32,
    sums: Vec<u32>,
    dir_minima: Vec<[u32; 8]>,
}

impl AggregatedVolume {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn d_min(&self) -> i32 {
        self.d_min
    }

    pub fn levels(&self) -> usize {
        (self.d_max - self.d_min + 1) as usize
    }

    pub fn sums(&self) -> &[u32] {
        &self.sums
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u32] {
        let l = self.levels();
        let o = (y * self.width + x) * l;
        &self.sums[o..o + l]
    }

    /// Per-direction minima at a pixel, in [`Direction::ALL`] order.
    pub fn direction_minima(&self, x: usize, y: usize) -> &[u32; 8] {
        &self.dir_minima[y * self.width + x]
    }
}

/// Source of the per-step jump `j(d')` for the predecessor's disparity.
enum JumpSource<'a> {
    None,
    /// Jump field of the canonical direction; `negate` for its reverse.
    Field { field: Cow<'a, [i32]>, negate: bool },
    Volume(&'a OffsetVolume),
}

fn check_inputs(cost: &CostVolume, image: &GrayImage, prior: Option<&Prior>) -> Result<()> {
    let dims = (cost.width(), cost.height());
    if (image.width(), image.height()) != dims {
        return Err(Error::DimensionMismatch(format!(
            "cost volume is {}x{}, image is {}x{}",
            dims.0,
            dims.1,
            image.width(),
            image.height()
        )));
    }
    if let Some(p) = prior {
        if p.dims() != dims {
            return Err(Error::DimensionMismatch(format!(
                "prior is {}x{}, cost volume is {}x{}",
                p.dims().0,
                p.dims().1,
                dims.0,
                dims.1
            )));
        }
        if let Prior::Volume(v) = p {
            if (v.d_min(), v.d_max()) != (cost.d_min(), cost.d_max()) {
                return Err(Error::RangeMismatch {
                    expected: cost.levels(),
                    found: v.levels(),
                });
            }
        }
    }
    Ok(())
}

/// One recursion step. `prev` is `L_r(q, ·)`, `jump(i)` the jump for
/// predecessor disparity index `i`. Returns `min_d` of the new values.
#[inline]
fn dp_step(
    prev: &[u32],
    prev_min: u32,
    cost: &[u16],
    p1: u32,
    p2: u32,
    jump: impl Fn(usize) -> i32,
    best: &mut [u32],
    out: &mut [u32],
) -> u32 {
    let levels = prev.len() as i64;
    // Any transition costs at most P2 from the cheapest predecessor; the
    // remaining candidates are the 0 and P1 transitions around d' + j(d').
    best.fill(prev_min + p2);
    for (i, &lp) in prev.iter().enumerate() {
        let t = i as i64 + jump(i) as i64;
        if t >= 0 && t < levels {
            let b = &mut best[t as usize];
            *b = (*b).min(lp);
        }
        let lp1 = lp + p1;
        if t > 0 && t - 1 < levels {
            let b = &mut best[(t - 1) as usize];
            *b = (*b).min(lp1);
        }
        if t + 1 >= 0 && t + 1 < levels {
            let b = &mut best[(t + 1) as usize];
            *b = (*b).min(lp1);
        }
    }
    let mut m = u32::MAX;
    for ((o, &c), &b) in out.iter_mut().zip(cost).zip(best.iter()) {
        *o = c as u32 + b - prev_min;
        m = m.min(*o);
    }
    m
}

struct LineResult {
    costs: Vec<u32>,
    minima: Vec<u32>,
    offsets: Vec<u64>,
}

fn scan_line(
    line: &[(usize, usize)],
    cost: &CostVolume,
    image: &GrayImage,
    p1: u32,
    p2_table: &[u32; 256],
    source: &JumpSource,
) -> LineResult {
    let levels = cost.levels();
    let w = cost.width();
    let mut costs = vec![0u32; line.len() * levels];
    let mut minima = vec![0u32; line.len()];
    let mut offsets = vec![0u64; line.len()];
    let mut best = vec![0u32; levels];

    let (x0, y0) = line[0];
    for (o, &c) in costs[..levels].iter_mut().zip(cost.pixel(x0, y0)) {
        *o = c as u32;
    }
    minima[0] = costs[..levels].iter().copied().min().unwrap_or(0);

    for k in 1..line.len() {
        let (qx, qy) = line[k - 1];
        let (px, py) = line[k];
        let delta = (image.get(px, py) as i32 - image.get(qx, qy) as i32).unsigned_abs() as usize;
        let p2 = p2_table[delta];
        let (done, rest) = costs.split_at_mut(k * levels);
        let prev = &done[(k - 1) * levels..];
        let out = &mut rest[..levels];
        let prev_min = minima[k - 1];
        let c = cost.pixel(px, py);
        let m = match source {
            JumpSource::None => dp_step(prev, prev_min, c, p1, p2, |_| 0, &mut best, out),
            JumpSource::Field { field, negate } => {
                // Jump from q to p = Ŝ(p) - Ŝ(q).
                let j = if *negate { -field[py * w + px] } else { field[qy * w + qx] };
                dp_step(prev, prev_min, c, p1, p2, |_| j, &mut best, out)
            }
            JumpSource::Volume(vol) => {
                let (cq, cp) = (vol.column(qx, qy), vol.column(px, py));
                dp_step(prev, prev_min, c, p1, p2, |i| cp[i] as i32 - cq[i] as i32, &mut best, out)
            }
        };
        minima[k] = m;
        offsets[k] = offsets[k - 1] + prev_min as u64;
    }
    LineResult {
        costs,
        minima,
        offsets,
    }
}

fn jump_source<'a>(prior: Option<&'a Prior>, dir: Direction) -> JumpSource<'a> {
    match prior {
        None => JumpSource::None,
        Some(Prior::Image(off)) => {
            let canonical = dir.canonical();
            JumpSource::Field {
                field: Cow::Owned(jumps(off, canonical)),
                negate: canonical != dir,
            }
        }
        Some(Prior::Volume(v)) => JumpSource::Volume(v),
    }
}

fn aggregate_with(
    cost: &CostVolume,
    dir: Direction,
    image: &GrayImage,
    params: &PenaltyParams,
    source: &JumpSource,
) -> DirectionalCosts {
    let (w, h, levels) = (cost.width(), cost.height(), cost.levels());
    let p2_table = params.p2_table();
    let lines = dir.scanlines(w, h);
    let results: Vec<LineResult> = lines
        .par_iter()
        .map(|line| scan_line(line, cost, image, params.p1, &p2_table, source))
        .collect();

    let mut out = DirectionalCosts {
        width: w,
        height: h,
        levels,
        costs: vec![0; w * h * levels],
        minima: vec![0; w * h],
        offsets: vec![0; w * h],
    };
    for (line, res) in lines.iter().zip(&results) {
        for (k, &(x, y)) in line.iter().enumerate() {
            let i = y * w + x;
            out.costs[i * levels..(i + 1) * levels].copy_from_slice(&res.costs[k * levels..(k + 1) * levels]);
            out.minima[i] = res.minima[k];
            out.offsets[i] = res.offsets[k];
        }
    }
    out
}

/// Aggregates costs along one direction, optionally with a prior.
///
/// `image` is the left image; the P2 penalty uses the intensity difference
/// between consecutive pixels on the path.
pub fn aggregate_direction(
    cost: &CostVolume,
    dir: Direction,
    params: &PenaltyParams,
    image: &GrayImage,
    prior: Option<&Prior>,
) -> Result<DirectionalCosts> {
    params.validate()?;
    check_inputs(cost, image, prior)?;
    Ok(aggregate_with(cost, dir, image, params, &jump_source(prior, dir)))
}

/// Sums all 8 directions. Opposing directions share one jump field with
/// flipped signs.
pub fn aggregate_all(
    cost: &CostVolume,
    params: &PenaltyParams,
    image: &GrayImage,
    prior: Option<&Prior>,
) -> Result<AggregatedVolume> {
    params.validate()?;
    check_inputs(cost, image, prior)?;
    let (w, h, levels) = (cost.width(), cost.height(), cost.levels());
    let mut sums = vec![0u32; w * h * levels];
    let mut dir_minima = vec![[0u32; 8]; w * h];

    for pair in 0..4 {
        let fwd = Direction::ALL[pair];
        let source = match prior {
            Some(Prior::Image(off)) => Some(jumps(off, fwd)),
            _ => None,
        };
        for (slot, dir) in [(pair, fwd), (pair + 4, fwd.reversed())] {
            let js = match (&source, prior) {
                (Some(field), _) => JumpSource::Field {
                    field: Cow::Borrowed(field.as_slice()),
                    negate: slot >= 4,
                },
                (None, Some(Prior::Volume(v))) => JumpSource::Volume(v),
                _ => JumpSource::None,
            };
            let dc = aggregate_with(cost, dir, image, params, &js);
            sums.par_chunks_mut(levels)
                .zip(dc.costs.par_chunks(levels))
                .for_each(|(s, l)| {
                    for (a, b) in s.iter_mut().zip(l) {
                        *a += b;
                    }
                });
            for (m, &dm) in dir_minima.iter_mut().zip(&dc.minima) {
                m[slot] = dm;
            }
        }
    }
    Ok(AggregatedVolume {
        width: w,
        height: h,
        d_min: cost.d_min(),
        d_max: cost.d_max(),
        sums,
        dir_minima,
    })
}

/// Winner-takes-all disparities; ties go to the smallest disparity.
pub fn select_disparities(agg: &AggregatedVolume) -> DisparityMap {
    let levels = agg.levels();
    let data: Vec<f32> = agg
        .sums
        .par_chunks(levels)
        .map(|s| {
            let mut bi = 0;
            for (i, &v) in s.iter().enumerate() {
                if v < s[bi] {
                    bi = i;
                }
            }
            (agg.d_min + bi as i32) as f32
        })
        .collect();
    FloatMap::new(agg.width, agg.height, data).expect("dimensions are valid")
}

/// `U_p = min_d S(p, d) - Σ_r min_d L_r(p, d)`; zero where all directions
/// agree on the winner.
pub fn uncertainty(agg: &AggregatedVolume) -> UncertaintyMap {
    let levels = agg.levels();
    let data: Vec<f32> = agg
        .sums
        .par_chunks(levels)
        .zip(agg.dir_minima.par_iter())
        .map(|(s, m)| {
            let min_sum = *s.iter().min().unwrap_or(&0) as u64;
            let sum_min: u64 = m.iter().map(|&v| v as u64).sum();
            (min_sum - sum_min) as f32
        })
        .collect();
    FloatMap::new(agg.width, agg.height, data).expect("dimensions are valid")
}

/// Disparities and uncertainties from one aggregation.
pub fn match_costs(
    cost: &CostVolume,
    params: &PenaltyParams,
    image: &GrayImage,
    prior: Option<&Prior>,
) -> Result<(DisparityMap, UncertaintyMap)> {
    let agg = aggregate_all(cost, params, image, prior)?;
    Ok((select_disparities(&agg), uncertainty(&agg)))
}

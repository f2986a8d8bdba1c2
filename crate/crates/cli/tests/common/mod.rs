//! Seeded synthetic stereo scenes with exact ground truth.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sgmp::io::Mask;
use sgmp::{CalibInfo, DisparityMap, GrayImage};

/// Bilinear value noise, two octaves.
pub struct Texture {
    fine: Vec<f64>,
    coarse: Vec<f64>,
    cols: usize,
    rows: usize,
}

const FINE: f64 = 2.0;
const COARSE: f64 = 7.0;

impl Texture {
    pub fn new(width: f64, height: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols = (width / FINE) as usize + 4;
        let rows = height / FINE as usize + 4;
        let fine = (0..cols * rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let coarse = (0..cols * rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Self { fine, coarse, cols, rows }
    }

    fn lattice(&self, grid: &[f64], spacing: f64, u: f64, v: f64) -> f64 {
        let (gu, gv) = (u.max(0.0) / spacing, v.max(0.0) / spacing);
        let (i, j) = (gu.floor() as usize, gv.floor() as usize);
        let (fu, fv) = (gu - i as f64, gv - j as f64);
        let at = |i: usize, j: usize| grid[j.min(self.rows - 1) * self.cols + i.min(self.cols - 1)];
        let top = at(i, j) * (1.0 - fu) + at(i + 1, j) * fu;
        let bot = at(i, j + 1) * (1.0 - fu) + at(i + 1, j + 1) * fu;
        top * (1.0 - fv) + bot * fv
    }

    pub fn sample(&self, u: f64, v: f64) -> f64 {
        128.0 + 60.0 * self.lattice(&self.fine, FINE, u, v) + 40.0 * self.lattice(&self.coarse, COARSE, u, v)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    /// Background plane `d = a x + b y + c`, with `a < 1`.
    pub plane: (f64, f64, f64),
    /// Untextured region of the background, `[x0, x1) x [y0, y1)` in left coordinates.
    pub flat: Option<(usize, usize, usize, usize)>,
    /// Fronto-parallel foreground box `[x0, x1) x [y0, y1)` at integer disparity.
    pub foreground: Option<(usize, usize, usize, usize, i32)>,
    pub noise: f64,
    pub d_max: i32,
}

pub struct Scene {
    pub left: GrayImage,
    pub right: GrayImage,
    pub gt: DisparityMap,
    /// Pixels whose match is visible in the right image.
    pub visible: Mask,
    /// Visible pixels inside the untextured region.
    pub flat_interior: Mask,
    pub calib: CalibInfo,
}

fn inside(r: (usize, usize, usize, usize), x: f64, y: usize) -> bool {
    x >= r.0 as f64 && x < r.1 as f64 && y >= r.2 && y < r.3
}

pub fn render(spec: &SceneSpec) -> Scene {
    let (w, h) = (spec.width, spec.height);
    let (a, b, c) = spec.plane;
    let bg = Texture::new(w as f64 * 2.0 + 300.0, h, spec.seed);
    let fg = Texture::new(w as f64 * 2.0 + 300.0, h, spec.seed ^ 0xF00D);
    let plane = |x: f64, y: usize| a * x + b * y as f64 + c;
    let background = |x: f64, y: usize| match spec.flat {
        Some(r) if inside(r, x, y) => 128.0,
        _ => bg.sample(x, y as f64),
    };
    let fg_rect = spec.foreground.map(|f| (f.0, f.1, f.2, f.3));
    let in_fg = |x: f64, y: usize| fg_rect.is_some_and(|r| inside(r, x, y));

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(99));
    let normal = Normal::new(0.0, spec.noise.max(1e-12)).unwrap();
    let mut quantize = |v: f64| {
        let n = if spec.noise > 0.0 { normal.sample(&mut rng) } else { 0.0 };
        (v + n).round().clamp(0.0, 255.0) as u8
    };

    let mut left = vec![0u8; w * h];
    let mut gt = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let xf = x as f64;
            let (v, d) = if in_fg(xf, y) {
                (fg.sample(xf, y as f64), spec.foreground.unwrap().4 as f64)
            } else {
                (background(xf, y), plane(xf, y))
            };
            left[y * w + x] = quantize(v);
            gt[y * w + x] = d as f32;
        }
    }
    let mut right = vec![0u8; w * h];
    for y in 0..h {
        for xr in 0..w {
            let xrf = xr as f64;
            let v = match spec.foreground {
                Some(f) if in_fg(xrf + f.4 as f64, y) => fg.sample(xrf + f.4 as f64, y as f64),
                _ => {
                    // Invert xr = x - (a x + b y + c).
                    let x = (xrf + b * y as f64 + c) / (1.0 - a);
                    background(x, y)
                }
            };
            right[y * w + xr] = quantize(v);
        }
    }
    let mut visible = vec![false; w * h];
    let mut flat = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let d = gt[y * w + x] as f64;
            let xr = x as f64 - d;
            let mut vis = xr >= 0.0;
            if vis && !in_fg(x as f64, y) {
                if let Some(f) = spec.foreground {
                    vis = !in_fg(xr + f.4 as f64, y);
                }
            }
            visible[y * w + x] = vis;
            flat[y * w + x] = vis && !in_fg(x as f64, y) && spec.flat.is_some_and(|r| inside(r, x as f64, y));
        }
    }
    let calib = CalibInfo::new(500.0, 1.0, 0, spec.d_max)
        .unwrap()
        .with_principal_point(w as f64 / 2.0, h as f64 / 2.0);
    Scene {
        left: GrayImage::new(w, h, left).unwrap(),
        right: GrayImage::new(w, h, right).unwrap(),
        gt: DisparityMap::new(w, h, gt).unwrap(),
        visible: Mask::new(w, h, visible).unwrap(),
        flat_interior: Mask::new(w, h, flat).unwrap(),
        calib,
    }
}

/// Gradient direction of the slanted plane, degrees from the x axis.
pub const SLANT_ANGLE: f64 = 80.0;

/// Plane with `|grad d| = 0.5`.
pub fn slanted_plane() -> (f64, f64, f64) {
    let t = SLANT_ANGLE.to_radians();
    (0.5 * t.cos(), 0.5 * t.sin(), 4.0)
}

/// The slanted plane with an untextured 60x60 patch, used for the
/// prior-gain check.
pub fn slanted_scene(seed: u64) -> Scene {
    render(&SceneSpec {
        width: 320,
        height: 240,
        seed,
        plane: slanted_plane(),
        flat: Some((190, 250, 90, 150)),
        foreground: None,
        noise: 2.0,
        d_max: 160,
    })
}

/// Full-resolution two-layer scene: slanted background and a box in front.
pub fn layered_scene(seed: u64, width: usize, height: usize) -> Scene {
    let s = width as f64 / 640.0;
    render(&SceneSpec {
        width,
        height,
        seed,
        plane: (0.15, 0.05, 20.0 * s),
        flat: None,
        foreground: Some((width * 2 / 5, width * 7 / 10, height / 4, height * 3 / 5, (150.0 * s).round() as i32)),
        noise: 2.0,
        d_max: (180.0 * s).round() as i32,
    })
}

/// Block-averaged ground truth at `1/k` resolution, unknown if any
/// sample in the block is unknown.
pub fn downsample_gt(gt: &DisparityMap, k: usize) -> DisparityMap {
    let (w, h) = (gt.width() / k, gt.height() / k);
    DisparityMap::from_fn(w, h, |x, y| {
        let mut sum = 0.0f64;
        for yy in y * k..(y + 1) * k {
            for xx in x * k..(x + 1) * k {
                let v = gt.get(xx, yy);
                if !v.is_finite() {
                    return f32::INFINITY;
                }
                sum += v as f64;
            }
        }
        (sum / (k * k) as f64 / k as f64) as f32
    })
}

pub fn downsample_mask(m: &Mask, k: usize) -> Mask {
    let (w, h) = (m.width() / k, m.height() / k);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            data.push((y * k..(y + 1) * k).all(|yy| (x * k..(x + 1) * k).all(|xx| m.passes(yy * m.width() + xx))));
        }
    }
    Mask::new(w, h, data).unwrap()
}

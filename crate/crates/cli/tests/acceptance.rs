//! Acceptance checks, one line per criterion.
//!
//! Real-pair checks use the Middlebury training set when
//! `SGMP_MIDDLEBURY_DIR` points at a directory of scenes (`im0.png`,
//! `im1.png`, `calib.txt`, `disp0GT.pfm` or `disp0.pfm`, optional
//! `mask0nocc.png`). Without it, the pair checks run on a synthetic
//! stand-in and the dataset-only checks are skipped.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sgmp::estimation::{downsample, oracle_prior_gs};
use sgmp::eval::{error_rate, roc_curve, Density};
use sgmp::geometry::Plane;
use sgmp::io::{parse_calib, read_gray, read_mask, read_pfm, write_calib, write_gray_png, Mask};
use sgmp::normals::{
    disparity_plane_to_normal, integrate_logz, normal_plane_to_disparity, normals_to_logz_gradients,
};
use sgmp::priors::build_offset_volume;
use sgmp::sgm::{aggregate_direction, aggregate_all, match_costs, penalty, uncertainty};
use sgmp::{
    ncc_cost, CalibInfo, CostVolume, Direction, DisparityMap, GrayImage, NormalMap, OffsetImage,
    PenaltyParams, Prior,
};
use sgmp_cli::pipeline::{estimate_prior, Inputs, Settings, Variant};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

// ---------------------------------------------------------------------------
// 1. scanline oracle

fn chain_brute_force(
    costs: &[Vec<u16>],
    img: &[u8],
    params: &PenaltyParams,
    jump: &dyn Fn(usize, i32) -> i32,
) -> u64 {
    let n = costs.len();
    let levels = costs[0].len();
    let mut labels = vec![0usize; n];
    let mut best = u64::MAX;
    loop {
        let mut e: u64 = (0..n).map(|k| costs[k][labels[k]] as u64).sum();
        for k in 1..n {
            let prev = labels[k - 1] as i32;
            let di = img[k].abs_diff(img[k - 1]);
            e += penalty(prev + jump(k - 1, prev), labels[k] as i32, params, di) as u64;
        }
        best = best.min(e);
        let mut k = 0;
        while k < n {
            labels[k] += 1;
            if labels[k] < levels {
                break;
            }
            labels[k] = 0;
            k += 1;
        }
        if k == n {
            return best;
        }
    }
}

fn criterion_scanline_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let (mut checked, mut mismatches) = (0, 0);
    for case in 0..1500 {
        let w = rng.gen_range(1..=8);
        let levels = rng.gen_range(1..=5);
        let params = PenaltyParams {
            p1: rng.gen_range(1..300),
            alpha: rng.gen_range(0.0..10.0),
            beta: rng.gen_range(1.0..20.0),
        };
        let costs: Vec<Vec<u16>> = (0..w).map(|_| (0..levels).map(|_| rng.gen()).collect()).collect();
        let img: Vec<u8> = (0..w).map(|_| rng.gen()).collect();
        let volume = CostVolume::new(w, 1, 0, levels as i32 - 1, costs.concat()).unwrap();
        let image = GrayImage::new(w, 1, img.clone()).unwrap();
        let energy = |prior: Option<&Prior>| {
            let dc = aggregate_direction(&volume, Direction::ALL[0], &params, &image, prior).unwrap();
            (0..levels).map(|d| dc.energy(w - 1, 0, d)).min().unwrap()
        };
        // Every third case uses a 3D prior, the rest 2D.
        if case % 3 == 2 {
            let lists: Vec<Vec<f64>> = (0..w)
                .map(|_| (0..rng.gen_range(0..=3)).map(|_| rng.gen_range(-2.0..7.0)).collect())
                .collect();
            let vol = build_offset_volume(w, 1, &lists, 0, levels as i32 - 1).unwrap();
            let jump = |k: usize, d: i32| vol.nearest(k + 1, 0, d) - vol.nearest(k, 0, d);
            let want = chain_brute_force(&costs, &img, &params, &jump);
            mismatches += (energy(Some(&Prior::Volume(vol.clone()))) != want) as usize;
        } else {
            let off: Vec<i32> = (0..w).map(|_| rng.gen_range(-6..12)).collect();
            let jump = |k: usize, _: i32| off[k + 1] - off[k];
            let want = chain_brute_force(&costs, &img, &params, &jump);
            let prior = Prior::Image(OffsetImage::new(w, 1, off.clone()).unwrap());
            mismatches += (energy(Some(&prior)) != want) as usize;
            let plain = chain_brute_force(&costs, &img, &params, &|_, _| 0);
            mismatches += (energy(None) != plain) as usize;
        }
        checked += 1;
    }
    let t = start.elapsed();
    verdict(
        checked >= 1000 && mismatches == 0 && t < Duration::from_secs(10),
        format!("{checked} chains, {mismatches} mismatches, {:.2}s (limit 10s)", secs(t)),
    )
}

// ---------------------------------------------------------------------------
// 2. Voronoi oracle

fn criterion_voronoi_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    let (mut instances, mut bad_cells) = (0, 0usize);
    for _ in 0..250 {
        let (w, h) = (rng.gen_range(1..=16), rng.gen_range(1..=16));
        let d_min = rng.gen_range(0..4);
        let d_max = d_min + rng.gen_range(0..32);
        let lists: Vec<Vec<f64>> = (0..w * h)
            .map(|_| {
                (0..rng.gen_range(0..=4))
                    .map(|_| {
                        let v: f64 = rng.gen_range(d_min as f64 - 6.0..d_max as f64 + 6.0);
                        // Half-integers exercise the tie rules.
                        if rng.gen_bool(0.3) {
                            (v * 2.0).round() / 2.0
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        let vol = build_offset_volume(w, h, &lists, d_min, d_max).unwrap();
        for (i, list) in lists.iter().enumerate() {
            for d in d_min..=d_max {
                let df = d as f64;
                let nearest = list
                    .iter()
                    .copied()
                    .min_by(|a, b| (a - df).abs().total_cmp(&(b - df).abs()).then(a.total_cmp(b)))
                    .unwrap_or(0.0);
                let want = nearest.round().clamp(0.0, 65535.0) as i32;
                bad_cells += (vol.nearest(i % w, i / w, d) != want) as usize;
            }
        }
        instances += 1;
    }
    let t = start.elapsed();
    verdict(
        instances >= 200 && bad_cells == 0 && t < Duration::from_secs(5),
        format!("{instances} volumes, {bad_cells} differing cells, {:.2}s (limit 5s)", secs(t)),
    )
}

// ---------------------------------------------------------------------------
// Real pair or stand-in

struct Pair {
    name: String,
    left: GrayImage,
    right: GrayImage,
    calib: CalibInfo,
    gt: Option<DisparityMap>,
    mask: Option<Mask>,
}

fn dataset_dir() -> Option<PathBuf> {
    std::env::var_os("SGMP_MIDDLEBURY_DIR").map(PathBuf::from).filter(|p| p.is_dir())
}

fn quarter_gt(gt: &DisparityMap) -> DisparityMap {
    common::downsample_gt(gt, 4)
}

fn load_pair(dir: &Path) -> Option<Pair> {
    let left = read_gray(dir.join("im0.png")).ok()?;
    let right = read_gray(dir.join("im1.png")).ok()?;
    let calib = parse_calib(dir.join("calib.txt")).ok()?;
    let gt = read_pfm(dir.join("disp0GT.pfm")).or_else(|_| read_pfm(dir.join("disp0.pfm"))).ok();
    let mask = read_mask(dir.join("mask0nocc.png")).ok();
    Some(Pair {
        name: dir.file_name()?.to_string_lossy().into_owned(),
        left: downsample(&left, 4).ok()?,
        right: downsample(&right, 4).ok()?,
        calib: calib.downscaled(4),
        gt: gt.as_ref().map(quarter_gt),
        mask: mask.as_ref().map(|m| common::downsample_mask(m, 4)),
    })
}

fn dataset_pairs() -> Vec<Pair> {
    let Some(dir) = dataset_dir() else { return Vec::new() };
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map(|r| r.flatten().map(|e| e.path()).filter(|p| p.is_dir()).collect())
        .unwrap_or_default();
    entries.sort();
    entries.iter().filter_map(|p| load_pair(p)).collect()
}

fn stand_in_pair() -> Pair {
    let s = common::layered_scene(7, 640, 480);
    Pair {
        name: "synthetic stand-in".into(),
        left: downsample(&s.left, 4).unwrap(),
        right: downsample(&s.right, 4).unwrap(),
        calib: s.calib.downscaled(4),
        gt: Some(quarter_gt(&s.gt)),
        mask: Some(common::downsample_mask(&s.visible, 4)),
    }
}

fn match_pair(p: &Pair, prior: Option<&Prior>) -> (DisparityMap, DisparityMap) {
    let cost = ncc_cost(&p.left, &p.right, &p.calib, &Default::default()).unwrap();
    match_costs(&cost, &PenaltyParams::default(), &p.left, prior).unwrap()
}

// ---------------------------------------------------------------------------
// 3. uncertainty lower bound

fn criterion_uncertainty_bound(pair: &Pair) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let mut negative = 0usize;
    for _ in 0..40 {
        let (w, h) = (rng.gen_range(1..24), rng.gen_range(1..24));
        let levels = rng.gen_range(1..12);
        let cost = CostVolume::new(w, h, 0, levels - 1, (0..w * h * levels as usize).map(|_| rng.gen()).collect())
            .unwrap();
        let img = GrayImage::from_fn(w, h, |_, _| rng.gen());
        let prior = match rng.gen_range(0..3) {
            0 => None,
            1 => Some(Prior::Image(OffsetImage::new(w, h, (0..w * h).map(|_| rng.gen_range(0..levels)).collect()).unwrap())),
            _ => {
                let lists: Vec<Vec<f64>> =
                    (0..w * h).map(|_| (0..rng.gen_range(0..3)).map(|_| rng.gen_range(0.0..levels as f64)).collect()).collect();
                Some(Prior::Volume(build_offset_volume(w, h, &lists, 0, levels - 1).unwrap()))
            }
        };
        let agg = aggregate_all(&cost, &PenaltyParams::default(), &img, prior.as_ref()).unwrap();
        negative += uncertainty(&agg).data().iter().filter(|&&u| !(u >= 0.0)).count();
    }
    let (_, unc) = match_pair(pair, None);
    let neg_pair = unc.data().iter().filter(|&&u| !(u >= 0.0)).count();
    let t = start.elapsed();
    verdict(
        negative == 0 && neg_pair == 0 && t < Duration::from_secs(10),
        format!(
            "40 random volumes: {negative} negative; {} ({}x{}): {neg_pair} negative; {:.2}s (limit 10s)",
            pair.name,
            pair.left.width(),
            pair.left.height(),
            secs(t)
        ),
    )
}

// ---------------------------------------------------------------------------
// 4. constant prior is a no-op

fn criterion_prior_noop(pair: &Pair) -> Outcome {
    let (w, h) = (pair.left.width(), pair.left.height());
    let (base_d, base_u) = match_pair(pair, None);
    let bits = |m: &DisparityMap| m.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let mut same = true;
    for c in [0, 7] {
        let img = Prior::Image(OffsetImage::constant(w, h, c));
        let vol = Prior::Volume(
            build_offset_volume(w, h, &vec![vec![c as f64]; w * h], pair.calib.d_min, pair.calib.d_max).unwrap(),
        );
        for prior in [img, vol] {
            let (d, u) = match_pair(pair, Some(&prior));
            same &= bits(&d) == bits(&base_d) && bits(&u) == bits(&base_u);
        }
    }
    verdict(
        same,
        format!("{} ({w}x{h}): constant offset image and volume vs no prior, bitwise", pair.name),
    )
}

// ---------------------------------------------------------------------------
// 5. geometry round trips

fn criterion_geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5005);
    let calib = CalibInfo::new(700.0, 0.16, 0, 127).unwrap().with_principal_point(360.0, 250.0);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let plane: Plane<f64> = Plane::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.5..200.0));
        let (n, hh) = disparity_plane_to_normal(&plane, &calib).unwrap();
        let back = normal_plane_to_disparity(n, hh, &calib).unwrap();
        worst = worst.max((back.a - plane.a).abs()).max((back.b - plane.b).abs()).max((back.c - plane.c).abs());
    }

    let (w, h) = (192, 128);
    let c2 = CalibInfo::new(400.0, 1.0, 0, 63).unwrap().with_principal_point(96.0, 64.0);
    let nv = [0.35, -0.25, 0.9];
    let len = (nv[0] * nv[0] + nv[1] * nv[1] + nv[2] * nv[2]) as f64;
    let n = [nv[0] / len.sqrt(), nv[1] / len.sqrt(), nv[2] / len.sqrt()];
    let depth = |x: usize, y: usize| {
        let (u, v) = (x as f64 - c2.cx, y as f64 - c2.cy);
        2.0 * c2.f / (n[0] * u + n[1] * v + c2.f * n[2])
    };
    let nm = NormalMap::from_fn(w, h, |_, _| Some(n)).unwrap();
    let zs = integrate_logz(&normals_to_logz_gradients(&nm, &c2), 64).unwrap();
    let mut rel = 0.0f64;
    for y in 0..h {
        for x in 0..w {
            let a = zs.anchors()[zs.region(x, y).unwrap() as usize];
            let scale = depth(a % w, a / w) / zs.z()[a];
            rel = rel.max((zs.get(x, y) * scale - depth(x, y)).abs() / depth(x, y));
        }
    }
    verdict(
        worst < 1e-9 && rel < 1e-3,
        format!("plane/normal round trip max error {worst:.2e} (limit 1e-9); integrated depth max relative error {rel:.2e} (limit 1e-3)"),
    )
}

// ---------------------------------------------------------------------------
// 6. synthetic slanted scene

fn criterion_slanted_gain() -> Outcome {
    let start = Instant::now();
    let s = common::slanted_scene(6006);
    let (a, b, c) = common::slanted_plane();
    let truth = Plane::new(a, b, c);
    let prior = Prior::Image(
        sgmp::priors::rasterize_surface(&sgmp::geometry::Surface::from_plane(320, 240, &truth)).unwrap(),
    );
    let cost = ncc_cost(&s.left, &s.right, &s.calib, &Default::default()).unwrap();
    let p = PenaltyParams::default();
    let (base, _) = match_costs(&cost, &p, &s.left, None).unwrap();
    let (with, _) = match_costs(&cost, &p, &s.left, Some(&prior)).unwrap();
    let bad = |d| error_rate(d, &s.gt, 2.0, Some(&s.visible), Density::Dense).unwrap();
    let bad_in = |d| error_rate(d, &s.gt, 2.0, Some(&s.flat_interior), Density::Dense).unwrap();
    let (b_all, p_all) = (bad(&base), bad(&with));
    let (b_in, p_in) = (bad_in(&base), bad_in(&with));
    let t = start.elapsed();
    verdict(
        p_all <= b_all && b_in >= 2.0 * p_in,
        format!(
            "bad-2.0 all {:.2}% baseline vs {:.2}% prior; untextured interior {:.2}% vs {:.2}%; {:.1}s",
            100.0 * b_all,
            100.0 * p_all,
            100.0 * b_in,
            100.0 * p_in,
            secs(t)
        ),
    )
}

// ---------------------------------------------------------------------------
// 7, 8. dataset regressions

fn bad2(p: &Pair, d: &DisparityMap) -> f64 {
    error_rate(d, p.gt.as_ref().unwrap(), 2.0, p.mask.as_ref(), Density::Dense).unwrap()
}

fn epi_disparity(p: &Pair) -> DisparityMap {
    let inputs = Inputs {
        left: p.left.clone(),
        right: p.right.clone(),
        calib: p.calib,
        gt: None,
        normals: None,
        segments: None,
    };
    let prior = estimate_prior(Variant::Epi, &inputs, &Settings::default()).unwrap().prior;
    match_pair(p, prior.as_ref()).0
}

fn criterion_adirondack(pairs: &[Pair]) -> Outcome {
    let Some(p) = pairs.iter().find(|p| p.name.starts_with("Adirondack") && p.gt.is_some()) else {
        return Outcome::Skip("Adirondack not found (set SGMP_MIDDLEBURY_DIR)".into());
    };
    let start = Instant::now();
    let base = bad2(p, &match_pair(p, None).0);
    let epi = bad2(p, &epi_disparity(p));
    let gs_prior = Prior::Image(oracle_prior_gs(p.gt.as_ref().unwrap()).unwrap());
    let gs = bad2(p, &match_pair(p, Some(&gs_prior)).0);
    verdict(
        epi <= base && gs <= 0.5 * base,
        format!(
            "bad-2.0 baseline {:.2}%, EPi {:.2}%, GS {:.2}%; {:.0}s",
            100.0 * base,
            100.0 * epi,
            100.0 * gs,
            secs(start.elapsed())
        ),
    )
}

fn criterion_never_worse(pairs: &[Pair]) -> Outcome {
    let with_gt: Vec<&Pair> = pairs.iter().filter(|p| p.gt.is_some()).collect();
    if with_gt.is_empty() {
        return Outcome::Skip("no dataset pairs (set SGMP_MIDDLEBURY_DIR)".into());
    }
    let mut worst: (f64, String) = (f64::NEG_INFINITY, String::new());
    for p in &with_gt {
        let diff = 100.0 * (bad2(p, &epi_disparity(p)) - bad2(p, &match_pair(p, None).0));
        if diff > worst.0 {
            worst = (diff, p.name.clone());
        }
    }
    verdict(
        worst.0 <= 2.0,
        format!("{} pairs; worst EPi - baseline = {:+.2} points ({})", with_gt.len(), worst.0, worst.1),
    )
}

// ---------------------------------------------------------------------------
// 9. ROC contract

fn criterion_roc(pair: &Pair) -> Outcome {
    let (d, u) = match_pair(pair, None);
    let gt = pair.gt.as_ref().unwrap();
    let mask = pair.mask.as_ref();
    let dense = error_rate(&d, gt, 2.0, mask, Density::Dense).unwrap();
    let mut ok = true;
    let mut points = 0;
    for steps in [1, 10, 50] {
        let r = roc_curve(&d, &u, gt, 2.0, mask, steps).unwrap();
        let last = r.last().unwrap();
        ok &= last.error_rate == dense && last.completeness == 1.0;
        ok &= r.windows(2).all(|w| w[0].completeness <= w[1].completeness);
        points += r.len();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9009);
    for _ in 0..50 {
        let n = rng.gen_range(1..200);
        let gt = DisparityMap::from_fn(n, 1, |_, _| if rng.gen_bool(0.9) { rng.gen_range(0.0..20.0) } else { f32::INFINITY });
        let d = DisparityMap::from_fn(n, 1, |_, _| rng.gen_range(0.0..20.0));
        let u = DisparityMap::from_fn(n, 1, |_, _| rng.gen_range(0..40) as f32);
        let (Ok(r), Ok(dense)) = (roc_curve(&d, &u, &gt, 2.0, None, rng.gen_range(1..30)), error_rate(&d, &gt, 2.0, None, Density::Dense)) else {
            continue;
        };
        ok &= r.last().unwrap().error_rate == dense && r.last().unwrap().completeness == 1.0;
        ok &= r.windows(2).all(|w| w[0].completeness <= w[1].completeness);
    }
    verdict(
        ok,
        format!("{}: {points} points over 3 sweeps plus 50 random maps; final point = dense rate, completeness monotone", pair.name),
    )
}

// ---------------------------------------------------------------------------
// 10. CLI determinism

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_sgmp")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("sgmp {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
    }
}

fn criterion_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let s = common::layered_scene(10, 160, 120);
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    write_gray_png(&s.left, p("im0.png")).unwrap();
    write_gray_png(&s.right, p("im1.png")).unwrap();
    write_calib(&s.calib, p("calib.txt")).unwrap();
    sgmp::io::write_pfm(&s.gt, p("gt.pfm")).unwrap();

    let mut files: Vec<(String, Vec<Vec<u8>>)> = Vec::new();
    let record = |name: String, path: String, files: &mut Vec<(String, Vec<Vec<u8>>)>| {
        let bytes = std::fs::read(&path).unwrap_or_default();
        match files.iter_mut().find(|f| f.0 == name) {
            Some(f) => f.1.push(bytes),
            None => files.push((name, vec![bytes])),
        }
    };
    for (run, threads) in ["1", "8", "8"].iter().enumerate() {
        let out = p(&format!("run{run}"));
        let steps: Vec<Vec<String>> = vec![
            vec!["--threads", threads, "match", "--variant", "epi", "--seed", "3", "--superpixels", "100", "--left", &p("im0.png"), "--right", &p("im1.png"), "--calib", &p("calib.txt"), "--out-dir", &out],
            vec!["--threads", threads, "priors", "--variant", "epv", "--seed", "3", "--left", &p("im0.png"), "--right", &p("im1.png"), "--calib", &p("calib.txt"), "--out", &format!("{out}/prior.offv")],
            vec!["--threads", threads, "roc", "--disp", &format!("{out}/disp0.pfm"), "--uncert", &format!("{out}/uncert0.pfm"), "--gt", &p("gt.pfm"), "--out", &format!("{out}/roc.csv")],
        ]
        .into_iter()
        .map(|v| v.into_iter().map(String::from).collect())
        .collect();
        for args in &steps {
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            if let Err(e) = run_cli(&args) {
                return Outcome::Fail(e);
            }
        }
        for f in ["disp0.pfm", "uncert0.pfm", "prior.offv", "prior.offv.planes.txt", "roc.csv"] {
            record(f.to_string(), format!("{out}/{f}"), &mut files);
        }
    }
    let differing: Vec<&str> = files
        .iter()
        .filter(|(_, runs)| runs.iter().any(|r| r != &runs[0] || r.is_empty()))
        .map(|(n, _)| n.as_str())
        .collect();
    verdict(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} outputs byte-identical across --threads 1/8/8", files.len())
        } else {
            format!("differing or missing: {}", differing.join(", "))
        },
    )
}

fn main() {
    let pairs = dataset_pairs();
    let real = pairs.iter().find(|p| p.gt.is_some());
    let stand_in;
    let pair = match real {
        Some(p) => p,
        None => {
            stand_in = stand_in_pair();
            &stand_in
        }
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("scanline oracle", Box::new(criterion_scanline_oracle)),
        ("voronoi oracle", Box::new(criterion_voronoi_oracle)),
        ("uncertainty lower bound", Box::new(|| criterion_uncertainty_bound(pair))),
        ("prior no-op equivalence", Box::new(|| criterion_prior_noop(pair))),
        ("geometry round trips", Box::new(criterion_geometry)),
        ("synthetic slanted-scene gain", Box::new(criterion_slanted_gain)),
        ("middlebury quarter-res regression", Box::new(|| criterion_adirondack(&pairs))),
        ("never significantly worse", Box::new(|| criterion_never_worse(&pairs))),
        ("roc contract", Box::new(|| criterion_roc(pair))),
        ("determinism", Box::new(criterion_determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (tag, detail) = match check() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("{tag} {:>2} {name}: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

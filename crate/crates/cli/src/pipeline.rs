//! Prior construction for each variant and the matching run.

use std::collections::HashMap;
use std::path::Path;

use sgmp::estimation::{
    build_epi_prior, build_epv_prior, cluster_planes, downsample, oracle_prior_gp, oracle_prior_gs,
    superpixels, ClusterParams, SlicParams,
};
use sgmp::geometry::Surface;
use sgmp::io::{read_offset_image, read_offset_volume, write_offset_image, write_offset_volume};
use sgmp::normals::{
    integrate_logz, manhattan_surfaces, normals_to_logz_gradients, plane_family_from_surface,
    ConstrainedFitParams,
};
use sgmp::priors::{build_offset_volume, offset_volume_from_family, rasterize_surface};
use sgmp::sgm::match_costs;
use sgmp::{
    ncc_cost, CalibInfo, CostVolume, DisparityMap, GrayImage, NccParams, NormalMap, PenaltyParams,
    PlaneHypothesisSet, Prior, UncertaintyMap,
};

use crate::{usage, CliResult};

/// Prior variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Variant {
    /// Plain SGM.
    None,
    /// Estimated planes per superpixel, offset image.
    Epi,
    /// Estimated planes bounded by their hulls, offset volume.
    Epv,
    /// Ground-truth surface.
    Gs,
    /// Piecewise-planar ground truth.
    Gp,
    /// Normals integrated to one surface, offset image.
    Gni,
    /// Normals integrated to a family of surfaces, offset volume.
    Gnv,
    /// Per-segment planes with known normals, offset volume.
    Mw,
}

#[derive(Clone, Debug)]
pub struct Settings {
    pub penalties: PenaltyParams,
    pub ncc: NccParams,
    pub coarse: usize,
    pub cluster: ClusterParams,
    pub superpixels: usize,
    pub theta: f64,
    pub family_levels: usize,
    pub cell_size: usize,
    pub fit: ConstrainedFitParams,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            penalties: PenaltyParams::default(),
            ncc: NccParams::default(),
            coarse: 4,
            cluster: ClusterParams::default(),
            superpixels: 1000,
            theta: 0.3,
            family_levels: 16,
            cell_size: 64,
            fit: ConstrainedFitParams {
                max_peaks: 4,
                ..ConstrainedFitParams::default()
            },
        }
    }
}

/// Inputs a variant may need.
#[derive(Clone, Debug)]
pub struct Inputs {
    pub left: GrayImage,
    pub right: GrayImage,
    pub calib: CalibInfo,
    pub gt: Option<DisparityMap>,
    pub normals: Option<NormalMap>,
    /// Segment labels and their normals.
    pub segments: Option<(GrayImage, HashMap<u32, [f64; 3]>)>,
}

#[derive(Clone, Debug, Default)]
pub struct PriorOutput {
    pub prior: Option<Prior>,
    pub hypotheses: Option<PlaneHypothesisSet>,
}

/// SGM without prior on the `1/k` downsampled pair.
pub fn coarse_sgm(inputs: &Inputs, s: &Settings) -> CliResult<(DisparityMap, UncertaintyMap)> {
    let k = s.coarse;
    let left = downsample(&inputs.left, k)?;
    let right = downsample(&inputs.right, k)?;
    let calib = inputs.calib.downscaled(k);
    let cost = ncc_cost(&left, &right, &calib, &s.ncc)?;
    Ok(match_costs(&cost, &s.penalties, &left, None)?)
}

fn coarse_hypotheses(inputs: &Inputs, s: &Settings) -> CliResult<PlaneHypothesisSet> {
    let (disp, unc) = coarse_sgm(inputs, s)?;
    Ok(cluster_planes(&disp, Some(&unc), &s.cluster)?)
}

fn require<'a, T>(v: &'a Option<T>, variant: Variant, what: &str) -> CliResult<&'a T> {
    v.as_ref()
        .ok_or_else(|| usage(format!("variant {variant:?} needs {what}").to_lowercase()))
}

fn normal_map(inputs: &Inputs, variant: Variant) -> CliResult<NormalMap> {
    if let Some(n) = &inputs.normals {
        return Ok(n.clone());
    }
    if let Some((labels, table)) = &inputs.segments {
        return Ok(NormalMap::from_labels(labels, table)?);
    }
    Err(usage(format!("variant {variant:?} needs --normals or --labels with --label-normals").to_lowercase()))
}

/// Integrated normals scaled to `levels` depths.
pub fn normal_family(nm: &NormalMap, calib: &CalibInfo, s: &Settings, levels: usize) -> CliResult<Vec<Surface<f64>>> {
    let grad = normals_to_logz_gradients(nm, calib);
    let zs = integrate_logz(&grad, s.cell_size)?;
    Ok(plane_family_from_surface(&zs, calib, levels)?)
}

pub fn estimate_prior(variant: Variant, inputs: &Inputs, s: &Settings) -> CliResult<PriorOutput> {
    let (w, h) = (inputs.left.width(), inputs.left.height());
    let calib = &inputs.calib;
    let slic = SlicParams::default();
    Ok(match variant {
        Variant::None => PriorOutput::default(),
        Variant::Gs => {
            let gt = require(&inputs.gt, variant, "--gt")?;
            PriorOutput {
                prior: Some(Prior::Image(oracle_prior_gs(gt)?)),
                hypotheses: None,
            }
        }
        Variant::Gp => {
            let gt = require(&inputs.gt, variant, "--gt")?;
            let sp = superpixels(&inputs.left, s.superpixels, &slic);
            let hs = cluster_planes(gt, None, &s.cluster)?;
            let prior = oracle_prior_gp(gt, &sp, &s.cluster, s.theta)?;
            PriorOutput {
                prior: Some(Prior::Image(prior)),
                hypotheses: Some(hs),
            }
        }
        Variant::Epi => {
            let hs = coarse_hypotheses(inputs, s)?;
            let sp = superpixels(&inputs.left, s.superpixels, &slic);
            PriorOutput {
                prior: Some(Prior::Image(build_epi_prior(&hs, &sp, s.coarse, s.theta)?)),
                hypotheses: Some(hs),
            }
        }
        Variant::Epv => {
            let hs = coarse_hypotheses(inputs, s)?;
            let vol = build_epv_prior(&hs, s.coarse, w, h, calib.d_min, calib.d_max)?;
            PriorOutput {
                prior: Some(Prior::Volume(vol)),
                hypotheses: Some(hs),
            }
        }
        Variant::Gni => {
            let nm = normal_map(inputs, variant)?;
            let fam = normal_family(&nm, calib, s, 1)?;
            let mut surface = fam.into_iter().next().expect("one level");
            for v in surface.values_mut() {
                if !v.is_finite() {
                    *v = 0.0;
                }
            }
            PriorOutput {
                prior: Some(Prior::Image(rasterize_surface(&surface)?)),
                hypotheses: None,
            }
        }
        Variant::Gnv => {
            let nm = normal_map(inputs, variant)?;
            let fam = normal_family(&nm, calib, s, s.family_levels)?;
            PriorOutput {
                prior: Some(Prior::Volume(offset_volume_from_family(&fam, w, h, calib.d_min, calib.d_max)?)),
                hypotheses: None,
            }
        }
        Variant::Mw => {
            let (labels, table) = require(&inputs.segments, variant, "--labels and --label-normals")?;
            let (coarse, _) = coarse_sgm(inputs, s)?;
            let lists = manhattan_surfaces(labels, table, &coarse, s.coarse, calib, &s.fit)?;
            PriorOutput {
                prior: Some(Prior::Volume(build_offset_volume(w, h, &lists, calib.d_min, calib.d_max)?)),
                hypotheses: None,
            }
        }
    })
}

/// Matching cost from the images, or a precomputed volume if given.
pub fn cost_volume(inputs: &Inputs, s: &Settings, precomputed: Option<CostVolume>) -> CliResult<CostVolume> {
    match precomputed {
        Some(c) => Ok(c),
        None => Ok(ncc_cost(&inputs.left, &inputs.right, &inputs.calib, &s.ncc)?),
    }
}

pub fn run_match(
    inputs: &Inputs,
    s: &Settings,
    cost: &CostVolume,
    prior: Option<&Prior>,
) -> CliResult<(DisparityMap, UncertaintyMap)> {
    Ok(match_costs(cost, &s.penalties, &inputs.left, prior)?)
}

/// `.offv` files hold offset volumes, anything else an offset image.
pub fn is_volume_path(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("offv"))
}

pub fn load_prior(path: &Path, calib: &CalibInfo) -> CliResult<Prior> {
    if is_volume_path(path) {
        Ok(Prior::Volume(read_offset_volume(path, calib.d_min)?))
    } else {
        Ok(Prior::Image(read_offset_image(path)?))
    }
}

pub fn save_prior(prior: &Prior, path: &Path) -> CliResult<()> {
    match (prior, is_volume_path(path)) {
        (Prior::Image(img), false) => write_offset_image(img, path)?,
        (Prior::Volume(vol), true) => write_offset_volume(vol, path)?,
        (Prior::Image(_), true) => return Err(usage("an offset image cannot be written to a .offv file")),
        (Prior::Volume(_), false) => return Err(usage("offset volumes must be written to a .offv file")),
    }
    Ok(())
}

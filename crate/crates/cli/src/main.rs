use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand};

use sgmp::cost::load_cost_volume;
use sgmp::estimation::ClusterParams;
use sgmp::eval::{error_map, error_rate, roc_curve, write_roc_csv, Density};
use sgmp::io::{parse_calib, read_gray, read_mask, read_pfm, read_pfm_rgb, write_gray_png, write_pfm, Mask};
use sgmp::normals::{parse_label_normals, ConstrainedFitParams};
use sgmp::{DisparityMap, FloatMap, NccParams, NormalMap, PenaltyParams};
use sgmp_cli::config::{config_path, read_config, splice_config};
use sgmp_cli::pipeline::{
    cost_volume, estimate_prior, load_prior, normal_family, run_match, save_prior, Inputs, Settings, Variant,
};
use sgmp_cli::{usage, CliError, CliResult};

/// Semi-global stereo matching with surface-orientation priors.
#[derive(Parser, Debug)]
#[command(name = "sgmp", version, args_override_self = true)]
struct Cli {
    /// Worker threads (1 = fully sequential).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// key=value file with defaults for any long flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Match a rectified pair, writing disp0.pfm and uncert0.pfm.
    Match(MatchArgs),
    /// Compute a prior and write it as a 16-bit PGM or an .offv volume.
    Priors(PriorArgs),
    /// bad-t error rate and error map.
    Eval(EvalArgs),
    /// Completeness / error sweep over the uncertainty.
    Roc(RocArgs),
    /// Integrate a normal map and write the surface family as an .offv volume.
    Normals(NormalsArgs),
}

#[derive(Args, Debug, Clone)]
struct PairArgs {
    #[arg(long)]
    left: Option<PathBuf>,
    #[arg(long)]
    right: Option<PathBuf>,
    /// Middlebury calib.txt.
    #[arg(long)]
    calib: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct TuningArgs {
    #[arg(long, default_value_t = 100)]
    p1: u32,
    #[arg(long, default_value_t = 8.0)]
    alpha: f64,
    #[arg(long, default_value_t = 10.0)]
    beta: f64,
    /// NCC window side length (odd).
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    /// Vertical disparity tolerance in rows (0 or 1).
    #[arg(long, default_value_t = 1)]
    vertical_tol: usize,
    /// Downsampling factor for the coarse pass of estimated priors.
    #[arg(long, default_value_t = 4)]
    coarse: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// RANSAC inlier distance at coarse scale.
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// RANSAC trials per plane.
    #[arg(long, default_value_t = 500)]
    iterations: usize,
    #[arg(long, default_value_t = 24)]
    max_planes: usize,
    /// Minimum plane support as a fraction of known pixels.
    #[arg(long, default_value_t = 0.01)]
    min_support: f64,
    /// Target superpixel count.
    #[arg(long, default_value_t = 1000)]
    superpixels: usize,
    /// Minimum vote share of a superpixel's plane.
    #[arg(long, default_value_t = 0.3)]
    theta: f64,
    /// Depth levels of normal-derived surface families.
    #[arg(long, default_value_t = 16)]
    family_levels: usize,
    /// Integration cell size in pixels.
    #[arg(long, default_value_t = 64)]
    cell_size: usize,
    /// Planes per segment for the mw variant.
    #[arg(long, default_value_t = 4)]
    max_peaks: usize,
}

impl TuningArgs {
    fn settings(&self) -> Settings {
        Settings {
            penalties: PenaltyParams {
                p1: self.p1,
                alpha: self.alpha,
                beta: self.beta,
            },
            ncc: NccParams {
                window: self.window,
                eps: self.eps,
                vertical_tol: self.vertical_tol,
                ..NccParams::default()
            },
            coarse: self.coarse,
            cluster: ClusterParams {
                tau: self.tau,
                iterations: self.iterations,
                max_planes: self.max_planes,
                min_support: self.min_support,
                seed: self.seed,
                ..ClusterParams::default()
            },
            superpixels: self.superpixels,
            theta: self.theta,
            family_levels: self.family_levels,
            cell_size: self.cell_size,
            fit: ConstrainedFitParams {
                max_peaks: self.max_peaks,
                ..ConstrainedFitParams::default()
            },
        }
    }
}

#[derive(Args, Debug, Clone)]
struct PriorInputArgs {
    #[arg(long, value_enum, default_value_t = Variant::None)]
    variant: Variant,
    /// Ground-truth disparities (gs, gp).
    #[arg(long)]
    gt: Option<PathBuf>,
    /// 3-channel PFM normal map (gni, gnv).
    #[arg(long)]
    normals: Option<PathBuf>,
    /// Segment label image (mw, or gni/gnv without --normals).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Lines of `label nx ny nz`.
    #[arg(long)]
    label_normals: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MatchArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[command(flatten)]
    prior: PriorInputArgs,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Use this offset image (.pgm) or volume (.offv) instead of computing one.
    #[arg(long = "prior")]
    prior_file: Option<PathBuf>,
    /// Precomputed OFFC cost volume instead of NCC.
    #[arg(long)]
    cost: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct PriorArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[command(flatten)]
    prior: PriorInputArgs,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Output file; .offv for volume variants.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    disp: Option<PathBuf>,
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Evaluation mask, 255 = evaluate.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    threshold: f64,
    /// Leave unmatched pixels out instead of counting them as errors.
    #[arg(long, action = ArgAction::SetTrue)]
    sparse: bool,
    /// Name written in the first CSV column.
    #[arg(long, default_value = "pair")]
    name: String,
    /// Metrics CSV (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    error_map: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RocArgs {
    #[arg(long)]
    disp: Option<PathBuf>,
    #[arg(long)]
    uncert: Option<PathBuf>,
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    threshold: f64,
    /// Number of uncertainty quantiles.
    #[arg(long, default_value_t = 20)]
    steps: usize,
    /// CSV output (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NormalsArgs {
    #[arg(long)]
    calib: Option<PathBuf>,
    #[arg(long)]
    normals: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    label_normals: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    cell_size: usize,
    #[arg(long, default_value_t = 16)]
    family_levels: usize,
    /// .offv output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Integrated relative depth as PFM.
    #[arg(long)]
    depth_out: Option<PathBuf>,
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    p.as_deref().ok_or_else(|| usage(format!("missing --{flag}")))
}

fn ctx<T>(r: sgmp::Result<T>, what: &Path) -> CliResult<T> {
    r.with_context(|| format!("{}", what.display())).map_err(CliError::Data)
}

fn load_inputs(pair: &PairArgs, p: &PriorInputArgs) -> CliResult<Inputs> {
    let (l, r, c) = (need(&pair.left, "left")?, need(&pair.right, "right")?, need(&pair.calib, "calib")?);
    let needs_gt = matches!(p.variant, Variant::Gs | Variant::Gp);
    if needs_gt && p.gt.is_none() {
        return Err(usage(format!("--variant {:?} requires --gt", p.variant).to_lowercase()));
    }
    let left = ctx(read_gray(l), l)?;
    let right = ctx(read_gray(r), r)?;
    let calib = ctx(parse_calib(c), c)?;
    let gt = match &p.gt {
        Some(g) => Some(ctx(read_pfm(g), g)?),
        None => None,
    };
    let normals = match &p.normals {
        Some(n) => {
            let (w, h, px) = ctx(read_pfm_rgb(n), n)?;
            Some(NormalMap::from_rgb(w, h, &px)?)
        }
        None => None,
    };
    let segments = load_segments(&p.labels, &p.label_normals)?;
    Ok(Inputs {
        left,
        right,
        calib,
        gt,
        normals,
        segments,
    })
}

type Segments = Option<(sgmp::GrayImage, HashMap<u32, [f64; 3]>)>;

fn load_segments(labels: &Option<PathBuf>, table: &Option<PathBuf>) -> CliResult<Segments> {
    match (labels, table) {
        (Some(l), Some(t)) => {
            let img = ctx(read_gray(l), l)?;
            let text = std::fs::read_to_string(t).with_context(|| t.display().to_string())?;
            Ok(Some((img, ctx(parse_label_normals(&text), t)?)))
        }
        (None, None) => Ok(None),
        _ => Err(usage("--labels and --label-normals go together")),
    }
}

fn cmd_match(a: &MatchArgs) -> CliResult<()> {
    let inputs = load_inputs(&a.pair, &a.prior)?;
    let s = a.tuning.settings();
    let prior = match &a.prior_file {
        Some(p) => Some(load_prior(p, &inputs.calib)?),
        None => estimate_prior(a.prior.variant, &inputs, &s)?.prior,
    };
    let pre = match &a.cost {
        Some(p) => Some(ctx(load_cost_volume(p, &inputs.calib), p)?),
        None => None,
    };
    let cost = cost_volume(&inputs, &s, pre)?;
    let (disp, unc) = run_match(&inputs, &s, &cost, prior.as_ref())?;
    std::fs::create_dir_all(&a.out_dir).with_context(|| a.out_dir.display().to_string())?;
    write_pfm(&disp, a.out_dir.join("disp0.pfm"))?;
    write_pfm(&unc, a.out_dir.join("uncert0.pfm"))?;
    Ok(())
}

fn cmd_priors(a: &PriorArgs) -> CliResult<()> {
    let out = need(&a.out, "out")?;
    if a.prior.variant == Variant::None {
        return Err(usage("--variant none has no prior to write"));
    }
    let inputs = load_inputs(&a.pair, &a.prior)?;
    let res = estimate_prior(a.prior.variant, &inputs, &a.tuning.settings())?;
    save_prior(res.prior.as_ref().expect("variant has a prior"), out)?;
    if let Some(hs) = res.hypotheses {
        let mut side = out.as_os_str().to_owned();
        side.push(".planes.txt");
        hs.write_text(PathBuf::from(side))?;
    }
    Ok(())
}

fn load_mask(p: &Option<PathBuf>) -> CliResult<Option<Mask>> {
    match p {
        Some(m) => Ok(Some(ctx(read_mask(m), m)?)),
        None => Ok(None),
    }
}

fn output(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| p.display().to_string())?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_eval(a: &EvalArgs) -> CliResult<()> {
    let (dp, gp) = (need(&a.disp, "disp")?, need(&a.gt, "gt")?);
    let disp = ctx(read_pfm(dp), dp)?;
    let gt = ctx(read_pfm(gp), gp)?;
    let mask = load_mask(&a.mask)?;
    let density = if a.sparse { Density::Sparse } else { Density::Dense };
    let rate = error_rate(&disp, &gt, a.threshold, mask.as_ref(), density)?;
    let mut out = output(&a.out)?;
    writeln!(out, "name,threshold,error_rate").context("writing metrics")?;
    writeln!(out, "{},{:.6},{:.6}", a.name, a.threshold, rate).context("writing metrics")?;
    out.flush().context("writing metrics")?;
    if let Some(p) = &a.error_map {
        write_gray_png(&error_map(&disp, &gt, a.threshold, mask.as_ref())?, p)?;
    }
    Ok(())
}

fn cmd_roc(a: &RocArgs) -> CliResult<()> {
    let (dp, up, gp) = (need(&a.disp, "disp")?, need(&a.uncert, "uncert")?, need(&a.gt, "gt")?);
    let disp = ctx(read_pfm(dp), dp)?;
    let unc = ctx(read_pfm(up), up)?;
    let gt = ctx(read_pfm(gp), gp)?;
    let mask = load_mask(&a.mask)?;
    let pts = roc_curve(&disp, &unc, &gt, a.threshold, mask.as_ref(), a.steps)?;
    let mut out = output(&a.out)?;
    write_roc_csv(&pts, &mut out)?;
    out.flush().context("writing ROC")?;
    Ok(())
}

fn cmd_normals(a: &NormalsArgs) -> CliResult<()> {
    let c = need(&a.calib, "calib")?;
    let out = need(&a.out, "out")?;
    let calib = ctx(parse_calib(c), c)?;
    let nm = match (&a.normals, load_segments(&a.labels, &a.label_normals)?) {
        (Some(n), _) => {
            let (w, h, px) = ctx(read_pfm_rgb(n), n)?;
            NormalMap::from_rgb(w, h, &px)?
        }
        (None, Some((labels, table))) => NormalMap::from_labels(&labels, &table)?,
        (None, None) => return Err(usage("need --normals or --labels with --label-normals")),
    };
    let s = Settings {
        cell_size: a.cell_size,
        ..Settings::default()
    };
    let fam = normal_family(&nm, &calib, &s, a.family_levels)?;
    let (w, h) = (nm.width(), nm.height());
    let vol = sgmp::priors::offset_volume_from_family(&fam, w, h, calib.d_min, calib.d_max)?;
    save_prior(&sgmp::Prior::Volume(vol), out)?;
    if let Some(p) = &a.depth_out {
        let g = normal_family(&nm, &calib, &s, 1)?;
        // Reference level 1 reproduces the relative depth up to the constant g·z_ref.
        let z: DisparityMap = FloatMap::from_fn(w, h, |x, y| {
            let d = g[0].get(x, y);
            if d.is_finite() && d + calib.d_offs > 0.0 {
                (1.0 / (d + calib.d_offs)) as f32
            } else {
                f32::INFINITY
            }
        });
        write_pfm(&z, p)?;
    }
    Ok(())
}

fn subcommand_position(args: &[String]) -> Option<usize> {
    let names: Vec<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
    let mut skip = false;
    for (i, a) in args.iter().enumerate().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if a == "--threads" || a == "--config" {
            skip = true;
            continue;
        }
        if names.contains(a) {
            return Some(i);
        }
    }
    None
}

fn with_config(args: Vec<String>) -> CliResult<Vec<String>> {
    let (Some(cfg), Some(pos)) = (config_path(&args), subcommand_position(&args)) else {
        return Ok(args);
    };
    let config = read_config(Path::new(&cfg))?;
    let cmd = Cli::command();
    let sub = cmd.find_subcommand(&args[pos]).expect("known subcommand").clone();
    let takes_value = |arg: &clap::Arg| arg.get_num_args().is_some_and(|n| n.takes_values());
    let accepts = |k: &str| {
        sub.get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(k))
            .map(|a| !matches!(a.get_action(), ArgAction::SetTrue) && (takes_value(a) || a.get_num_args().is_none()))
    };
    let known = |k: &str| {
        cmd.get_subcommands()
            .any(|s| s.get_arguments().any(|a| a.get_long() == Some(k)))
    };
    splice_config(&args, pos, &config, accepts, known)
}

fn run() -> CliResult<()> {
    let raw: Vec<String> = std::env::args().collect();
    let args = with_config(raw)?;
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    match &cli.cmd {
        Cmd::Match(a) => cmd_match(a),
        Cmd::Priors(a) => cmd_priors(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Roc(a) => cmd_roc(a),
        Cmd::Normals(a) => cmd_normals(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

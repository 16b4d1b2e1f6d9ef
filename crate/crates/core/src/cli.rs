//! The `camprobe` command line.
//!
//! Settings resolve in order: built-in defaults, then a `--config` JSON file,
//! then explicit flags, then the `CAMPROBE_SEED` environment variable for the
//! seed. Failures print one JSON line on stderr and exit with 2 (validation),
//! 3 (I/O) or 4 (numeric).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::diffusion::{sample, NoiseSource, Schedule, Strategy, UpdateConfig, DEFAULT_STEPS, DEFAULT_WINDOW};
use crate::displacement::{backward_field, normalize_depth, DepthMap, DepthMode};
use crate::error::{Error, ErrorKind, Result};
use crate::geometry::{default_magnitude, make_motion, MotionKind, MotionParams, Trajectory, Vec2};
use crate::io::{
    read_trajectory, write_atomic, write_trajectory, ProbeCurve, ProbePoint, ReportFile, RunMetadata, Tensor,
};
use crate::metrics::{
    axis_alignment, compute_lambda, depth_warp_rmse, direction_bias, epipolar_rmse, leakage, psnr, rpe, Alignment,
    BiasInputs, DirectionBias, LeakageCalibration, LeakageNorm, MetricsReport, DEFAULT_WINDOWS,
};
use crate::pipeline::{ToyProblem, PSNR_CAP};
use crate::resample::grid_sample;
use crate::scene::{generate_scene, Correspondence};

pub const SEED_ENV: &str = "CAMPROBE_SEED";
pub const TOOL_VERSION: &str = concat!("camprobe ", env!("CARGO_PKG_VERSION"));

const DYNAMICS_PROXY: &str =
    "dynamics: mean magnitude of the applied backward displacement field over all frames, normalized image units";
const QUALITY_PROXY: &str =
    "quality: mean per-frame PSNR (dB, capped at 100) of the sampled clip against the warped canonical render, over mutually visible pixels of the background plane";

/// Settings shared by every command; any field may come from `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub height: usize,
    pub width: usize,
    pub frames: usize,
    pub steps: usize,
    pub omega: f64,
    pub window: (f64, f64),
    pub strategy: Strategy,
    pub noise: NoiseSource,
    pub seed: u64,
    pub depth_mode: DepthMode,
    pub planes: usize,
    pub radius: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            height: 60,
            width: 104,
            frames: 13,
            steps: DEFAULT_STEPS,
            omega: 1.0,
            window: DEFAULT_WINDOW,
            strategy: Strategy::FullResample,
            noise: NoiseSource::Fresh,
            seed: 0,
            depth_mode: DepthMode::Raw,
            planes: 4,
            radius: 2.0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.height < 2 || self.width < 2 {
            return Err(Error::InvalidInput(format!("resolution {}x{} is too small", self.height, self.width)));
        }
        if self.frames == 0 {
            return Err(Error::EmptyTrajectory);
        }
        if self.steps == 0 {
            return Err(Error::InvalidInput("steps must be positive".into()));
        }
        if self.planes == 0 {
            return Err(Error::InvalidInput("a scene needs at least one plane".into()));
        }
        self.update_config().validate()
    }

    pub fn update_config(&self) -> UpdateConfig {
        UpdateConfig { omega: self.omega, window: self.window, strategy: self.strategy, noise: self.noise, seed: self.seed }
    }

    pub fn motion_params(&self) -> MotionParams {
        MotionParams { radius: self.radius, ..MotionParams::default() }
    }
}

#[derive(Debug, Parser)]
#[command(name = "camprobe", version, about = "Camera control via displacement fields, with evaluation tools")]
pub struct Cli {
    /// JSON file with default settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: SettingFlags,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags that override [`RunConfig`] fields.
#[derive(Debug, Default, Args)]
pub struct SettingFlags {
    #[arg(long, global = true)]
    pub height: Option<usize>,
    #[arg(long, global = true)]
    pub width: Option<usize>,
    #[arg(long, global = true)]
    pub frames: Option<usize>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    /// Update window as `start,end` fractions of the step count.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub window: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub strategy: Option<String>,
    #[arg(long, global = true)]
    pub noise: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub depth_mode: Option<String>,
    #[arg(long, global = true)]
    pub planes: Option<usize>,
    #[arg(long, global = true)]
    pub radius: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a camera trajectory file.
    Traj(TrajArgs),
    /// Warp a frame sequence with per-frame displacement fields.
    Warp(WarpArgs),
    /// Run the guided sampler on a synthetic scene.
    Sample(SampleArgs),
    /// Sweep control scales and motion kinds.
    Probe(ProbeArgs),
    /// Compute trajectory and consistency metrics.
    Eval(EvalArgs),
    /// Render probe curves as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct TrajArgs {
    #[arg(long)]
    pub kind: String,
    /// Defaults to a moderate motion for the kind.
    #[arg(long, allow_negative_numbers = true)]
    pub magnitude: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct WarpArgs {
    /// Frames tensor, F×H×W×C.
    #[arg(long)]
    pub input: PathBuf,
    /// Depth tensor, F×H×W or a single H×W map for every frame.
    #[arg(long, conflicts_with = "constant_depth")]
    pub depth: Option<PathBuf>,
    #[arg(long)]
    pub constant_depth: Option<f64>,
    #[arg(long)]
    pub traj: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, default_value_t = 0)]
    pub scene_seed: u64,
    /// Trajectory file; otherwise one is generated from `--kind`.
    #[arg(long, conflicts_with_all = ["kind", "magnitude"])]
    pub traj: Option<PathBuf>,
    #[arg(long, default_value = "truck")]
    pub kind: String,
    #[arg(long, allow_negative_numbers = true)]
    pub magnitude: Option<f64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Multiples of each motion's default magnitude.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,1.5,2")]
    pub scales: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "truck,pan,tilt,dolly")]
    pub motions: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub scene_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub est: Option<PathBuf>,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub rpe: bool,
    #[arg(long)]
    pub leakage: bool,
    #[arg(long)]
    pub axis: bool,
    #[arg(long, value_delimiter = ',')]
    pub windows: Option<Vec<usize>>,
    #[arg(long, default_value = "none")]
    pub align: String,
    /// Leakage unit conversion; calibrated from the built-in generators when absent.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// JSON list of `{frame, canonical: [x, y], target: [x, y]}` in normalized coordinates.
    #[arg(long)]
    pub correspondences: Option<PathBuf>,
    /// Frames tensor for the depth-warp check, paired with `--depth`.
    #[arg(long, requires = "depth")]
    pub video: Option<PathBuf>,
    #[arg(long, requires = "video")]
    pub depth: Option<PathBuf>,
    /// Direction-bias inputs `d_base,q_base,d_cam,q_cam`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub bias: Option<Vec<f64>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// A correspondence tagged with the trajectory frame it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameCorrespondence {
    pub frame: usize,
    pub canonical: [f64; 2],
    pub target: [f64; 2],
}

/// Merges defaults, the config file, flags and the environment.
pub fn resolve_config(config: Option<&Path>, flags: &SettingFlags, env_seed: Option<&str>) -> Result<RunConfig> {
    let mut cfg = match config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    macro_rules! take {
        ($($field:ident),*) => { $(if let Some(v) = flags.$field { cfg.$field = v; })* };
    }
    take!(height, width, frames, steps, omega, seed, planes, radius);
    if let Some(w) = &flags.window {
        let [start, end] = w[..] else {
            return Err(Error::InvalidInput(format!("--window takes two values, got {}", w.len())));
        };
        cfg.window = (start, end);
    }
    if let Some(s) = &flags.strategy {
        cfg.strategy = s.parse()?;
    }
    if let Some(n) = &flags.noise {
        cfg.noise = match n.as_str() {
            "fresh" => NoiseSource::Fresh,
            "recovered" => NoiseSource::Recovered,
            _ => return Err(Error::InvalidInput(format!("unknown noise source `{n}`"))),
        };
    }
    if let Some(m) = &flags.depth_mode {
        cfg.depth_mode = m.parse()?;
    }
    if let Some(s) = env_seed {
        cfg.seed = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("{SEED_ENV} must be an unsigned integer, got `{s}`")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let message = e.kind().to_string();
            let detail = e.to_string();
            eprintln!("{}", serde_json::json!({ "error": "validation", "message": message, "detail": detail.trim() }));
            return 2;
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    match run(&cli, env_seed.as_deref()) {
        Ok(()) => 0,
        Err(e) => {
            let (label, code) = match e.kind() {
                ErrorKind::Validation => ("validation", 2),
                ErrorKind::Io => ("io", 3),
                ErrorKind::Numeric => ("numeric", 4),
            };
            eprintln!("{}", serde_json::json!({ "error": label, "message": e.to_string() }));
            code
        }
    }
}

pub fn run(cli: &Cli, env_seed: Option<&str>) -> Result<()> {
    let cfg = resolve_config(cli.config.as_deref(), &cli.settings, env_seed)?;
    match &cli.command {
        Command::Traj(args) => cmd_traj(&cfg, args),
        Command::Warp(args) => cmd_warp(&cfg, args),
        Command::Sample(args) => cmd_sample(&cfg, args),
        Command::Probe(args) => cmd_probe(&cfg, args),
        Command::Eval(args) => cmd_eval(&cfg, args),
        Command::Plot(args) => cmd_plot(args),
    }
}

fn metadata(cfg: &RunConfig, command: &str, seed: Option<u64>, schedule: Option<&Schedule>) -> Result<RunMetadata> {
    Ok(RunMetadata {
        tool_version: TOOL_VERSION.into(),
        command: command.into(),
        seed,
        config: serde_json::to_value(cfg)?,
        schedule: schedule.map(|s| s.sigmas().to_vec()),
        notes: Vec::new(),
    })
}

fn generated_trajectory(cfg: &RunConfig, kind: &str, magnitude: Option<f64>) -> Result<Trajectory> {
    let kind: MotionKind = kind.parse()?;
    make_motion(kind, magnitude.unwrap_or_else(|| default_magnitude(kind)), cfg.frames, &cfg.motion_params())
}

pub fn cmd_traj(cfg: &RunConfig, args: &TrajArgs) -> Result<()> {
    write_trajectory(&args.out, &generated_trajectory(cfg, &args.kind, args.magnitude)?)
}

pub fn cmd_warp(cfg: &RunConfig, args: &WarpArgs) -> Result<()> {
    let frames = Tensor::read(&args.input)?.to_frames()?;
    let traj = read_trajectory(&args.traj)?;
    if traj.len() != frames.len() {
        return Err(Error::LengthMismatch(frames.len(), traj.len()));
    }
    let (h, w, _) = frames[0].shape();
    let depths = match (&args.depth, args.constant_depth) {
        (Some(path), None) => {
            let maps = Tensor::read(path)?.to_depths()?;
            match maps.len() {
                1 => vec![maps[0].clone(); frames.len()],
                n if n == frames.len() => maps,
                n => return Err(Error::LengthMismatch(frames.len(), n)),
            }
        }
        (None, Some(d)) => vec![DepthMap::constant(h, w, d)?; frames.len()],
        _ => return Err(Error::InvalidInput("pass exactly one of --depth or --constant-depth".into())),
    };
    let depths = normalize_depth(&depths, cfg.depth_mode)?;
    let rel = traj.relative_to_first();
    let warped = frames
        .iter()
        .zip(&depths)
        .zip(rel.poses())
        .map(|((frame, depth), pose)| {
            grid_sample(frame, &backward_field(&depth.resized(h, w)?, pose, &traj.intrinsics))
        })
        .collect::<Result<Vec<_>>>()?;
    Tensor::from_frames(&warped)?.write(&args.out)
}

/// Writes `output.cptf`, `target.cptf`, `depth.cptf`, `trajectory.json` and `report.json` into `out_dir`.
pub fn cmd_sample(cfg: &RunConfig, args: &SampleArgs) -> Result<()> {
    let traj = match &args.traj {
        Some(path) => read_trajectory(path)?,
        None => generated_trajectory(cfg, &args.kind, args.magnitude)?,
    };
    let scene = generate_scene(args.scene_seed, cfg.planes)?;
    let problem = ToyProblem::new(&scene, traj.clone(), cfg.height, cfg.width)?;
    let schedule = Schedule::linear(cfg.steps)?;
    let depth = problem.depth_provider();
    let depths = normalize_depth(&depth.0, cfg.depth_mode)?;
    let output = sample(
        &problem.denoiser()?,
        &schedule,
        &traj,
        &crate::diffusion::DepthSequence(depths),
        &cfg.update_config(),
    )?;

    fs::create_dir_all(&args.out_dir)?;
    Tensor::from_frames(output.frames())?.write(&args.out_dir.join("output.cptf"))?;
    Tensor::from_frames(&problem.warped_target()?)?.write(&args.out_dir.join("target.cptf"))?;
    Tensor::from_depths(&problem.depths)?.write(&args.out_dir.join("depth.cptf"))?;
    write_trajectory(&args.out_dir.join("trajectory.json"), &traj)?;

    let mut meta = metadata(cfg, "sample", Some(cfg.seed), Some(&schedule))?;
    meta.notes.push(format!("scene_seed: {}", args.scene_seed));
    meta.notes.push("frame_psnr: PSNR (dB, capped at 100) of each output frame against the warped canonical render over mutually visible pixels".into());
    let report = ReportFile { metadata: meta, frame_psnr: Some(problem.frame_psnr(&output)?), ..Default::default() };
    report.write(&args.out_dir.join("report.json"))
}

/// Dynamics and quality proxies for one motion at one scale.
pub fn probe_point(cfg: &RunConfig, kind: MotionKind, scale: f64, scene_seed: u64) -> Result<ProbePoint> {
    let traj = make_motion(kind, scale * default_magnitude(kind), cfg.frames, &cfg.motion_params())?;
    let scene = generate_scene(scene_seed, cfg.planes)?;
    let problem = ToyProblem::new(&scene, traj.clone(), cfg.height, cfg.width)?;
    let dynamics = problem.fields.iter().map(|f| f.mean_magnitude()).sum::<f64>() / problem.frames() as f64;

    let output = sample(
        &problem.denoiser()?,
        &Schedule::linear(cfg.steps)?,
        &traj,
        &problem.depth_provider(),
        &cfg.update_config(),
    )?;
    let targets = problem.warped_target()?;
    let mut total = 0.0;
    for ((out, target), (mask, render)) in
        output.frames().iter().zip(&targets).zip(problem.valid_masks().into_iter().zip(&problem.renders))
    {
        let background: Vec<bool> = mask.iter().zip(&render.plane).map(|(&m, p)| m && *p == Some(0)).collect();
        total += if background.iter().any(|&b| b) { psnr(out, target, Some(&background))?.min(PSNR_CAP) } else { 0.0 };
    }
    Ok(ProbePoint { scale, dynamics, quality: total / problem.frames() as f64 })
}

pub fn cmd_probe(cfg: &RunConfig, args: &ProbeArgs) -> Result<()> {
    if args.scales.is_empty() || args.motions.is_empty() {
        return Err(Error::InvalidInput("probe needs at least one scale and one motion".into()));
    }
    if let Some(s) = args.scales.iter().find(|s| !s.is_finite() || **s < 0.0) {
        return Err(Error::InvalidInput(format!("scales must be finite and non-negative, got {s}")));
    }
    let curves = args
        .motions
        .iter()
        .map(|m| {
            let kind: MotionKind = m.parse()?;
            let points = args.scales.iter().map(|&s| probe_point(cfg, kind, s, args.scene_seed)).collect::<Result<_>>()?;
            Ok(ProbeCurve { motion: kind.name().into(), points })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut meta = metadata(cfg, "probe", Some(cfg.seed), Some(&Schedule::linear(cfg.steps)?))?;
    meta.notes.push(format!("scene_seed: {}", args.scene_seed));
    meta.notes.push("scale: multiple of each motion's default magnitude".into());
    meta.notes.push(DYNAMICS_PROXY.into());
    meta.notes.push(QUALITY_PROXY.into());
    ReportFile { metadata: meta, probe: Some(curves), ..Default::default() }.write(&args.out)
}

/// λ from the built-in rotation-only and translation-only generators.
pub fn default_calibration(frames: usize, params: &MotionParams) -> Result<LeakageCalibration> {
    let build = |kinds: &[MotionKind]| {
        kinds.iter().map(|&k| make_motion(k, default_magnitude(k), frames, params)).collect::<Result<Vec<_>>>()
    };
    compute_lambda(
        &build(&[MotionKind::Pan, MotionKind::Tilt])?,
        &build(&[MotionKind::Truck, MotionKind::Pedestal, MotionKind::Dolly])?,
    )
}

pub fn cmd_eval(cfg: &RunConfig, args: &EvalArgs) -> Result<()> {
    let gt = read_trajectory(&args.gt)?;
    let est = args.est.as_deref().map(read_trajectory).transpose()?;
    let need_est = || est.as_ref().ok_or_else(|| Error::InvalidInput("this metric needs --est".into()));
    let mut metrics = MetricsReport::default();

    if args.rpe {
        let windows: Vec<usize> = match &args.windows {
            Some(w) => w.clone(),
            None => DEFAULT_WINDOWS.iter().copied().filter(|&w| w < gt.len()).collect(),
        };
        let align: Alignment = args.align.parse()?;
        metrics.rpe = Some(rpe(need_est()?, &gt, &windows, align)?);
    }
    if args.leakage {
        let cal = match args.lambda {
            Some(l) => LeakageCalibration::from_lambda(l)?,
            None => default_calibration(gt.len(), &cfg.motion_params())?,
        };
        let est = need_est()?;
        metrics.lambda = Some(cal.lambda);
        metrics.leakage_gt = Some(leakage(est, &gt, &cal, LeakageNorm::Gt)?);
        metrics.leakage_pred = Some(leakage(est, &gt, &cal, LeakageNorm::Pred)?);
    }
    if args.axis {
        metrics.axis = Some(axis_alignment(need_est()?, &gt)?);
    }
    if let Some(path) = &args.correspondences {
        let pairs: Vec<FrameCorrespondence> = serde_json::from_str(&fs::read_to_string(path)?)?;
        let rel = gt.relative_to_first();
        let mut sq_sum = 0.0;
        let mut count = 0usize;
        for f in 1..gt.len() {
            let corr: Vec<Correspondence> = pairs
                .iter()
                .filter(|p| p.frame == f)
                .map(|p| Correspondence {
                    canonical: Vec2::new(p.canonical[0], p.canonical[1]),
                    target: Vec2::new(p.target[0], p.target[1]),
                })
                .collect();
            if corr.is_empty() {
                continue;
            }
            let e = epipolar_rmse(&corr, &rel.poses()[f], &gt.intrinsics, (cfg.width, cfg.height))?;
            sq_sum += e * e * corr.len() as f64;
            count += corr.len();
        }
        if count == 0 {
            return Err(Error::InvalidInput("no correspondences for frames after the first".into()));
        }
        metrics.epipolar_rmse = Some((sq_sum / count as f64).sqrt());
        metrics.epipolar_pairs = Some(count);
    }
    if let (Some(video), Some(depth)) = (&args.video, &args.depth) {
        let frames = Tensor::read(video)?.to_frames()?;
        let depths = normalize_depth(&Tensor::read(depth)?.to_depths()?, cfg.depth_mode)?;
        metrics.depth_warp_rmse = Some(depth_warp_rmse(&frames, &depths, &gt)?);
    }
    if let Some(b) = &args.bias {
        let [d_base, q_base, d_cam, q_cam] = b[..] else {
            return Err(Error::InvalidInput(format!("--bias takes four values, got {}", b.len())));
        };
        let inputs = BiasInputs { d_base, q_base, d_cam, q_cam };
        let (d_inc, q_dec) = direction_bias(&inputs)?;
        metrics.direction_bias = Some(DirectionBias { inputs, d_inc, q_dec });
    }

    let meta = metadata(cfg, "eval", None, None)?;
    ReportFile { metadata: meta, metrics, ..Default::default() }.write(&args.out)
}

pub fn cmd_plot(args: &PlotArgs) -> Result<()> {
    let report = ReportFile::read(&args.report)?;
    let curves = report.probe.ok_or_else(|| Error::InvalidInput("report has no probe data".into()))?;
    write_atomic(&args.out, render_svg(&curves)?.as_bytes())
}

const PALETTE: [&str; 7] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Two side-by-side panels, scale against dynamics and scale against quality.
pub fn render_svg(curves: &[ProbeCurve]) -> Result<String> {
    if curves.is_empty() || curves.iter().any(|c| c.points.is_empty()) {
        return Err(Error::InvalidInput("nothing to plot".into()));
    }
    let points = || curves.iter().flat_map(|c| &c.points);
    if points().any(|p| !(p.scale.is_finite() && p.dynamics.is_finite() && p.quality.is_finite())) {
        return Err(Error::Numeric("probe data contains non-finite values".into()));
    }
    let (panel_w, panel_h, margin) = (360.0, 260.0, 50.0);
    let width = 2.0 * (panel_w + margin) + margin;
    let height = panel_h + 2.0 * margin + 20.0 * curves.len() as f64 + 20.0;
    let xs = extent(points().map(|p| p.scale));
    let panels: [(&str, fn(&ProbePoint) -> f64); 2] = [("dynamics", |p| p.dynamics), ("quality (dB)", |p| p.quality)];

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    for (idx, (label, metric)) in panels.iter().enumerate() {
        let x0 = margin + idx as f64 * (panel_w + margin);
        let y0 = margin;
        let ys = extent(points().map(metric));
        let px = |v: f64| x0 + (v - xs.0) / (xs.1 - xs.0) * panel_w;
        let py = |v: f64| y0 + panel_h - (v - ys.0) / (ys.1 - ys.0) * panel_h;
        let _ = writeln!(svg, r#"<g class="panel" id="panel-{idx}">"#);
        let _ = writeln!(
            svg,
            r#"<line x1="{x0}" y1="{yb}" x2="{xr}" y2="{yb}" stroke="black"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{yb}" stroke="black"/>"#,
            yb = y0 + panel_h,
            xr = x0 + panel_w
        );
        for (v, anchor) in [(xs.0, "start"), (xs.1, "end")] {
            let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{v:.3}</text>"#, px(v), y0 + panel_h + 15.0);
        }
        for v in [ys.0, ys.1] {
            let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, x0 - 4.0, py(v) + 4.0);
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">control scale</text>"#,
            x0 + panel_w / 2.0,
            y0 + panel_h + 32.0
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, x0 + panel_w / 2.0, y0 - 10.0, xml_escape(label));
        for (c, curve) in curves.iter().enumerate() {
            let pts: Vec<String> = curve.points.iter().map(|p| format!("{:.2},{:.2}", px(p.scale), py(metric(p)))).collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"><title>{}</title></polyline>"#,
                PALETTE[c % PALETTE.len()],
                pts.join(" "),
                xml_escape(&curve.motion)
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    let _ = writeln!(svg, r#"<g class="legend">"#);
    for (c, curve) in curves.iter().enumerate() {
        let y = margin + panel_h + 55.0 + 20.0 * c as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{margin}" y1="{y}" x2="{:.2}" y2="{y}" stroke="{}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            margin + 24.0,
            PALETTE[c % PALETTE.len()],
            margin + 30.0,
            y + 4.0,
            xml_escape(&curve.motion)
        );
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_reference_configuration() {
        let cfg = resolve_config(None, &SettingFlags::default(), None).unwrap();
        assert_eq!((cfg.height, cfg.width, cfg.frames, cfg.steps), (60, 104, 13, 25));
        assert_eq!(cfg.update_config().update_steps(cfg.steps), 5);
        assert_eq!(cfg.omega, 1.0);
    }

    #[test]
    fn environment_seed_wins() {
        let flags = SettingFlags { seed: Some(3), ..Default::default() };
        assert_eq!(resolve_config(None, &flags, Some("17")).unwrap().seed, 17);
        assert_eq!(resolve_config(None, &flags, None).unwrap().seed, 3);
        assert!(resolve_config(None, &flags, Some("x")).is_err());
    }

    #[test]
    fn invalid_settings_are_rejected() {
        let flags = SettingFlags { window: Some(vec![0.5, 0.8]), ..Default::default() };
        assert_eq!(resolve_config(None, &flags, None).unwrap_err().kind(), ErrorKind::Validation);
        let flags = SettingFlags { strategy: Some("sideways".into()), ..Default::default() };
        assert!(resolve_config(None, &flags, None).is_err());
    }

    #[test]
    fn svg_escapes_labels() {
        let curves = vec![ProbeCurve {
            motion: "a<b".into(),
            points: vec![ProbePoint { scale: 0.0, dynamics: 0.0, quality: 100.0 }],
        }];
        let svg = render_svg(&curves).unwrap();
        assert!(svg.contains("a&lt;b"));
        assert!(render_svg(&[]).is_err());
    }
}

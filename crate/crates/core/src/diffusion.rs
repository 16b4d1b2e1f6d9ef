//! Rectified-flow sampling with displacement-field guidance.
//!
//! Latents follow `z_t = (1 - σ) z₀ + σ ε` and the model predicts the velocity
//! `v = ε - z₀`, so the clean estimate at any step is `ẑ₀ = z_t - σ v`. Inside
//! the update window each frame of `ẑ₀` is warped by its own displacement
//! field and the noisy state is rebuilt around the warped estimate.

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::displacement::{backward_field, DepthMap, DisplacementField};
use crate::error::{Error, Result};
use crate::geometry::Trajectory;
use crate::resample::{grid_sample, Frame};

pub const DEFAULT_STEPS: usize = 25;
pub const DEFAULT_UPDATE_STEPS: usize = 5;
pub const DEFAULT_WINDOW: (f64, f64) = (1.0, 0.8);

/// An `F×H×W×C` latent, stored frame by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentVideo {
    frames: Vec<Frame>,
}

impl LatentVideo {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::EmptySequence);
        };
        for f in &frames[1..] {
            first.same_shape(f)?;
        }
        Ok(Self { frames })
    }

    pub fn zeros(f: usize, h: usize, w: usize, c: usize) -> Self {
        Self { frames: vec![Frame::zeros(h, w, c); f] }
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// `(F, H, W, C)`
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        let (h, w, c) = self.frames[0].shape();
        (self.frames.len(), h, w, c)
    }

    pub fn iter_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.frames.iter().flat_map(|f| f.values().iter().copied())
    }

    fn check_shape(&self, other: &LatentVideo) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?}", self.shape()),
                actual: format!("{:?}", other.shape()),
            });
        }
        Ok(())
    }

    /// Elementwise combination of two same-shaped latents.
    pub fn zip_map(&self, other: &LatentVideo, f: impl Fn(f64, f64) -> f64) -> Result<LatentVideo> {
        self.check_shape(other)?;
        let frames = self
            .frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| {
                let mut out = a.clone();
                out.values_mut().iter_mut().zip(b.values()).for_each(|(x, y)| *x = f(*x, *y));
                out
            })
            .collect();
        Ok(LatentVideo { frames })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> LatentVideo {
        let frames = self
            .frames
            .iter()
            .map(|a| {
                let mut out = a.clone();
                out.values_mut().iter_mut().for_each(|x| *x = f(*x));
                out
            })
            .collect();
        LatentVideo { frames }
    }

    pub fn squared_distance(&self, other: &LatentVideo) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self.iter_values().zip(other.iter_values()).map(|(a, b)| (a - b) * (a - b)).sum())
    }
}

/// Noise levels `σ_T … σ_0`, stored from `σ_T = 1` down to `σ_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    sigmas: Vec<f64>,
}

impl Schedule {
    pub fn new(sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.len() < 2 {
            return Err(Error::InvalidInput("a schedule needs at least one step".into()));
        }
        if sigmas[0] != 1.0 || *sigmas.last().unwrap() != 0.0 {
            return Err(Error::InvalidInput("schedule must run from σ = 1 to σ = 0".into()));
        }
        if sigmas.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidInput("schedule must be strictly decreasing".into()));
        }
        Ok(Self { sigmas })
    }

    /// `σ_t = t / T`.
    pub fn linear(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidInput("step count must be positive".into()));
        }
        Self::new((0..=steps).map(|k| (steps - k) as f64 / steps as f64).collect())
    }

    pub fn steps(&self) -> usize {
        self.sigmas.len() - 1
    }

    /// Noise level at step `t ∈ 0..=T`.
    pub fn sigma(&self, t: usize) -> f64 {
        self.sigmas[self.steps() - t]
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Replace the velocity and rebuild `z_t` around the warped estimate.
    #[default]
    FullResample,
    /// Replace the velocity only and keep `z_t`.
    VOnly,
    /// Warp the velocity itself.
    WarpV,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::FullResample => "full_resample",
            Strategy::VOnly => "v_only",
            Strategy::WarpV => "warp_v",
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "full_resample" | "full-resample" => Strategy::FullResample,
            "v_only" | "v-only" => Strategy::VOnly,
            "warp_v" | "warp-v" => Strategy::WarpV,
            _ => return Err(Error::InvalidInput(format!("unknown strategy `{s}`"))),
        })
    }
}

/// Where the noise for the rebuilt latent comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSource {
    /// Fresh Gaussian noise keyed by `(seed, step, frame)`.
    #[default]
    Fresh,
    /// `ε = ẑ₀ + v` from the unmodified prediction.
    Recovered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateConfig {
    pub omega: f64,
    /// `(start, end)` as fractions of `T`; step `t` is updated when `end·T < t ≤ start·T`.
    pub window: (f64, f64),
    pub strategy: Strategy,
    pub noise: NoiseSource,
    pub seed: u64,
}

impl Default for UpdateConfig {
    fn default() -> Self {
        Self {
            omega: 1.0,
            window: DEFAULT_WINDOW,
            strategy: Strategy::default(),
            noise: NoiseSource::default(),
            seed: 0,
        }
    }
}

impl UpdateConfig {
    pub fn validate(&self) -> Result<()> {
        let (start, end) = self.window;
        if !self.omega.is_finite() {
            return Err(Error::InvalidInput(format!("omega must be finite, got {}", self.omega)));
        }
        if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&end) || start < end {
            return Err(Error::InvalidInput(format!("window ({start}, {end}) must satisfy 1 ≥ start ≥ end ≥ 0")));
        }
        Ok(())
    }

    pub fn in_window(&self, t: usize, steps: usize) -> bool {
        let (start, end) = self.window;
        let t = t as f64;
        let n = steps as f64;
        t <= start * n + 1e-9 && t > end * n + 1e-9
    }

    pub fn update_steps(&self, steps: usize) -> usize {
        (1..=steps).filter(|&t| self.in_window(t, steps)).count()
    }
}

/// Bayes-optimal denoiser for a weighted set of clean clips.
///
/// The prediction is the posterior mean `Σ w_k x_k` with
/// `w_k ∝ π_k exp(-‖z - (1-σ)x_k‖² / 2σ²)`. With a single clip this is the
/// exact oracle `v = (z - target) / σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyDenoiser {
    clips: Vec<LatentVideo>,
    log_prior: Vec<f64>,
}

impl ToyDenoiser {
    pub fn new(target: LatentVideo) -> Self {
        Self { clips: vec![target], log_prior: vec![0.0] }
    }

    /// A denoiser that also knows `alternatives`, each with log prior weight
    /// `log_prior` relative to the target.
    pub fn with_alternatives(target: LatentVideo, alternatives: Vec<(LatentVideo, f64)>) -> Result<Self> {
        let mut clips = vec![target];
        let mut log_prior = vec![0.0];
        for (clip, lp) in alternatives {
            clips[0].check_shape(&clip)?;
            if !lp.is_finite() {
                return Err(Error::InvalidInput("log prior must be finite".into()));
            }
            clips.push(clip);
            log_prior.push(lp);
        }
        Ok(Self { clips, log_prior })
    }

    pub fn target(&self) -> &LatentVideo {
        &self.clips[0]
    }

    pub fn clips(&self) -> &[LatentVideo] {
        &self.clips
    }

    /// Posterior weights of each clip given `z_t`.
    pub fn weights(&self, z_t: &LatentVideo, sigma: f64) -> Result<Vec<f64>> {
        let logits = self
            .clips
            .iter()
            .zip(&self.log_prior)
            .map(|(x, lp)| {
                let scaled = x.map(|v| (1.0 - sigma) * v);
                Ok(lp - z_t.squared_distance(&scaled)? / (2.0 * sigma * sigma))
            })
            .collect::<Result<Vec<f64>>>()?;
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        Ok(exp.into_iter().map(|e| e / total).collect())
    }

    pub fn predict_clean(&self, z_t: &LatentVideo, sigma: f64) -> Result<LatentVideo> {
        if self.clips.len() == 1 {
            return Ok(self.clips[0].clone());
        }
        let weights = self.weights(z_t, sigma)?;
        let mut acc = self.clips[0].map(|v| v * weights[0]);
        for (clip, w) in self.clips.iter().zip(&weights).skip(1) {
            if *w > 0.0 {
                acc = acc.zip_map(clip, |a, b| a + w * b)?;
            }
        }
        Ok(acc)
    }
}

/// `ẑ₀ = z_t - σ v`.
pub fn predict_z0(z_t: &LatentVideo, v_t: &LatentVideo, sigma: f64) -> Result<LatentVideo> {
    z_t.zip_map(v_t, |z, v| z - sigma * v)
}

/// Velocity of the toy denoiser, `(z_t - ẑ₀) / σ`.
pub fn toy_velocity(d: &ToyDenoiser, z_t: &LatentVideo, sigma: f64) -> Result<LatentVideo> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput(format!("velocity needs σ > 0, got {sigma}")));
    }
    let clean = d.predict_clean(z_t, sigma)?;
    z_t.zip_map(&clean, |z, x| (z - x) / sigma)
}

/// `ẑ'_f = ẑ_f + ω (F_f ∘ ẑ_f - ẑ_f)` for each frame with its own field.
pub fn guided_update(z0_hat: &LatentVideo, fields: &[DisplacementField], omega: f64) -> Result<LatentVideo> {
    if fields.len() != z0_hat.len() {
        return Err(Error::LengthMismatch(z0_hat.len(), fields.len()));
    }
    let frames = z0_hat
        .frames
        .iter()
        .zip(fields)
        .map(|(frame, field)| frame.lerp(&grid_sample(frame, field)?, omega))
        .collect::<Result<Vec<_>>>()?;
    Ok(LatentVideo { frames })
}

/// Rebuilds the state around a modified clean estimate: `v' = ε - ẑ₀'`, `z' = ẑ₀' + σ v'`.
pub fn reimpose_noise(z0_prime: &LatentVideo, sigma: f64, noise: &LatentVideo) -> Result<(LatentVideo, LatentVideo)> {
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::InvalidInput(format!("σ must lie in [0, 1], got {sigma}")));
    }
    let v = noise.zip_map(z0_prime, |e, z| e - z)?;
    let z = z0_prime.zip_map(&v, |z, v| z + sigma * v)?;
    Ok((z, v))
}

/// Standard-normal latent keyed by `(seed, tag, frame)`; tag 0 is the initial noise.
pub fn seeded_noise(seed: u64, tag: u64, shape: (usize, usize, usize, usize)) -> LatentVideo {
    let (f, h, w, c) = shape;
    let frames = (0..f)
        .map(|frame| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((tag << 32) | frame as u64);
            Frame::from_fn(h, w, c, |_, _, _| StandardNormal.sample(&mut rng))
        })
        .collect();
    LatentVideo { frames }
}

/// Supplies per-frame depth for building displacement fields.
pub trait DepthProvider {
    /// Depth for `frame`, given the current clean estimate of that frame.
    fn depth(&self, frame: usize, z0: &Frame) -> Result<DepthMap>;
}

/// Every pixel at the same depth.
#[derive(Debug, Clone, Copy)]
pub struct ConstantDepth(pub f64);

impl DepthProvider for ConstantDepth {
    fn depth(&self, _frame: usize, z0: &Frame) -> Result<DepthMap> {
        DepthMap::constant(z0.height(), z0.width(), self.0)
    }
}

/// A fixed depth map per frame.
#[derive(Debug, Clone)]
pub struct DepthSequence(pub Vec<DepthMap>);

impl DepthProvider for DepthSequence {
    fn depth(&self, frame: usize, _z0: &Frame) -> Result<DepthMap> {
        self.0.get(frame).cloned().ok_or(Error::LengthMismatch(frame + 1, self.0.len()))
    }
}

/// Per-frame backward fields for the trajectory's poses relative to frame 1.
pub fn trajectory_fields(traj: &Trajectory, depth: &dyn DepthProvider, z0: &LatentVideo) -> Result<Vec<DisplacementField>> {
    if traj.len() != z0.len() {
        return Err(Error::LengthMismatch(z0.len(), traj.len()));
    }
    let rel = traj.relative_to_first();
    rel.poses()
        .iter()
        .zip(z0.frames())
        .enumerate()
        .map(|(f, (pose, frame))| {
            let d = depth.depth(f, frame)?.resized(frame.height(), frame.width())?;
            Ok(backward_field(&d, pose, &traj.intrinsics))
        })
        .collect()
}

/// State captured at one guided step.
#[derive(Debug, Clone)]
pub struct UpdateEvent<'a> {
    pub t: usize,
    pub sigma: f64,
    pub z0_prime: &'a LatentVideo,
    pub z_t: &'a LatentVideo,
    pub v_t: &'a LatentVideo,
}

/// Euler sampling with guided updates; see [`sample_observed`].
pub fn sample(
    d: &ToyDenoiser,
    schedule: &Schedule,
    traj: &Trajectory,
    depth: &dyn DepthProvider,
    cfg: &UpdateConfig,
) -> Result<LatentVideo> {
    sample_observed(d, schedule, traj, depth, cfg, |_| {})
}

/// Runs the sampler from seeded noise, calling `observe` after every guided
/// step with the updated state. `ω = 0` disables guidance entirely.
pub fn sample_observed(
    d: &ToyDenoiser,
    schedule: &Schedule,
    traj: &Trajectory,
    depth: &dyn DepthProvider,
    cfg: &UpdateConfig,
    mut observe: impl FnMut(&UpdateEvent<'_>),
) -> Result<LatentVideo> {
    cfg.validate()?;
    let shape = d.target().shape();
    if traj.len() != shape.0 {
        return Err(Error::LengthMismatch(shape.0, traj.len()));
    }
    let steps = schedule.steps();
    let mut z = seeded_noise(cfg.seed, 0, shape);

    for t in (1..=steps).rev() {
        let sigma = schedule.sigma(t);
        let sigma_next = schedule.sigma(t - 1);
        let mut v = toy_velocity(d, &z, sigma)?;

        if cfg.omega != 0.0 && cfg.in_window(t, steps) {
            let z0 = predict_z0(&z, &v, sigma)?;
            let fields = trajectory_fields(traj, depth, &z0)?;
            match cfg.strategy {
                Strategy::FullResample | Strategy::VOnly => {
                    let z0_prime = guided_update(&z0, &fields, cfg.omega)?;
                    let noise = match cfg.noise {
                        NoiseSource::Fresh => seeded_noise(cfg.seed, t as u64, shape),
                        NoiseSource::Recovered => z0.zip_map(&v, |a, b| a + b)?,
                    };
                    let (z_prime, v_prime) = reimpose_noise(&z0_prime, sigma, &noise)?;
                    if cfg.strategy == Strategy::FullResample {
                        z = z_prime;
                    }
                    v = v_prime;
                    observe(&UpdateEvent { t, sigma, z0_prime: &z0_prime, z_t: &z, v_t: &v });
                }
                Strategy::WarpV => {
                    v = guided_update(&v, &fields, cfg.omega)?;
                    let z0_prime = predict_z0(&z, &v, sigma)?;
                    observe(&UpdateEvent { t, sigma, z0_prime: &z0_prime, z_t: &z, v_t: &v });
                }
            }
        }

        let dt = sigma_next - sigma;
        z = z.zip_map(&v, |z, v| z + dt * v)?;
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::displacement::FieldDirection;
    use crate::geometry::{make_motion, MotionKind, MotionParams, Vec2};
    use rand::{Rng, SeedableRng};

    fn random_video(seed: u64, shape: (usize, usize, usize, usize)) -> LatentVideo {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, h, w, c) = shape;
        LatentVideo::new((0..f).map(|_| Frame::from_fn(h, w, c, |_, _, _| rng.gen_range(-1.0..1.0))).collect())
            .unwrap()
    }

    fn max_abs_diff(a: &LatentVideo, b: &LatentVideo) -> f64 {
        a.iter_values().zip(b.iter_values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    const SHAPE: (usize, usize, usize, usize) = (3, 4, 5, 2);

    #[test]
    fn predict_z0_endpoints_and_inversion() {
        let z0 = random_video(1, SHAPE);
        let eps = random_video(2, SHAPE);
        assert_eq!(predict_z0(&z0, &eps, 0.0).unwrap(), z0);

        let v = eps.zip_map(&z0, |e, z| e - z).unwrap();
        let recovered = predict_z0(&eps, &v, 1.0).unwrap();
        assert_eq!(recovered, z0);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let sigma: f64 = rng.gen_range(0.0..1.0);
            let z_t = z0.zip_map(&eps, |z, e| (1.0 - sigma) * z + sigma * e).unwrap();
            assert!(max_abs_diff(&predict_z0(&z_t, &v, sigma).unwrap(), &z0) < 1e-12);
        }
        assert!(predict_z0(&z0, &random_video(4, (2, 4, 5, 2)), 0.5).is_err());
    }

    #[test]
    fn toy_velocity_recovers_noise() {
        let target = random_video(5, SHAPE);
        let eps = random_video(6, SHAPE);
        let d = ToyDenoiser::new(target.clone());
        let sigma = 0.4;
        let z_t = target.zip_map(&eps, |x, e| x + sigma * e).unwrap();
        let v = toy_velocity(&d, &z_t, sigma).unwrap();
        assert!(max_abs_diff(&v, &eps) < 1e-12);
        assert!(toy_velocity(&d, &target, sigma).unwrap().iter_values().all(|x| x == 0.0));
        assert!(toy_velocity(&d, &target, 0.0).is_err());
        assert!(max_abs_diff(&predict_z0(&z_t, &v, sigma).unwrap(), &target) < 1e-15);
    }

    #[test]
    fn euler_integration_reaches_target() {
        let target = random_video(7, SHAPE);
        let d = ToyDenoiser::new(target.clone());
        let schedule = Schedule::linear(25).unwrap();
        let mut z = seeded_noise(9, 0, SHAPE);
        for t in (1..=25).rev() {
            let v = toy_velocity(&d, &z, schedule.sigma(t)).unwrap();
            let dt = schedule.sigma(t - 1) - schedule.sigma(t);
            z = z.zip_map(&v, |z, v| z + dt * v).unwrap();
        }
        assert!(max_abs_diff(&z, &target) < 1e-9);
    }

    #[test]
    fn guided_update_limits() {
        let z0 = random_video(8, SHAPE);
        let shift = DisplacementField::uniform(4, 5, FieldDirection::Backward, Vec2::new(0.3, -0.2));
        let fields = vec![shift; 3];
        assert_eq!(guided_update(&z0, &fields, 0.0).unwrap(), z0);
        let pure = guided_update(&z0, &fields, 1.0).unwrap();
        for (out, (frame, field)) in pure.frames().iter().zip(z0.frames().iter().zip(&fields)) {
            let warped = grid_sample(frame, field).unwrap();
            assert!(out.values().iter().zip(warped.values()).all(|(a, b)| (a - b).abs() < 1e-12));
        }
        let zero = vec![DisplacementField::zeros(4, 5, FieldDirection::Backward); 3];
        assert_eq!(guided_update(&z0, &zero, 0.7).unwrap(), z0);
        assert!(matches!(guided_update(&z0, &zero[..2], 1.0), Err(Error::LengthMismatch(3, 2))));
    }

    #[test]
    fn reimpose_noise_algebra() {
        let z0 = random_video(10, SHAPE);
        let noise = random_video(11, SHAPE);
        let (z, _) = reimpose_noise(&z0, 0.0, &noise).unwrap();
        assert_eq!(z, z0);

        let zeros = LatentVideo::zeros(3, 4, 5, 2);
        let (z, v) = reimpose_noise(&z0, 0.3, &zeros).unwrap();
        assert!(max_abs_diff(&v, &z0.map(|x| -x)) == 0.0);
        assert!(max_abs_diff(&z, &z0.map(|x| 0.7 * x)) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let sigma = rng.gen_range(0.0..=1.0);
            let (z, v) = reimpose_noise(&z0, sigma, &noise).unwrap();
            assert!(max_abs_diff(&predict_z0(&z, &v, sigma).unwrap(), &z0) < 1e-12);
        }
        assert!(reimpose_noise(&z0, 1.5, &noise).is_err());
    }

    #[test]
    fn schedule_and_window() {
        let s = Schedule::linear(25).unwrap();
        assert_eq!(s.steps(), 25);
        assert_eq!(s.sigma(25), 1.0);
        assert_eq!(s.sigma(0), 0.0);
        assert!((s.sigma(20) - 0.8).abs() < 1e-15);
        assert!(Schedule::new(vec![1.0, 0.5, 0.5, 0.0]).is_err());
        assert!(Schedule::new(vec![0.9, 0.0]).is_err());

        let cfg = UpdateConfig::default();
        assert_eq!(cfg.update_steps(25), DEFAULT_UPDATE_STEPS);
        assert!(cfg.in_window(25, 25) && cfg.in_window(21, 25) && !cfg.in_window(20, 25));
        let empty = UpdateConfig { window: (1.0, 1.0), ..Default::default() };
        assert_eq!(empty.update_steps(25), 0);
        assert!(UpdateConfig { window: (0.5, 0.8), ..Default::default() }.validate().is_err());
        assert!(UpdateConfig { omega: f64::NAN, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn identity_trajectory_and_empty_window_return_target() {
        let target = random_video(13, SHAPE);
        let d = ToyDenoiser::new(target.clone());
        let schedule = Schedule::linear(25).unwrap();
        let traj = Trajectory::identity(3).unwrap();
        for strategy in [Strategy::FullResample, Strategy::VOnly, Strategy::WarpV] {
            let cfg = UpdateConfig { strategy, seed: 4, ..Default::default() };
            let out = sample(&d, &schedule, &traj, &ConstantDepth(1.0), &cfg).unwrap();
            assert!(max_abs_diff(&out, &target) < 1e-9, "{strategy:?}");
        }
        let moving = make_motion(MotionKind::Truck, 0.3, 3, &MotionParams::default()).unwrap();
        let cfg = UpdateConfig { window: (1.0, 1.0), ..Default::default() };
        let out = sample(&d, &schedule, &moving, &ConstantDepth(1.0), &cfg).unwrap();
        assert!(max_abs_diff(&out, &target) < 1e-9);
    }

    #[test]
    fn zero_omega_ignores_trajectory_and_is_deterministic() {
        let target = random_video(14, SHAPE);
        let d = ToyDenoiser::with_alternatives(target.clone(), vec![(random_video(15, SHAPE), -2.0)]).unwrap();
        let schedule = Schedule::linear(25).unwrap();
        let cfg = UpdateConfig { omega: 0.0, seed: 21, ..Default::default() };
        let a = sample(&d, &schedule, &Trajectory::identity(3).unwrap(), &ConstantDepth(1.0), &cfg).unwrap();
        let pan = make_motion(MotionKind::Pan, 0.2, 3, &MotionParams::default()).unwrap();
        let b = sample(&d, &schedule, &pan, &ConstantDepth(1.0), &cfg).unwrap();
        assert_eq!(a, b);
        let guided = UpdateConfig { seed: 21, ..Default::default() };
        let c1 = sample(&d, &schedule, &pan, &ConstantDepth(2.0), &guided).unwrap();
        let c2 = sample(&d, &schedule, &pan, &ConstantDepth(2.0), &guided).unwrap();
        assert_eq!(c1, c2);
    }

    #[test]
    fn sampler_rejects_bad_inputs() {
        let d = ToyDenoiser::new(random_video(16, SHAPE));
        let schedule = Schedule::linear(10).unwrap();
        let bad = UpdateConfig { window: (0.2, 0.9), ..Default::default() };
        let traj = Trajectory::identity(3).unwrap();
        assert!(sample(&d, &schedule, &traj, &ConstantDepth(1.0), &bad).is_err());
        let short = Trajectory::identity(2).unwrap();
        assert!(matches!(
            sample(&d, &schedule, &short, &ConstantDepth(1.0), &UpdateConfig::default()),
            Err(Error::LengthMismatch(3, 2))
        ));
    }

    #[test]
    fn mixture_weights_follow_the_evidence() {
        let a = random_video(17, SHAPE);
        let b = random_video(18, SHAPE);
        let d = ToyDenoiser::with_alternatives(a.clone(), vec![(b.clone(), 0.0)]).unwrap();
        let w = d.weights(&b.map(|x| 0.9 * x), 0.1).unwrap();
        assert!(w[1] > 1.0 - 1e-12);
        let w = d.weights(&a, 1.0).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-12);
    }
}

//! Camera-control evaluation: relative pose error with optional similarity
//! alignment, translation/rotation leakage, direction bias, epipolar and
//! depth-warp consistency, and motion-axis agreement.

use std::str::FromStr;

use nalgebra::{Matrix3, SVD};
use serde::{Deserialize, Serialize};

use crate::displacement::{backward_field, pixel_center, to_pixel, DepthMap};
use crate::error::{Error, Result};
use crate::geometry::{skew, Intrinsics, Pose, Rotation, Trajectory, Vec3};
use crate::resample::{grid_sample, Frame};
use crate::scene::Correspondence;

pub const DEFAULT_WINDOWS: [usize; 4] = [1, 4, 8, 12];
pub const LEAKAGE_EPSILON: f64 = 1e-9;
pub const MIN_BASELINE: f64 = 1e-6;
/// Relative depth disagreement above which a warped pixel counts as occluded.
pub const DEPTH_CONSISTENCY: f64 = 0.01;

/// Similarity transform `x ↦ s R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sim3 {
    pub scale: f64,
    pub rotation: Rotation,
    pub translation: Vec3,
}

impl Sim3 {
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation.apply(p) * self.scale + self.translation
    }
}

/// Least-squares similarity mapping `src` onto `dst` (Umeyama).
pub fn umeyama_sim3(src: &[Vec3], dst: &[Vec3]) -> Result<Sim3> {
    if src.len() != dst.len() {
        return Err(Error::LengthMismatch(src.len(), dst.len()));
    }
    let n = src.len();
    if n < 3 {
        return Err(Error::TooFewPoints(n));
    }
    let nf = n as f64;
    let mu_s = src.iter().sum::<Vec3>() / nf;
    let mu_d = dst.iter().sum::<Vec3>() / nf;

    let mut cov = Matrix3::zeros();
    let mut scatter = Matrix3::zeros();
    let mut var_s = 0.0;
    for (s, d) in src.iter().zip(dst) {
        let (xs, xd) = (s - mu_s, d - mu_d);
        cov += xd * xs.transpose();
        scatter += xs * xs.transpose();
        var_s += xs.norm_squared();
    }
    cov /= nf;
    var_s /= nf;

    let mut spread = scatter.symmetric_eigenvalues().as_slice().to_vec();
    spread.sort_by(|a, b| b.total_cmp(a));
    if !(spread[0] > 0.0) || spread[1] <= 1e-12 * spread[0] {
        return Err(Error::RankDeficient);
    }

    let svd = SVD::new(cov, true, true);
    let (u, v_t) = (svd.u.ok_or(Error::RankDeficient)?, svd.v_t.ok_or(Error::RankDeficient)?);
    let mut sv = svd.singular_values;
    // nalgebra does not sort singular values; the sign flip goes on the smallest.
    let smallest = (0..3).min_by(|&a, &b| sv[a].total_cmp(&sv[b])).unwrap_or(2);
    let mut sign = Matrix3::identity();
    if (u.determinant() * v_t.determinant()) < 0.0 {
        sign[(smallest, smallest)] = -1.0;
        sv[smallest] = -sv[smallest];
    }
    let rotation = u * sign * v_t;
    let scale = sv.sum() / var_s;
    let translation = mu_d - rotation * mu_s * scale;
    Ok(Sim3 { scale, rotation: Rotation::from_matrix_unchecked(rotation), translation })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// Raw relative poses.
    None,
    /// Camera centres aligned to ground truth by a global similarity first.
    #[default]
    Sim3,
}

impl FromStr for Alignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "raw" => Ok(Alignment::None),
            "sim3" => Ok(Alignment::Sim3),
            _ => Err(Error::InvalidInput(format!("unknown alignment `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpeResult {
    /// Scene units.
    pub rpe_t: f64,
    /// Degrees.
    pub rpe_r: f64,
    pub windows: Vec<usize>,
    pub alignment: Alignment,
}

/// Applies a world-frame similarity to every camera of `traj`.
pub fn align_trajectory(traj: &Trajectory, sim: &Sim3) -> Trajectory {
    let poses = traj
        .poses()
        .iter()
        .map(|p| {
            let r = p.rotation.compose(&sim.rotation.transpose());
            let center = sim.apply(&p.camera_center());
            Pose::new(r, -(r.apply(&center)))
        })
        .collect();
    Trajectory::new(poses, traj.intrinsics).expect("aligned trajectory keeps its frames")
}

/// Relative pose error averaged over temporal windows.
///
/// Poses are read as camera-to-world `P = T⁻¹`. For each window `Δ` and start
/// `i` the error is `E = (P_i⁻¹ P_{i+Δ})_gt⁻¹ (P_i⁻¹ P_{i+Δ})_est`; translation
/// and rotation-angle means are taken per window, then across windows.
pub fn rpe(est: &Trajectory, gt: &Trajectory, windows: &[usize], align: Alignment) -> Result<RpeResult> {
    let n = gt.len();
    if est.len() != n {
        return Err(Error::LengthMismatch(est.len(), n));
    }
    if windows.is_empty() {
        return Err(Error::InvalidInput("at least one window is required".into()));
    }
    if let Some(&window) = windows.iter().find(|&&w| w == 0 || w >= n) {
        return Err(Error::InvalidWindow { window, frames: n });
    }

    let est = match align {
        Alignment::None => est.clone(),
        Alignment::Sim3 => {
            let src: Vec<Vec3> = est.poses().iter().map(Pose::camera_center).collect();
            let dst: Vec<Vec3> = gt.poses().iter().map(Pose::camera_center).collect();
            align_trajectory(est, &umeyama_sim3(&src, &dst)?)
        }
    };
    let to_world = |t: &Trajectory| t.poses().iter().map(Pose::inverse).collect::<Vec<_>>();
    let (pe, pg) = (to_world(&est), to_world(gt));

    let (mut sum_t, mut sum_r) = (0.0, 0.0);
    for &w in windows {
        let (mut wt, mut wr) = (0.0, 0.0);
        for i in 0..n - w {
            let rel_e = pe[i].inverse().compose(&pe[i + w]);
            let rel_g = pg[i].inverse().compose(&pg[i + w]);
            let e = rel_g.inverse().compose(&rel_e);
            wt += e.translation.norm();
            wr += e.rotation.angle().to_degrees();
        }
        let count = (n - w) as f64;
        sum_t += wt / count;
        sum_r += wr / count;
    }
    let k = windows.len() as f64;
    Ok(RpeResult { rpe_t: sum_t / k, rpe_r: sum_r / k, windows: windows.to_vec(), alignment: align })
}

/// Adjacent-frame motion: `Δt_f = t_{f+1} - t_f` and `ω_f = log(R_{f+1} R_fᵀ)`.
pub fn step_motions(traj: &Trajectory) -> Vec<(Vec3, Vec3)> {
    traj.poses()
        .windows(2)
        .map(|w| {
            let dt = w[1].translation - w[0].translation;
            let dr = w[1].rotation.compose(&w[0].rotation.transpose());
            (dt, dr.log())
        })
        .collect()
}

fn path_lengths(traj: &Trajectory) -> (f64, f64) {
    step_motions(traj).iter().fold((0.0, 0.0), |(t, r), (dt, w)| (t + dt.norm(), r + w.norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageCalibration {
    pub d_ref: f64,
    pub r_ref: f64,
    pub lambda: f64,
    pub epsilon: f64,
}

impl LeakageCalibration {
    pub fn from_lambda(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { d_ref: lambda, r_ref: 1.0, lambda, epsilon: LEAKAGE_EPSILON })
    }
}

/// `λ = D_ref / R_ref` from ground-truth translation-only and rotation-only sequences.
pub fn compute_lambda(rotation_seqs: &[Trajectory], translation_seqs: &[Trajectory]) -> Result<LeakageCalibration> {
    if rotation_seqs.is_empty() || translation_seqs.is_empty() {
        return Err(Error::EmptySequence);
    }
    let d_ref = translation_seqs.iter().map(|t| path_lengths(t).0).sum::<f64>() / translation_seqs.len() as f64;
    let r_ref = rotation_seqs.iter().map(|t| path_lengths(t).1).sum::<f64>() / rotation_seqs.len() as f64;
    if !(d_ref > 0.0 && r_ref > 0.0) {
        return Err(Error::ZeroMotionCalibration);
    }
    Ok(LeakageCalibration { d_ref, r_ref, lambda: d_ref / r_ref, epsilon: LEAKAGE_EPSILON })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakageNorm {
    /// Normalize by the commanded (ground-truth) motion.
    #[default]
    Gt,
    /// Normalize by the predicted motion of the intended type.
    Pred,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leakage {
    pub trans_to_rot: f64,
    pub rot_to_trans: f64,
    pub norm: LeakageNorm,
}

pub fn leakage(pred: &Trajectory, gt: &Trajectory, cal: &LeakageCalibration, norm: LeakageNorm) -> Result<Leakage> {
    if pred.len() != gt.len() {
        return Err(Error::LengthMismatch(pred.len(), gt.len()));
    }
    let (pred_t, pred_r) = path_lengths(pred);
    let (ref_t, ref_r) = match norm {
        LeakageNorm::Gt => path_lengths(gt),
        LeakageNorm::Pred => (pred_t, pred_r),
    };
    let (lambda, eps) = (cal.lambda, cal.epsilon);
    Ok(Leakage {
        trans_to_rot: lambda * pred_r / (ref_t + eps),
        rot_to_trans: pred_t / (lambda * ref_r + eps),
        norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasInputs {
    pub d_base: f64,
    pub q_base: f64,
    pub d_cam: f64,
    pub q_cam: f64,
}

/// Relative dynamics increase and quality decrease against the uncontrolled baseline.
pub fn direction_bias(b: &BiasInputs) -> Result<(f64, f64)> {
    if !(b.d_base > 0.0) || !(b.q_base > 0.0) {
        return Err(Error::InvalidInput(format!(
            "baselines must be positive, got d_base={} q_base={}",
            b.d_base, b.q_base
        )));
    }
    Ok(((b.d_cam - b.d_base) / b.d_base, (b.q_base - b.q_cam) / b.q_base))
}

/// Fundamental matrix mapping canonical points to epipolar lines in the target view.
pub fn fundamental(rel_pose: &Pose, k: &Intrinsics) -> Matrix3<f64> {
    let essential = skew(&rel_pose.translation) * rel_pose.rotation.matrix();
    let k_inv = k.inverse_matrix();
    k_inv.transpose() * essential * k_inv
}

fn line_distance(line: &Vec3, p: &Vec3) -> f64 {
    line.dot(p).abs() / (line.x * line.x + line.y * line.y).sqrt()
}

/// Symmetric point-to-epipolar-line RMSE in pixels.
///
/// `pixel_scale` is `(W, H)`: normalized `[-1, 1]` spans `W` pixels
/// horizontally and `H` vertically.
pub fn epipolar_rmse(
    correspondences: &[Correspondence],
    rel_pose: &Pose,
    k: &Intrinsics,
    pixel_scale: (usize, usize),
) -> Result<f64> {
    let sq = epipolar_sq_errors(correspondences, rel_pose, k, pixel_scale)?;
    Ok((sq.iter().sum::<f64>() / sq.len() as f64).sqrt())
}

/// Per-pair mean squared symmetric epipolar distance, in squared pixels.
pub fn epipolar_sq_errors(
    correspondences: &[Correspondence],
    rel_pose: &Pose,
    k: &Intrinsics,
    pixel_scale: (usize, usize),
) -> Result<Vec<f64>> {
    if correspondences.is_empty() {
        return Err(Error::EmptySequence);
    }
    let baseline = rel_pose.translation.norm();
    if baseline < MIN_BASELINE {
        return Err(Error::DegeneratePair(baseline));
    }
    let (w, h) = (pixel_scale.0 as f64, pixel_scale.1 as f64);
    // normalized = A · pixel
    let a = Matrix3::new(2.0 / w, 0.0, 1.0 / w - 1.0, 0.0, 2.0 / h, 1.0 / h - 1.0, 0.0, 0.0, 1.0);
    let f = a.transpose() * fundamental(rel_pose, k) * a;
    let to_px = |u: &crate::geometry::Vec2| {
        let (x, y) = to_pixel(u, pixel_scale.1, pixel_scale.0);
        Vec3::new(x, y, 1.0)
    };
    Ok(correspondences
        .iter()
        .map(|c| {
            let (x, xp) = (to_px(&c.canonical), to_px(&c.target));
            let d_target = line_distance(&(f * x), &xp);
            let d_canonical = line_distance(&(f.transpose() * xp), &x);
            0.5 * (d_target * d_target + d_canonical * d_canonical)
        })
        .collect())
}

/// Root-mean-square difference over masked pixels and all channels.
pub fn rmse(a: &Frame, b: &Frame, mask: Option<&[bool]>) -> Result<f64> {
    Ok(masked_mse(a, b, mask)?.sqrt())
}

/// Peak signal-to-noise ratio for values in `[0, 1]`, over masked pixels.
pub fn psnr(a: &Frame, b: &Frame, mask: Option<&[bool]>) -> Result<f64> {
    let mse = masked_mse(a, b, mask)?;
    Ok(if mse == 0.0 { f64::INFINITY } else { -10.0 * mse.log10() })
}

fn masked_mse(a: &Frame, b: &Frame, mask: Option<&[bool]>) -> Result<f64> {
    a.same_shape(b)?;
    let c = a.channels();
    let (mut sse, mut count) = (0.0, 0usize);
    for (k, (pa, pb)) in a.values().chunks(c).zip(b.values().chunks(c)).enumerate() {
        if mask.is_none_or(|m| m[k]) {
            sse += pa.iter().zip(pb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
            count += c;
        }
    }
    if count == 0 {
        return Err(Error::Numeric("image comparison over an empty mask".into()));
    }
    Ok(sse / count as f64)
}

/// Pixels of frame `f` whose backward warp into frame 1 is valid and depth-consistent.
fn warp_consistency_mask(target_depth: &DepthMap, source_depth: &DepthMap, rel: &Pose, k: &Intrinsics) -> Vec<bool> {
    let (h, w) = (target_depth.height(), target_depth.width());
    let to_source = rel.inverse();
    let mut mask = Vec::with_capacity(h * w);
    for i in 0..h {
        for j in 0..w {
            let u = pixel_center(i, j, h, w);
            let p = to_source.transform(&(k.unproject(&u) * target_depth.get(i, j)));
            if p.z <= crate::displacement::Z_MIN {
                mask.push(false);
                continue;
            }
            let (x, y) = to_pixel(&k.project(&p), h, w);
            let inside = (0.0..=(w - 1) as f64).contains(&x) && (0.0..=(h - 1) as f64).contains(&y);
            mask.push(inside && (source_depth.sample(x, y) - p.z).abs() <= DEPTH_CONSISTENCY * p.z);
        }
    }
    mask
}

/// Mean RMSE between frame 1 warped to each later frame and that frame.
///
/// Frame 1 is resampled with the backward field built from frame `f`'s depth
/// and the pose relative to frame 1. Only pixels that land inside frame 1 and
/// agree with its depth to within [`DEPTH_CONSISTENCY`] are compared.
pub fn depth_warp_rmse(frames: &[Frame], depths: &[DepthMap], traj: &Trajectory) -> Result<f64> {
    if frames.len() != depths.len() {
        return Err(Error::LengthMismatch(frames.len(), depths.len()));
    }
    if frames.len() != traj.len() {
        return Err(Error::LengthMismatch(frames.len(), traj.len()));
    }
    if frames.len() < 2 {
        return Err(Error::InvalidInput("need at least two frames".into()));
    }
    let (h, w, _) = frames[0].shape();
    for (f, d) in frames.iter().zip(depths) {
        frames[0].same_shape(f)?;
        if d.height() != h || d.width() != w {
            return Err(Error::DimensionMismatch {
                expected: format!("{h}x{w}"),
                actual: format!("{}x{}", d.height(), d.width()),
            });
        }
    }
    let rel = traj.relative_to_first();
    let mut per_frame = Vec::new();
    for f in 1..frames.len() {
        let pose = &rel.poses()[f];
        let warped = grid_sample(&frames[0], &backward_field(&depths[f], pose, &traj.intrinsics))?;
        let mask = warp_consistency_mask(&depths[f], &depths[0], pose, &traj.intrinsics);
        if mask.iter().any(|&m| m) {
            per_frame.push(rmse(&warped, &frames[f], Some(&mask))?);
        }
    }
    if per_frame.is_empty() {
        return Err(Error::Numeric("no mutually valid pixels in any frame".into()));
    }
    Ok(per_frame.iter().sum::<f64>() / per_frame.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisAlignment {
    pub cos_t: Option<f64>,
    pub cos_r: Option<f64>,
    pub combined: f64,
}

/// Mean cosine between estimated and ground-truth per-step translation and rotation vectors.
pub fn axis_alignment(est: &Trajectory, gt: &Trajectory) -> Result<AxisAlignment> {
    if est.len() != gt.len() {
        return Err(Error::LengthMismatch(est.len(), gt.len()));
    }
    let mean_cos = |pairs: Vec<(Vec3, Vec3)>| {
        let cos: Vec<f64> = pairs
            .into_iter()
            .filter(|(a, b)| a.norm() > 1e-12 && b.norm() > 1e-12)
            .map(|(a, b)| (a.dot(&b) / (a.norm() * b.norm())).clamp(-1.0, 1.0))
            .collect();
        (!cos.is_empty()).then(|| cos.iter().sum::<f64>() / cos.len() as f64)
    };
    let (me, mg) = (step_motions(est), step_motions(gt));
    let cos_t = mean_cos(me.iter().zip(&mg).map(|(e, g)| (e.0, g.0)).collect());
    let cos_r = mean_cos(me.iter().zip(&mg).map(|(e, g)| (e.1, g.1)).collect());
    let combined = match (cos_t, cos_r) {
        (Some(t), Some(r)) => 0.5 * (t + r),
        (Some(x), None) | (None, Some(x)) => x,
        (None, None) => return Err(Error::AllStepsDegenerate),
    };
    Ok(AxisAlignment { cos_t, cos_r, combined })
}

/// Every metric the evaluation can produce; absent metrics serialize as null.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rpe: Option<RpeResult>,
    pub leakage_gt: Option<Leakage>,
    pub leakage_pred: Option<Leakage>,
    pub lambda: Option<f64>,
    pub direction_bias: Option<DirectionBias>,
    pub epipolar_rmse: Option<f64>,
    pub epipolar_pairs: Option<usize>,
    pub depth_warp_rmse: Option<f64>,
    pub axis: Option<AxisAlignment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionBias {
    pub inputs: BiasInputs,
    pub d_inc: f64,
    pub q_dec: f64,
}

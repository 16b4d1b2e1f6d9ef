//! Rigid-motion algebra, pinhole intrinsics and named camera-motion generators.
//!
//! Poses map canonical-camera coordinates into target-camera coordinates,
//! `p' = R p + t`. Camera axes follow the image convention: x right, y down,
//! z forward.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Matrix4, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

const SMALL_ANGLE: f64 = 1e-4;

/// A 3×3 rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Wraps a matrix after checking orthonormality and orientation to 1e-9.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let err = (m.transpose() * m - Matrix3::identity()).abs().max();
        let det = m.determinant();
        if !m.iter().all(|v| v.is_finite()) || err > 1e-9 || (det - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "not a rotation (orthogonality error {err:e}, det {det})"
            )));
        }
        Ok(Rotation(m))
    }

    pub(crate) fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rotation(m)
    }

    /// Rodrigues' formula for a rotation vector (axis × angle, radians).
    pub fn exp(w: &Vec3) -> Self {
        let theta = w.norm();
        let k = skew(w);
        let (a, b) = if theta < SMALL_ANGLE {
            let t2 = theta * theta;
            (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
        } else {
            (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
        };
        Rotation(Matrix3::identity() + k * a + k * k * b)
    }

    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        Self::exp(&(axis.normalize() * angle))
    }

    pub fn about_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
    }

    pub fn about_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
    }

    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// Rotation vector with norm in `[0, π]`.
    pub fn log(&self) -> Vec3 {
        let m = &self.0;
        let s = 0.5 * Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
        let sin = s.norm();
        let cos = 0.5 * (m.trace() - 1.0);
        let theta = sin.atan2(cos);

        if theta < SMALL_ANGLE {
            return s * (1.0 + theta * theta / 6.0);
        }
        if cos > -0.99 {
            return s * (theta / sin);
        }

        // Near π the skew part vanishes; recover the axis from the symmetric part,
        // B = (R + Rᵀ)/2 - cos·I = (1 - cos)·a·aᵀ.
        let b = 0.5 * (m + m.transpose()) - Matrix3::identity() * cos;
        let k = (0..3)
            .max_by(|&i, &j| b[(i, i)].total_cmp(&b[(j, j)]))
            .unwrap_or(0);
        let mut axis = b.column(k).into_owned() / (b[(k, k)] * (1.0 - cos)).sqrt();
        axis.normalize_mut();
        if axis.dot(&s) < 0.0 {
            axis = -axis;
        }
        axis * theta
    }

    pub fn angle(&self) -> f64 {
        self.log().norm()
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    pub fn compose(&self, other: &Rotation) -> Self {
        Rotation(self.0 * other.0)
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn is_identity(&self) -> bool {
        self.0 == Matrix3::identity()
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

pub(crate) fn skew(w: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Rigid transform from canonical-camera to target-camera coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub rotation: Rotation,
    pub translation: Vec3,
}

impl Pose {
    pub fn new(rotation: Rotation, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self::new(Rotation::identity(), t)
    }

    pub fn from_rotation(r: Rotation) -> Self {
        Self::new(r, Vec3::zeros())
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self::new(rt, -(rt.apply(&self.translation)))
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Self {
        Self::new(
            self.rotation.compose(&other.rotation),
            self.rotation.apply(&other.translation) + self.translation,
        )
    }

    pub fn transform(&self, p: &Vec3) -> Vec3 {
        self.rotation.apply(p) + self.translation
    }

    /// Camera centre expressed in the canonical frame, `-Rᵀt`.
    pub fn camera_center(&self) -> Vec3 {
        -(self.rotation.transpose().apply(&self.translation))
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn is_finite(&self) -> bool {
        self.rotation.matrix().iter().chain(self.translation.iter()).all(|v| v.is_finite())
    }
}

/// Pinhole intrinsics in normalized image units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Default for Intrinsics {
    fn default() -> Self {
        Self { fx: 1.0, fy: 1.0, cx: 0.0, cy: 0.0 }
    }
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) || !cx.is_finite() || !cy.is_finite() {
            return Err(Error::InvalidInput(format!("focal lengths must be positive, got ({fx}, {fy})")));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }

    /// `K⁻¹ [u, 1]`, a ray with unit z.
    pub fn unproject(&self, u: &Vec2) -> Vec3 {
        Vec3::new((u.x - self.cx) / self.fx, (u.y - self.cy) / self.fy, 1.0)
    }

    /// `Π(K p)`; the caller is responsible for checking `p.z`.
    pub fn project(&self, p: &Vec3) -> Vec2 {
        Vec2::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }
}

/// Per-frame poses sharing one set of intrinsics.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    poses: Vec<Pose>,
    pub intrinsics: Intrinsics,
}

impl Trajectory {
    pub fn new(poses: Vec<Pose>, intrinsics: Intrinsics) -> Result<Self> {
        if poses.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        if let Some(i) = poses.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("pose {i} has non-finite components")));
        }
        Ok(Self { poses, intrinsics })
    }

    pub fn identity(frames: usize) -> Result<Self> {
        Self::new(vec![Pose::identity(); frames], Intrinsics::default())
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Re-expresses every pose relative to the first, `T̄_f = T_f T_1⁻¹`.
    pub fn relative_to_first(&self) -> Trajectory {
        let first_inv = self.poses[0].inverse();
        let mut poses: Vec<Pose> = self.poses.iter().map(|p| p.compose(&first_inv)).collect();
        poses[0] = Pose::identity();
        Trajectory { poses, intrinsics: self.intrinsics }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionKind {
    Pan,
    Tilt,
    Truck,
    Pedestal,
    Dolly,
    Arc,
    Orbit,
}

impl MotionKind {
    pub const ALL: [MotionKind; 7] = [
        MotionKind::Pan,
        MotionKind::Tilt,
        MotionKind::Truck,
        MotionKind::Pedestal,
        MotionKind::Dolly,
        MotionKind::Arc,
        MotionKind::Orbit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MotionKind::Pan => "pan",
            MotionKind::Tilt => "tilt",
            MotionKind::Truck => "truck",
            MotionKind::Pedestal => "pedestal",
            MotionKind::Dolly => "dolly",
            MotionKind::Arc => "arc",
            MotionKind::Orbit => "orbit",
        }
    }

    pub fn is_rotation_only(&self) -> bool {
        matches!(self, MotionKind::Pan | MotionKind::Tilt)
    }

    pub fn is_translation_only(&self) -> bool {
        matches!(self, MotionKind::Truck | MotionKind::Pedestal | MotionKind::Dolly)
    }
}

impl fmt::Display for MotionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MotionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "pan" => MotionKind::Pan,
            "tilt" => MotionKind::Tilt,
            "truck" => MotionKind::Truck,
            "pedestal" => MotionKind::Pedestal,
            "dolly" | "zoom" => MotionKind::Dolly,
            "arc" => MotionKind::Arc,
            "orbit" => MotionKind::Orbit,
            _ => return Err(Error::UnknownMotion(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    /// Orbit radius; the pivot sits on the canonical optical axis at this depth.
    pub radius: f64,
    pub intrinsics: Intrinsics,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self { radius: 2.0, intrinsics: Intrinsics::default() }
    }
}

/// Generates a named camera motion.
///
/// `magnitude` is the displacement reached at the last frame, in radians for
/// pan/tilt/arc/orbit and scene units for truck/pedestal/dolly; frames in
/// between are spaced linearly. Positive values move or turn the camera
/// towards +x (right), +y (down) or +z (forward). Arc and orbit sweep the
/// camera around a vertical axis through `(0, 0, radius)` while keeping the
/// pivot on the optical axis.
pub fn make_motion(kind: MotionKind, magnitude: f64, frames: usize, params: &MotionParams) -> Result<Trajectory> {
    if frames == 0 {
        return Err(Error::EmptyTrajectory);
    }
    if !magnitude.is_finite() {
        return Err(Error::InvalidInput(format!("magnitude must be finite, got {magnitude}")));
    }
    if matches!(kind, MotionKind::Arc | MotionKind::Orbit) && !(params.radius > 0.0 && params.radius.is_finite()) {
        return Err(Error::InvalidInput(format!("orbit radius must be positive, got {}", params.radius)));
    }

    let poses = (0..frames)
        .map(|f| {
            let s = if frames == 1 { 0.0 } else { magnitude * f as f64 / (frames - 1) as f64 };
            // The camera's own pose in the canonical frame is (Rc, c); the stored
            // pose is its inverse (Rcᵀ, -Rcᵀc).
            match kind {
                MotionKind::Pan => Pose::from_rotation(Rotation::about_y(s).transpose()),
                MotionKind::Tilt => Pose::from_rotation(Rotation::about_x(-s).transpose()),
                MotionKind::Truck => Pose::from_translation(Vec3::new(-s, 0.0, 0.0)),
                MotionKind::Pedestal => Pose::from_translation(Vec3::new(0.0, -s, 0.0)),
                MotionKind::Dolly => Pose::from_translation(Vec3::new(0.0, 0.0, -s)),
                MotionKind::Arc | MotionKind::Orbit => {
                    let r = params.radius;
                    let rc = Rotation::about_y(s);
                    let pivot = Vec3::new(0.0, 0.0, r);
                    let center = pivot + rc.apply(&Vec3::new(0.0, 0.0, -r));
                    let rt = rc.transpose();
                    Pose::new(rt, -(rt.apply(&center)))
                }
            }
        })
        .collect();
    Trajectory::new(poses, params.intrinsics)
}

/// Default end-of-clip magnitude for a motion kind at unit control scale.
pub fn default_magnitude(kind: MotionKind) -> f64 {
    if kind.is_translation_only() {
        0.4
    } else {
        PI / 18.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Vector4};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rotvec(rng: &mut impl Rng, max_angle: f64) -> Vec3 {
        let axis = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize();
        axis * rng.gen_range(0.0..max_angle)
    }

    fn random_pose(rng: &mut impl Rng) -> Pose {
        let w = random_rotvec(rng, PI);
        let t = Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        Pose::new(Rotation::exp(&w), t)
    }

    fn max_abs(m: &Matrix4<f64>) -> f64 {
        m.abs().max()
    }

    #[test]
    fn inverse_of_identity_is_identity() {
        assert_eq!(Pose::identity().inverse(), Pose::identity());
    }

    #[test]
    fn compose_matches_homogeneous_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = random_pose(&mut rng);
            let b = random_pose(&mut rng);
            let oracle = a.to_homogeneous() * b.to_homogeneous();
            assert!(max_abs(&(a.compose(&b).to_homogeneous() - oracle)) < 1e-12);

            let p = Vec3::new(rng.gen(), rng.gen(), rng.gen());
            let hp = oracle * Vector4::new(p.x, p.y, p.z, 1.0);
            assert!((a.compose(&b).transform(&p) - hp.xyz()).norm() < 1e-12);

            let inv = a.inverse();
            assert!(max_abs(&(inv.compose(&a).to_homogeneous() - Matrix4::identity())) < 1e-12);
            assert!(max_abs(&(inv.inverse().to_homogeneous() - a.to_homogeneous())) < 1e-12);
        }
    }

    #[test]
    fn log_of_identity_is_zero() {
        assert_eq!(Rotation::identity().log(), Vec3::zeros());
    }

    #[test]
    fn log_of_axis_rotation() {
        let w = Rotation::about_z(0.3).log();
        assert!((w - Vec3::new(0.0, 0.0, 0.3)).norm() < 1e-12);
    }

    #[test]
    fn log_inverts_rodrigues_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let w = random_rotvec(&mut rng, PI);
            // Independent Rodrigues implementation.
            let oracle = *Rotation3::from_scaled_axis(w).matrix();
            let r = Rotation::from_matrix(oracle).unwrap();
            let back = r.log();
            assert!(back.norm() <= PI + 1e-12);
            assert!((back - w).norm() < 1e-9, "{w:?} -> {back:?}");
            assert!((Rotation::exp(&back).matrix() - oracle).abs().max() < 1e-9);
        }
    }

    #[test]
    fn log_handles_half_turn_and_tiny_angles() {
        for axis in [Vec3::x(), Vec3::y(), Vec3::z(), Vec3::new(1.0, -2.0, 0.5).normalize()] {
            for angle in [PI, PI - 1e-7, PI - 1e-3, 1e-9, 1e-5, 0.5] {
                let r = Rotation::exp(&(axis * angle));
                let w = r.log();
                assert!((w.norm() - angle).abs() < 1e-9, "{axis:?} {angle}: {}", w.norm());
                assert!((Rotation::exp(&w).matrix() - r.matrix()).abs().max() < 1e-9);
            }
        }
    }

    #[test]
    fn relative_to_first_recovers_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let traj = Trajectory::new((0..10).map(|_| random_pose(&mut rng)).collect(), Intrinsics::default()).unwrap();
        let rel = traj.relative_to_first();
        assert_eq!(rel.poses()[0], Pose::identity());
        for (out, inp) in rel.poses().iter().zip(traj.poses()) {
            let recovered = out.to_homogeneous() * traj.poses()[0].to_homogeneous();
            assert!(max_abs(&(recovered - inp.to_homogeneous())) < 1e-12);
        }
        let twice = rel.relative_to_first();
        for (a, b) in twice.poses().iter().zip(rel.poses()) {
            assert!(max_abs(&(a.to_homogeneous() - b.to_homogeneous())) < 1e-12);
        }
    }

    #[test]
    fn relative_to_first_keeps_identity_trajectory() {
        let traj = Trajectory::identity(6).unwrap();
        assert_eq!(traj.relative_to_first(), traj);
    }

    #[test]
    fn zero_pan_is_identity() {
        let traj = make_motion(MotionKind::Pan, 0.0, 8, &MotionParams::default()).unwrap();
        assert_eq!(traj.len(), 8);
        for p in traj.poses() {
            assert_eq!(p.to_homogeneous(), Matrix4::identity());
        }
    }

    #[test]
    fn truck_is_linear_pure_translation() {
        let traj = make_motion(MotionKind::Truck, 0.4, 5, &MotionParams::default()).unwrap();
        for (f, p) in traj.poses().iter().enumerate() {
            assert!(p.rotation.is_identity());
            assert!((p.translation.norm() - 0.1 * f as f64).abs() < 1e-15);
            assert_eq!(p.translation.y, 0.0);
            assert_eq!(p.translation.z, 0.0);
        }
    }

    #[test]
    fn generators_produce_valid_pure_motions() {
        for kind in MotionKind::ALL {
            let traj = make_motion(kind, 0.7, 9, &MotionParams::default()).unwrap();
            assert_eq!(traj.poses()[0].to_homogeneous(), Matrix4::identity(), "{kind}");
            for p in traj.poses() {
                let m = p.rotation.matrix();
                assert!((m.transpose() * m - Matrix3::identity()).abs().max() <= 1e-9);
                assert!((m.determinant() - 1.0).abs() <= 1e-9);
                if kind.is_translation_only() {
                    assert!(p.rotation.is_identity());
                }
                if kind.is_rotation_only() {
                    assert!(p.translation.iter().all(|&v| v == 0.0));
                }
            }
        }
    }

    #[test]
    fn orbit_keeps_constant_radius_and_step() {
        let radius = 2.0;
        let params = MotionParams { radius, ..Default::default() };
        let traj = make_motion(MotionKind::Orbit, PI / 2.0, 9, &params).unwrap();
        let pivot = Vec3::new(0.0, 0.0, radius);
        let offsets: Vec<Vec3> = traj.poses().iter().map(|p| p.camera_center() - pivot).collect();
        for o in &offsets {
            assert!((o.norm() - radius).abs() < 1e-12);
        }
        let steps: Vec<f64> = offsets.windows(2).map(|w| w[0].angle(&w[1])).collect();
        for s in &steps {
            assert!((s - steps[0]).abs() < 1e-9);
        }
        // The pivot stays on every camera's optical axis.
        for p in traj.poses() {
            let q = p.transform(&pivot);
            assert!(q.x.abs() < 1e-12 && q.y.abs() < 1e-12 && (q.z - radius).abs() < 1e-12);
        }
    }

    #[test]
    fn generator_errors() {
        assert!(matches!(
            make_motion(MotionKind::Pan, 0.1, 0, &MotionParams::default()),
            Err(Error::EmptyTrajectory)
        ));
        assert!(matches!("spin".parse::<MotionKind>(), Err(Error::UnknownMotion(_))));
        assert_eq!("zoom".parse::<MotionKind>().unwrap(), MotionKind::Dolly);
    }
}

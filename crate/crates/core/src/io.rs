//! On-disk formats.
//!
//! * Tensor files: `b"CPTF"`, `u16` version, `u8` dtype (1 = f32), `u8` rank,
//!   `rank × u32` dims, then the row-major payload. Everything little-endian.
//! * Trajectory files: JSON with unit quaternions (`w, x, y, z`) and
//!   translations per frame, in the canonical-to-camera convention.
//! * Report files: JSON metrics plus run metadata.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{Quaternion, Rotation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::diffusion::LatentVideo;
use crate::displacement::DepthMap;
use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, Pose, Rotation, Trajectory, Vec3};
use crate::metrics::MetricsReport;
use crate::resample::Frame;

pub const TENSOR_MAGIC: [u8; 4] = *b"CPTF";
pub const TENSOR_VERSION: u16 = 1;
pub const DTYPE_F32: u8 = 1;
pub const CONVENTION: &str = "canonical_to_camera";

/// A dense f32 tensor with its dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if dims.len() > u8::MAX as usize || dims.iter().any(|&d| d > u32::MAX as usize) || expected != data.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{dims:?}"),
                actual: format!("{} values", data.len()),
            });
        }
        Ok(Self { dims, data })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(&TENSOR_MAGIC);
        out.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
        out.push(DTYPE_F32);
        out.push(self.dims.len() as u8);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = |n: usize| {
            bytes.get(..n).ok_or(Error::Truncated { expected: n, found: bytes.len() })
        };
        let magic: [u8; 4] = header(4)?.try_into().expect("slice of four bytes");
        if magic != TENSOR_MAGIC {
            return Err(Error::BadMagic(magic));
        }
        let fixed = header(8)?;
        let version = u16::from_le_bytes([fixed[4], fixed[5]]);
        if version != TENSOR_VERSION {
            return Err(Error::UnknownVersion(version));
        }
        if fixed[6] != DTYPE_F32 {
            return Err(Error::UnknownDtype(fixed[6]));
        }
        let rank = fixed[7] as usize;
        let dims_end = 8 + 4 * rank;
        let dims: Vec<usize> = header(dims_end)?[8..]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().expect("four-byte chunk")) as usize)
            .collect();
        let count = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).ok_or_else(|| {
            Error::Format(format!("tensor dims {dims:?} overflow"))
        })?;
        let expected = dims_end + 4 * count;
        if bytes.len() < expected {
            return Err(Error::Truncated { expected, found: bytes.len() });
        }
        if bytes.len() > expected {
            return Err(Error::Format(format!("{} trailing bytes after payload", bytes.len() - expected)));
        }
        let data = bytes[dims_end..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("four-byte chunk")))
            .collect();
        Ok(Self { dims, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_frames(frames: &[Frame]) -> Result<Self> {
        let video = LatentVideo::new(frames.to_vec())?;
        let (f, h, w, c) = video.shape();
        Self::new(vec![f, h, w, c], video.iter_values().map(|v| v as f32).collect())
    }

    /// Reads an `F×H×W×C` tensor (or `H×W×C` as a single frame).
    pub fn to_frames(&self) -> Result<Vec<Frame>> {
        let (f, h, w, c) = match self.dims[..] {
            [f, h, w, c] => (f, h, w, c),
            [h, w, c] => (1, h, w, c),
            _ => return Err(Error::Format(format!("expected rank 3 or 4 frames, got dims {:?}", self.dims))),
        };
        let per = h * w * c;
        (0..f)
            .map(|k| Frame::new(h, w, c, self.data[k * per..(k + 1) * per].iter().map(|&v| v as f64).collect()))
            .collect()
    }

    pub fn from_depths(depths: &[DepthMap]) -> Result<Self> {
        let first = depths.first().ok_or(Error::EmptySequence)?;
        let (h, w) = (first.height(), first.width());
        let mut data = Vec::with_capacity(depths.len() * h * w);
        for d in depths {
            if (d.height(), d.width()) != (h, w) {
                return Err(Error::DimensionMismatch {
                    expected: format!("{h}x{w}"),
                    actual: format!("{}x{}", d.height(), d.width()),
                });
            }
            data.extend(d.values().iter().map(|&v| v as f32));
        }
        Self::new(vec![depths.len(), h, w], data)
    }

    /// Reads an `F×H×W` tensor (or `H×W` as a single map).
    pub fn to_depths(&self) -> Result<Vec<DepthMap>> {
        let (f, h, w) = match self.dims[..] {
            [f, h, w] => (f, h, w),
            [h, w] => (1, h, w),
            _ => return Err(Error::Format(format!("expected rank 2 or 3 depth, got dims {:?}", self.dims))),
        };
        (0..f)
            .map(|k| DepthMap::new(h, w, self.data[k * h * w..(k + 1) * h * w].iter().map(|&v| v as f64).collect()))
            .collect()
    }
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PoseRecord {
    q: [f64; 4],
    t: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrajectoryDoc {
    frames: usize,
    convention: String,
    intrinsics: Intrinsics,
    poses: Vec<PoseRecord>,
}

pub fn trajectory_to_json(traj: &Trajectory) -> Result<String> {
    let poses = traj
        .poses()
        .iter()
        .map(|p| {
            let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*p.rotation.matrix()));
            PoseRecord { q: [q.w, q.i, q.j, q.k], t: [p.translation.x, p.translation.y, p.translation.z] }
        })
        .collect();
    let doc = TrajectoryDoc { frames: traj.len(), convention: CONVENTION.into(), intrinsics: traj.intrinsics, poses };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Parses a trajectory document. Quaternions within 1e-3 of unit norm are
/// renormalized; anything further off is rejected.
pub fn trajectory_from_json(text: &str) -> Result<Trajectory> {
    let doc: TrajectoryDoc = serde_json::from_str(text)?;
    if doc.convention != CONVENTION {
        return Err(Error::Format(format!("unsupported pose convention `{}`", doc.convention)));
    }
    if doc.frames != doc.poses.len() {
        return Err(Error::Format(format!("frames = {} but {} poses listed", doc.frames, doc.poses.len())));
    }
    let k = Intrinsics::new(doc.intrinsics.fx, doc.intrinsics.fy, doc.intrinsics.cx, doc.intrinsics.cy)?;
    let poses = doc
        .poses
        .iter()
        .map(|r| {
            let [w, x, y, z] = r.q;
            let norm = (w * w + x * x + y * y + z * z).sqrt();
            if !norm.is_finite() || (norm - 1.0).abs() > 1e-3 {
                return Err(Error::NonUnitQuaternion(norm));
            }
            let q = UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z));
            let rotation = Rotation::from_matrix_unchecked(*q.to_rotation_matrix().matrix());
            Ok(Pose::new(rotation, Vec3::new(r.t[0], r.t[1], r.t[2])))
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(poses, k)
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    write_atomic(path, trajectory_to_json(traj)?.as_bytes())
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    trajectory_from_json(&fs::read_to_string(path)?)
}

/// Run metadata stored alongside metrics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool_version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub schedule: Option<Vec<f64>>,
    /// Definitions of any proxy measurements in the report.
    pub notes: Vec<String>,
}

/// One point of a control-scale sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub scale: f64,
    pub dynamics: f64,
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeCurve {
    pub motion: String,
    pub points: Vec<ProbePoint>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub metadata: RunMetadata,
    pub metrics: MetricsReport,
    pub frame_psnr: Option<Vec<f64>>,
    pub probe: Option<Vec<ProbeCurve>>,
}

impl ReportFile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_motion, MotionKind, MotionParams};

    #[test]
    fn tensor_round_trip_is_bitwise() {
        let data: Vec<f32> = (0..96).map(|i| (i as f32 * 0.37).sin() * 1e3).collect();
        let t = Tensor::new(vec![3, 4, 4, 2], data).unwrap();
        let back = Tensor::from_bytes(&t.to_bytes()).unwrap();
        assert_eq!(back.dims, t.dims);
        assert!(back.data.iter().zip(&t.data).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn tensor_header_layout() {
        let bytes = Tensor::new(vec![2, 1], vec![1.0, -2.0]).unwrap().to_bytes();
        assert_eq!(&bytes[..4], b"CPTF");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(bytes[6], 1);
        assert_eq!(bytes[7], 2);
        assert_eq!(&bytes[8..12], &[2, 0, 0, 0]);
        assert_eq!(&bytes[16..20], &1.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 24);
    }

    #[test]
    fn tensor_corruption_is_detected() {
        let bytes = Tensor::new(vec![3, 4, 4, 2], vec![0.5; 96]).unwrap().to_bytes();
        assert!(matches!(
            Tensor::from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated { .. })
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Tensor::from_bytes(&bad), Err(Error::BadMagic(_))));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(Tensor::from_bytes(&bad), Err(Error::UnknownVersion(9))));
        let mut bad = bytes;
        bad[6] = 2;
        assert!(matches!(Tensor::from_bytes(&bad), Err(Error::UnknownDtype(2))));
        assert!(matches!(Tensor::from_bytes(b"CP"), Err(Error::Truncated { .. })));
    }

    #[test]
    fn identity_trajectory_file() {
        let text = r#"{
            "frames": 2,
            "convention": "canonical_to_camera",
            "intrinsics": {"fx": 1.0, "fy": 1.0, "cx": 0.0, "cy": 0.0},
            "poses": [{"q": [1, 0, 0, 0], "t": [0, 0, 0]}, {"q": [1, 0, 0, 0], "t": [0, 0, 0]}]
        }"#;
        let traj = trajectory_from_json(text).unwrap();
        assert!(traj.poses().iter().all(|p| *p == Pose::identity()));
    }

    #[test]
    fn trajectory_quaternion_checks() {
        let doc = |q: &str| {
            format!(
                r#"{{"frames":1,"convention":"canonical_to_camera","intrinsics":{{"fx":1,"fy":1,"cx":0,"cy":0}},"poses":[{{"q":{q},"t":[0,0,0]}}]}}"#
            )
        };
        let slightly_off = trajectory_from_json(&doc("[1.0005, 0, 0, 0]")).unwrap();
        assert_eq!(slightly_off.poses()[0].rotation.matrix(), &nalgebra::Matrix3::identity());
        assert!(matches!(trajectory_from_json(&doc("[1.1, 0, 0, 0]")), Err(Error::NonUnitQuaternion(_))));
        assert!(matches!(trajectory_from_json("{"), Err(Error::Format(_))));
    }

    #[test]
    fn trajectory_round_trip() {
        let traj = make_motion(MotionKind::Orbit, 0.8, 6, &MotionParams::default()).unwrap();
        let back = trajectory_from_json(&trajectory_to_json(&traj).unwrap()).unwrap();
        for (a, b) in traj.poses().iter().zip(back.poses()) {
            assert!((a.to_homogeneous() - b.to_homogeneous()).abs().max() < 1e-12);
        }
    }

    #[test]
    fn report_round_trip_keeps_nulls() {
        let report = ReportFile::default();
        let text = report.to_json().unwrap();
        assert!(text.contains("\"epipolar_rmse\": null"));
        assert_eq!(ReportFile::from_json(&text).unwrap(), report);
    }
}

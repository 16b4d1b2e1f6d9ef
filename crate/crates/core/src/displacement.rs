//! Depth-driven displacement fields.
//!
//! A pixel is lifted to 3D with its depth, moved by the relative camera pose
//! and projected back; the field stores the resulting offset in normalized
//! image coordinates, where the image spans `[-1, 1]²` and pixel `(i, j)` has
//! its centre at `((2j+1)/W - 1, (2i+1)/H - 1)`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, Pose, Vec2, Vec3};

/// Points closer than this to the camera plane are flagged invalid.
pub const Z_MIN: f64 = 1e-6;

pub fn pixel_center(i: usize, j: usize, h: usize, w: usize) -> Vec2 {
    Vec2::new((2 * j + 1) as f64 / w as f64 - 1.0, (2 * i + 1) as f64 / h as f64 - 1.0)
}

/// Continuous pixel coordinates `(x, y)` of a normalized coordinate.
pub fn to_pixel(u: &Vec2, h: usize, w: usize) -> (f64, f64) {
    (((u.x + 1.0) * w as f64 - 1.0) * 0.5, ((u.y + 1.0) * h as f64 - 1.0) * 0.5)
}

/// Per-pixel depth along the optical axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    h: usize,
    w: usize,
    values: Vec<f64>,
}

impl DepthMap {
    pub fn new(h: usize, w: usize, values: Vec<f64>) -> Result<Self> {
        if h == 0 || w == 0 || values.len() != h * w {
            return Err(Error::DimensionMismatch {
                expected: format!("{h}x{w} (nonzero)"),
                actual: format!("{} values", values.len()),
            });
        }
        if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::NonPositiveDepth(bad));
        }
        Ok(Self { h, w, values })
    }

    pub fn constant(h: usize, w: usize, depth: f64) -> Result<Self> {
        Self::new(h, w, vec![depth; h * w])
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.w + j]
    }

    /// Bilinear lookup at continuous pixel coordinates, clamped to the border.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(0.0, (self.w - 1) as f64);
        let y = y.clamp(0.0, (self.h - 1) as f64);
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.w - 1), (y0 + 1).min(self.h - 1));
        let (ax, ay) = (x - x0 as f64, y - y0 as f64);
        let top = self.get(y0, x0) * (1.0 - ax) + self.get(y0, x1) * ax;
        let bottom = self.get(y1, x0) * (1.0 - ax) + self.get(y1, x1) * ax;
        top * (1.0 - ay) + bottom * ay
    }

    pub fn median(&self) -> f64 {
        let mut sorted = self.values.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.h, self.w, self.values.iter().map(|v| v * factor).collect())
    }

    /// Bilinear resize that keeps the normalized-coordinate extent fixed.
    pub fn resized(&self, h: usize, w: usize) -> Result<Self> {
        if h == self.h && w == self.w {
            return Ok(self.clone());
        }
        let mut values = Vec::with_capacity(h * w);
        for i in 0..h {
            for j in 0..w {
                let (x, y) = to_pixel(&pixel_center(i, j, h, w), self.h, self.w);
                values.push(self.sample(x, y));
            }
        }
        Self::new(h, w, values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldDirection {
    /// Offsets from canonical pixels to where they land in the target view.
    Forward,
    /// Offsets from target pixels to where they are sampled in the canonical view.
    Backward,
}

/// A grid of 2-vector offsets in normalized coordinates, with per-cell validity.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    h: usize,
    w: usize,
    direction: FieldDirection,
    values: Vec<Vec2>,
    valid: Vec<bool>,
}

impl DisplacementField {
    pub fn zeros(h: usize, w: usize, direction: FieldDirection) -> Self {
        Self { h, w, direction, values: vec![Vec2::zeros(); h * w], valid: vec![true; h * w] }
    }

    pub fn from_parts(
        h: usize,
        w: usize,
        direction: FieldDirection,
        values: Vec<Vec2>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        if values.len() != h * w || valid.len() != h * w {
            return Err(Error::DimensionMismatch {
                expected: format!("{} cells", h * w),
                actual: format!("{} values, {} flags", values.len(), valid.len()),
            });
        }
        if values.iter().any(|v| !(v.x.is_finite() && v.y.is_finite())) {
            return Err(Error::InvalidInput("displacement field has non-finite entries".into()));
        }
        Ok(Self { h, w, direction, values, valid })
    }

    /// Uniform offset on every cell.
    pub fn uniform(h: usize, w: usize, direction: FieldDirection, offset: Vec2) -> Self {
        Self { h, w, direction, values: vec![offset; h * w], valid: vec![true; h * w] }
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn direction(&self) -> FieldDirection {
        self.direction
    }

    pub fn values(&self) -> &[Vec2] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn get(&self, i: usize, j: usize) -> Option<Vec2> {
        let k = i * self.w + j;
        self.valid[k].then_some(self.values[k])
    }

    /// Multiplies every offset by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Mean offset length over valid cells, in normalized units.
    pub fn mean_magnitude(&self) -> f64 {
        let (sum, n) = self
            .values
            .iter()
            .zip(&self.valid)
            .filter(|(_, ok)| **ok)
            .fold((0.0, 0usize), |(s, n), (v, _)| (s + v.norm(), n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

/// Lifts a normalized coordinate to a 3D point at the given depth, `d·K⁻¹u`.
pub fn lift(u: &Vec2, depth: f64, k: &Intrinsics) -> Result<Vec3> {
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(Error::NonPositiveDepth(depth));
    }
    Ok(k.unproject(u) * depth)
}

/// Moves `p` by `pose` and projects it; `None` when it lands at or behind `Z_MIN`.
pub fn transform_project(p: &Vec3, pose: &Pose, k: &Intrinsics) -> Option<Vec2> {
    let q = pose.transform(p);
    (q.z > Z_MIN).then(|| k.project(&q))
}

fn build_field(depth: &DepthMap, pose: &Pose, k: &Intrinsics, direction: FieldDirection) -> DisplacementField {
    let (h, w) = (depth.height(), depth.width());
    if *pose == Pose::identity() {
        return DisplacementField::zeros(h, w, direction);
    }
    let mut values = Vec::with_capacity(h * w);
    let mut valid = Vec::with_capacity(h * w);
    for i in 0..h {
        for j in 0..w {
            let u = pixel_center(i, j, h, w);
            // depth is validated on construction
            let p = k.unproject(&u) * depth.get(i, j);
            match transform_project(&p, pose, k) {
                Some(moved) => {
                    values.push(moved - u);
                    valid.push(true);
                }
                None => {
                    values.push(Vec2::zeros());
                    valid.push(false);
                }
            }
        }
    }
    DisplacementField { h, w, direction, values, valid }
}

/// Forward field `u' - u` for canonical pixels lifted with `depth`.
pub fn displacement_field(depth: &DepthMap, pose: &Pose, k: &Intrinsics) -> DisplacementField {
    build_field(depth, pose, k, FieldDirection::Forward)
}

/// Backward field for grid sampling.
///
/// Each target pixel is lifted with `depth`, which stands in for the target
/// view's depth, mapped back through the inverse pose and projected into the
/// canonical view. Exact when `depth` is the true target-view depth.
pub fn backward_field(depth: &DepthMap, pose: &Pose, k: &Intrinsics) -> DisplacementField {
    build_field(depth, &pose.inverse(), k, FieldDirection::Backward)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthMode {
    Raw,
    Constant,
    Sequence,
    #[default]
    PerFrame,
}

impl DepthMode {
    pub fn name(&self) -> &'static str {
        match self {
            DepthMode::Raw => "raw",
            DepthMode::Constant => "constant",
            DepthMode::Sequence => "sequence",
            DepthMode::PerFrame => "per_frame",
        }
    }
}

impl FromStr for DepthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "raw" => DepthMode::Raw,
            "constant" => DepthMode::Constant,
            "sequence" => DepthMode::Sequence,
            "per_frame" | "per-frame" => DepthMode::PerFrame,
            _ => return Err(Error::InvalidInput(format!("unknown depth mode `{s}`"))),
        })
    }
}

/// Rescales a depth sequence: `sequence` divides by the first frame's median,
/// `per_frame` divides each frame by its own median, `constant` sets every
/// value to 1.
pub fn normalize_depth(depths: &[DepthMap], mode: DepthMode) -> Result<Vec<DepthMap>> {
    if depths.is_empty() {
        return Err(Error::EmptySequence);
    }
    match mode {
        DepthMode::Raw => Ok(depths.to_vec()),
        DepthMode::Constant => depths.iter().map(|d| DepthMap::constant(d.height(), d.width(), 1.0)).collect(),
        DepthMode::Sequence => {
            let m = depths[0].median();
            depths.iter().map(|d| d.scaled(1.0 / m)).collect()
        }
        DepthMode::PerFrame => depths.iter().map(|d| d.scaled(1.0 / d.median())).collect(),
    }
}

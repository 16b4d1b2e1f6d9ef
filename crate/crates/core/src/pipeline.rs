//! The synthetic-scene toy problem: a static canonical clip to be steered
//! along a camera trajectory, with exact renders as ground truth.

use crate::diffusion::{DepthSequence, LatentVideo, ToyDenoiser};
use crate::displacement::{backward_field, DepthMap, DisplacementField};
use crate::error::{Error, Result};
use crate::geometry::Trajectory;
use crate::metrics::psnr;
use crate::resample::{grid_sample, Frame};
use crate::scene::{mutual_visibility, RenderOutput, Scene};

/// Log prior weight of the moving clip relative to the static one, so an
/// unguided sampler settles on the static clip.
pub const MOVING_LOG_PRIOR: f64 = -2.0;

/// PSNR reported when a comparison has zero error.
pub const PSNR_CAP: f64 = 100.0;

#[derive(Debug, Clone)]
pub struct ToyProblem {
    pub trajectory: Trajectory,
    /// Render from the first pose.
    pub canonical: RenderOutput,
    /// Render from every pose, the first included.
    pub renders: Vec<RenderOutput>,
    /// Ground-truth depth per frame with background filled by the farthest hit.
    pub depths: Vec<DepthMap>,
    /// Backward fields from each frame's depth and pose relative to frame 1.
    pub fields: Vec<DisplacementField>,
}

impl ToyProblem {
    pub fn new(scene: &Scene, trajectory: Trajectory, h: usize, w: usize) -> Result<Self> {
        if trajectory.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        let renders = scene.render_clip(&trajectory, h, w);
        let canonical = renders[0].clone();
        let depths = renders.iter().map(RenderOutput::filled_depth).collect::<Result<Vec<_>>>()?;
        let rel = trajectory.relative_to_first();
        let fields = depths
            .iter()
            .zip(rel.poses())
            .map(|(d, pose)| backward_field(d, pose, &trajectory.intrinsics))
            .collect();
        Ok(Self { trajectory, canonical, renders, depths, fields })
    }

    pub fn frames(&self) -> usize {
        self.renders.len()
    }

    /// The canonical render repeated for every frame.
    pub fn static_clip(&self) -> LatentVideo {
        LatentVideo::new(vec![self.canonical.image.clone(); self.frames()]).expect("frames share a shape")
    }

    /// The exact render from every pose.
    pub fn moving_clip(&self) -> LatentVideo {
        LatentVideo::new(self.renders.iter().map(|r| r.image.clone()).collect()).expect("frames share a shape")
    }

    /// Denoiser that prefers the static clip unless guidance says otherwise.
    pub fn denoiser(&self) -> Result<ToyDenoiser> {
        ToyDenoiser::with_alternatives(self.static_clip(), vec![(self.moving_clip(), MOVING_LOG_PRIOR)])
    }

    pub fn depth_provider(&self) -> DepthSequence {
        DepthSequence(self.depths.clone())
    }

    /// The canonical render warped into every frame.
    pub fn warped_target(&self) -> Result<Vec<Frame>> {
        self.fields.iter().map(|field| grid_sample(&self.canonical.image, field)).collect()
    }

    /// Per frame, the pixels whose warp footprint sees the same surface in both views.
    pub fn valid_masks(&self) -> Vec<Vec<bool>> {
        self.renders
            .iter()
            .zip(&self.fields)
            .map(|(target, field)| mutual_visibility(&self.canonical, target, field))
            .collect()
    }

    /// PSNR of each output frame against the warped target on valid pixels, capped at [`PSNR_CAP`].
    pub fn frame_psnr(&self, output: &LatentVideo) -> Result<Vec<f64>> {
        if output.len() != self.frames() {
            return Err(Error::LengthMismatch(self.frames(), output.len()));
        }
        let targets = self.warped_target()?;
        output
            .frames()
            .iter()
            .zip(&targets)
            .zip(self.valid_masks())
            .map(|((out, target), mask)| Ok(psnr(out, target, Some(&mask))?.min(PSNR_CAP)))
            .collect()
    }
}

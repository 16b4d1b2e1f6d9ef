//! Procedural planar scenes with exact ray-cast rendering.
//!
//! Scenes are a handful of textured quads in the canonical camera frame.
//! Rendering intersects each pixel ray with every quad and keeps the nearest
//! hit, so depth, plane identity and marker correspondences are exact and can
//! serve as ground truth for warping and consistency checks.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::displacement::{pixel_center, to_pixel, DepthMap, DisplacementField, Z_MIN};
use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, Pose, Rotation, Trajectory, Vec2, Vec3};
use crate::resample::Frame;

pub const BACKGROUND: [f64; 3] = [0.5, 0.5, 0.5];

/// One sinusoidal texture component, frequency in cycles per scene unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Wave {
    pub freq: Vec2,
    pub phase: f64,
    pub amplitude: [f64; 3],
}

/// Band-limited colour pattern: a base colour plus at most eight waves.
#[derive(Debug, Clone, PartialEq)]
pub struct Texture {
    pub base: [f64; 3],
    pub waves: Vec<Wave>,
}

impl Texture {
    pub fn color(&self, s: f64, t: f64) -> [f64; 3] {
        let mut rgb = self.base;
        for wave in &self.waves {
            let arg = TAU * (wave.freq.x * s + wave.freq.y * t) + wave.phase;
            let v = arg.sin();
            for (c, a) in rgb.iter_mut().zip(wave.amplitude) {
                *c += a * v;
            }
        }
        rgb.map(|c| c.clamp(0.0, 1.0))
    }

    /// Waves of 0.8 to 3 cycles per unit of view angle for a surface at
    /// `depth`, so every plane shows the same band in the image. Amplitudes
    /// have magnitude `0.28 / n` per channel, which keeps colours in `[0, 1]`.
    fn random(rng: &mut impl Rng, depth: f64) -> Self {
        let base = [rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7)];
        let n = rng.gen_range(3..=8);
        let waves = (0..n)
            .map(|_| {
                let freq = rng.gen_range(0.8..3.0) / depth;
                let dir = rng.gen_range(0.0..TAU);
                Wave {
                    freq: Vec2::new(freq * dir.cos(), freq * dir.sin()),
                    phase: rng.gen_range(0.0..TAU),
                    amplitude: [0.0; 3].map(|_| if rng.gen_bool(0.5) { 0.28 } else { -0.28 } / n as f64),
                }
            })
            .collect();
        Texture { base, waves }
    }
}

/// A textured rectangle `center + a·axis_u + b·axis_v`, `|a| ≤ half_u`, `|b| ≤ half_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quad {
    pub center: Vec3,
    pub axis_u: Vec3,
    pub axis_v: Vec3,
    pub half_u: f64,
    pub half_v: f64,
    pub texture: Texture,
    /// Tracked points on the surface, in the canonical frame.
    pub markers: Vec<Vec3>,
}

impl Quad {
    pub fn normal(&self) -> Vec3 {
        self.axis_u.cross(&self.axis_v)
    }

    pub fn corners(&self) -> [Vec3; 4] {
        let (u, v) = (self.axis_u * self.half_u, self.axis_v * self.half_v);
        [self.center - u - v, self.center + u - v, self.center + u + v, self.center - u + v]
    }

    /// Ray parameter and local coordinates of the hit, if inside the quad.
    fn intersect(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, f64, f64)> {
        let n = self.normal();
        let denom = n.dot(dir);
        if denom.abs() < 1e-12 {
            return None;
        }
        let s = n.dot(&(self.center - origin)) / denom;
        if s <= Z_MIN {
            return None;
        }
        let rel = origin + dir * s - self.center;
        let (a, b) = (rel.dot(&self.axis_u), rel.dot(&self.axis_v));
        (a.abs() <= self.half_u && b.abs() <= self.half_v).then_some((s, a, b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// Sorted far to near.
    pub quads: Vec<Quad>,
}

/// One marker seen in both the canonical and the target view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub canonical: Vec2,
    pub target: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub image: Frame,
    /// Optical-axis depth; `f64::INFINITY` where no surface is hit.
    pub depth: Vec<f64>,
    pub plane: Vec<Option<usize>>,
    pub correspondences: Vec<Correspondence>,
}

impl RenderOutput {
    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    /// Depth map with background pixels set to `background_depth`.
    pub fn depth_map(&self, background_depth: f64) -> Result<DepthMap> {
        let values = self.depth.iter().map(|&d| if d.is_finite() { d } else { background_depth }).collect();
        DepthMap::new(self.height(), self.width(), values)
    }

    /// Depth map with background pixels set to the farthest hit depth.
    pub fn filled_depth(&self) -> Result<DepthMap> {
        let far = self.depth.iter().copied().filter(|d| d.is_finite()).fold(f64::NAN, f64::max);
        self.depth_map(if far.is_finite() { far } else { 1.0 })
    }

    pub fn coverage(&self) -> f64 {
        self.plane.iter().filter(|p| p.is_some()).count() as f64 / self.plane.len() as f64
    }
}

fn random_quad(rng: &mut impl Rng, z_range: (f64, f64), max_tilt: f64, half_range: (f64, f64), spread: f64) -> Quad {
    let z = rng.gen_range(z_range.0..z_range.1);
    let center = Vec3::new(rng.gen_range(-spread..spread) * z, rng.gen_range(-spread..spread) * z, z);
    let tilt = Rotation::exp(&Vec3::new(
        rng.gen_range(-max_tilt..max_tilt),
        rng.gen_range(-max_tilt..max_tilt),
        rng.gen_range(-0.5..0.5),
    ));
    let half_u = rng.gen_range(half_range.0..half_range.1);
    let half_v = rng.gen_range(half_range.0..half_range.1);
    let mut quad = Quad {
        center,
        axis_u: tilt.apply(&Vec3::x()),
        axis_v: tilt.apply(&Vec3::y()),
        half_u,
        half_v,
        texture: Texture::random(rng, z),
        markers: Vec::new(),
    };
    quad.markers = (0..8)
        .map(|_| {
            let a = rng.gen_range(-0.9..0.9) * half_u;
            let b = rng.gen_range(-0.9..0.9) * half_v;
            quad.center + quad.axis_u * a + quad.axis_v * b
        })
        .collect();
    quad
}

/// Deterministic random scene: a large far backdrop plus `num_planes - 1`
/// smaller quads in front of it. Every corner lies at depth `[1, 5]`.
pub fn generate_scene(seed: u64, num_planes: usize) -> Result<Scene> {
    if num_planes == 0 {
        return Err(Error::InvalidInput("a scene needs at least one plane".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut quads = vec![random_quad(&mut rng, (4.2, 4.4), 0.04, (5.5, 6.0), 0.02)];
    for _ in 1..num_planes {
        quads.push(random_quad(&mut rng, (1.4, 3.4), 0.25, (0.25, 0.7), 0.35));
    }
    quads.sort_by(|a, b| b.center.z.total_cmp(&a.center.z));
    Ok(Scene { quads })
}

impl Scene {
    /// A single fronto-parallel quad at `depth`, large enough to fill the view.
    pub fn fronto_parallel(depth: f64, seed: u64) -> Result<Scene> {
        if !(depth > 0.0 && depth.is_finite()) {
            return Err(Error::NonPositiveDepth(depth));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = 3.0 * depth;
        let center = Vec3::new(0.0, 0.0, depth);
        let markers = (0..16)
            .map(|_| center + Vec3::new(rng.gen_range(-0.8..0.8) * depth, rng.gen_range(-0.8..0.8) * depth, 0.0))
            .collect();
        Ok(Scene {
            quads: vec![Quad {
                center,
                axis_u: Vec3::x(),
                axis_v: Vec3::y(),
                half_u: half,
                half_v: half,
                texture: Texture::random(&mut rng, depth),
                markers,
            }],
        })
    }

    /// Nearest hit along a canonical-frame ray: quad index, ray parameter, local coords.
    pub fn first_hit(&self, origin: &Vec3, dir: &Vec3) -> Option<(usize, f64, f64, f64)> {
        self.quads
            .iter()
            .enumerate()
            .filter_map(|(idx, q)| q.intersect(origin, dir).map(|(s, a, b)| (idx, s, a, b)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
    }

    /// Whether `point` (on quad `idx`) is the first surface seen from `pose`.
    fn sees(&self, pose: &Pose, idx: usize, point: &Vec3) -> bool {
        let origin = pose.camera_center();
        let dir = point - origin;
        match self.first_hit(&origin, &dir) {
            Some((hit, s, _, _)) => hit == idx && (s - 1.0).abs() < 1e-9,
            None => false,
        }
    }

    pub fn render(&self, pose: &Pose, k: &Intrinsics, h: usize, w: usize) -> RenderOutput {
        let rt = pose.rotation.transpose();
        let origin = pose.camera_center();
        let mut image = Vec::with_capacity(h * w * 3);
        let mut depth = Vec::with_capacity(h * w);
        let mut plane = Vec::with_capacity(h * w);
        for i in 0..h {
            for j in 0..w {
                // A unit-z camera ray keeps the ray parameter equal to optical-axis depth.
                let dir = rt.apply(&k.unproject(&pixel_center(i, j, h, w)));
                match self.first_hit(&origin, &dir) {
                    Some((idx, s, a, b)) => {
                        image.extend(self.quads[idx].texture.color(a, b));
                        depth.push(s);
                        plane.push(Some(idx));
                    }
                    None => {
                        image.extend(BACKGROUND);
                        depth.push(f64::INFINITY);
                        plane.push(None);
                    }
                }
            }
        }

        let canonical = Pose::identity();
        let inside = |u: &Vec2| u.x.abs() <= 1.0 && u.y.abs() <= 1.0;
        let mut correspondences = Vec::new();
        for (idx, quad) in self.quads.iter().enumerate() {
            for m in &quad.markers {
                let q = pose.transform(m);
                if m.z <= Z_MIN || q.z <= Z_MIN {
                    continue;
                }
                let (uc, ut) = (k.project(m), k.project(&q));
                if inside(&uc) && inside(&ut) && self.sees(&canonical, idx, m) && self.sees(pose, idx, m) {
                    correspondences.push(Correspondence { canonical: uc, target: ut });
                }
            }
        }

        RenderOutput {
            image: Frame::new(h, w, 3, image).expect("render produces a well-formed frame"),
            depth,
            plane,
            correspondences,
        }
    }

    pub fn render_clip(&self, traj: &Trajectory, h: usize, w: usize) -> Vec<RenderOutput> {
        traj.poses().iter().map(|p| self.render(p, &traj.intrinsics, h, w)).collect()
    }
}

/// Target pixels whose backward-warp footprint in the canonical render lies
/// entirely on the same quad the target pixel sees.
pub fn mutual_visibility(canonical: &RenderOutput, target: &RenderOutput, backward: &DisplacementField) -> Vec<bool> {
    let (h, w) = (target.height(), target.width());
    (0..h * w)
        .map(|k| {
            let (i, j) = (k / w, k % w);
            let (Some(id), Some(offset)) = (target.plane[k], backward.get(i, j)) else {
                return false;
            };
            let (x, y) = to_pixel(&(pixel_center(i, j, h, w) + offset), h, w);
            if !(0.0..=(w - 1) as f64).contains(&x) || !(0.0..=(h - 1) as f64).contains(&y) {
                return false;
            }
            let (x0, y0) = (x.floor() as usize, y.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            [(y0, x0), (y0, x1), (y1, x0), (y1, x1)]
                .iter()
                .all(|&(yy, xx)| canonical.plane[yy * w + xx] == Some(id))
        })
        .collect()
}

/// Target pixels that see a surface whose backward sample lands inside the canonical image.
pub fn in_frame(target: &RenderOutput, backward: &DisplacementField) -> Vec<bool> {
    let (h, w) = (target.height(), target.width());
    (0..h * w)
        .map(|k| {
            let (i, j) = (k / w, k % w);
            let (Some(_), Some(offset)) = (target.plane[k], backward.get(i, j)) else {
                return false;
            };
            let (x, y) = to_pixel(&(pixel_center(i, j, h, w) + offset), h, w);
            (0.0..=(w - 1) as f64).contains(&x) && (0.0..=(h - 1) as f64).contains(&y)
        })
        .collect()
}

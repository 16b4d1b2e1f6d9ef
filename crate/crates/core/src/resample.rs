//! Bilinear grid sampling with border clamping, and its analytic gradients.

use crate::displacement::{pixel_center, to_pixel, DisplacementField};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// An `H×W×C` grid, channel-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    h: usize,
    w: usize,
    c: usize,
    values: Vec<f64>,
}

impl Frame {
    pub fn new(h: usize, w: usize, c: usize, values: Vec<f64>) -> Result<Self> {
        if h == 0 || w == 0 || c == 0 || values.len() != h * w * c {
            return Err(Error::DimensionMismatch {
                expected: format!("{h}x{w}x{c} (nonzero)"),
                actual: format!("{} values", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("frame has non-finite values".into()));
        }
        Ok(Self { h, w, c, values })
    }

    pub fn zeros(h: usize, w: usize, c: usize) -> Self {
        Self { h, w, c, values: vec![0.0; h * w * c] }
    }

    pub fn filled(h: usize, w: usize, c: usize, value: f64) -> Self {
        Self { h, w, c, values: vec![value; h * w * c] }
    }

    pub fn from_fn(h: usize, w: usize, c: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(h * w * c);
        for i in 0..h {
            for j in 0..w {
                for ch in 0..c {
                    values.push(f(i, j, ch));
                }
            }
        }
        Self { h, w, c, values }
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn channels(&self) -> usize {
        self.c
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.h, self.w, self.c)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, ch: usize) -> f64 {
        self.values[(i * self.w + j) * self.c + ch]
    }

    pub fn pixel(&self, i: usize, j: usize) -> &[f64] {
        let k = (i * self.w + j) * self.c;
        &self.values[k..k + self.c]
    }

    pub fn same_shape(&self, other: &Frame) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?}", self.shape()),
                actual: format!("{:?}", other.shape()),
            });
        }
        Ok(())
    }

    /// `self + alpha * (other - self)`, elementwise.
    pub fn lerp(&self, other: &Frame, alpha: f64) -> Result<Frame> {
        self.same_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + alpha * (b - a)).collect();
        Ok(Frame { values, ..*self })
    }
}

/// Bilinear stencil at a clamped sample location.
struct Stencil {
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
    ax: f64,
    ay: f64,
    /// `d(pixel x)/d(normalized u)` when inside the image, zero when clamped.
    dx_du: f64,
    dy_dv: f64,
}

impl Stencil {
    fn at(u: &Vec2, h: usize, w: usize) -> Self {
        let (x, y) = to_pixel(u, h, w);
        let (xmax, ymax) = ((w - 1) as f64, (h - 1) as f64);
        let dx_du = if (0.0..=xmax).contains(&x) && w > 1 { 0.5 * w as f64 } else { 0.0 };
        let dy_dv = if (0.0..=ymax).contains(&y) && h > 1 { 0.5 * h as f64 } else { 0.0 };
        let x = x.clamp(0.0, xmax);
        let y = y.clamp(0.0, ymax);
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        Stencil {
            x0,
            y0,
            x1: (x0 + 1).min(w - 1),
            y1: (y0 + 1).min(h - 1),
            ax: x - x0 as f64,
            ay: y - y0 as f64,
            dx_du,
            dy_dv,
        }
    }
}

fn check_dims(frame: &Frame, field: &DisplacementField) -> Result<()> {
    if frame.height() != field.height() || frame.width() != field.width() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", frame.height(), frame.width()),
            actual: format!("field {}x{}", field.height(), field.width()),
        });
    }
    Ok(())
}

/// Samples `frame` at `u + field[u]` for every pixel `u`.
///
/// Locations outside the image clamp to the border; invalid field cells copy
/// the input pixel unchanged.
pub fn grid_sample(frame: &Frame, field: &DisplacementField) -> Result<Frame> {
    check_dims(frame, field)?;
    let (h, w, c) = frame.shape();
    let mut out = Vec::with_capacity(h * w * c);
    for i in 0..h {
        for j in 0..w {
            let Some(offset) = field.get(i, j) else {
                out.extend_from_slice(frame.pixel(i, j));
                continue;
            };
            let s = Stencil::at(&(pixel_center(i, j, h, w) + offset), h, w);
            for ch in 0..c {
                let top = frame.get(s.y0, s.x0, ch) * (1.0 - s.ax) + frame.get(s.y0, s.x1, ch) * s.ax;
                let bottom = frame.get(s.y1, s.x0, ch) * (1.0 - s.ax) + frame.get(s.y1, s.x1, ch) * s.ax;
                out.push(top * (1.0 - s.ay) + bottom * s.ay);
            }
        }
    }
    Ok(Frame { h, w, c, values: out })
}

/// Gradient with respect to each cell of a displacement field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGradient {
    pub h: usize,
    pub w: usize,
    pub values: Vec<Vec2>,
}

/// Gradients of `⟨grid_sample(frame, field), upstream⟩` with respect to the
/// frame values and the field offsets.
///
/// Bilinear sampling is not differentiable on pixel knots; there the
/// one-sided derivative towards the next pixel is returned.
pub fn grid_sample_grad(frame: &Frame, field: &DisplacementField, upstream: &Frame) -> Result<(Frame, FieldGradient)> {
    check_dims(frame, field)?;
    frame.same_shape(upstream)?;
    let (h, w, c) = frame.shape();
    let mut d_frame = Frame::zeros(h, w, c);
    let mut d_field = vec![Vec2::zeros(); h * w];

    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            let g = &upstream.values[k * c..(k + 1) * c];
            let Some(offset) = field.get(i, j) else {
                for ch in 0..c {
                    d_frame.values[k * c + ch] += g[ch];
                }
                continue;
            };
            let s = Stencil::at(&(pixel_center(i, j, h, w) + offset), h, w);
            let weights = [
                (s.y0, s.x0, (1.0 - s.ax) * (1.0 - s.ay)),
                (s.y0, s.x1, s.ax * (1.0 - s.ay)),
                (s.y1, s.x0, (1.0 - s.ax) * s.ay),
                (s.y1, s.x1, s.ax * s.ay),
            ];
            let mut gx = 0.0;
            let mut gy = 0.0;
            for ch in 0..c {
                for &(yy, xx, wt) in &weights {
                    d_frame.values[(yy * w + xx) * c + ch] += wt * g[ch];
                }
                let (v00, v01) = (frame.get(s.y0, s.x0, ch), frame.get(s.y0, s.x1, ch));
                let (v10, v11) = (frame.get(s.y1, s.x0, ch), frame.get(s.y1, s.x1, ch));
                gx += g[ch] * ((1.0 - s.ay) * (v01 - v00) + s.ay * (v11 - v10));
                gy += g[ch] * ((1.0 - s.ax) * (v10 - v00) + s.ax * (v11 - v01));
            }
            d_field[k] = Vec2::new(gx * s.dx_du, gy * s.dy_dv);
        }
    }
    Ok((d_frame, FieldGradient { h, w, values: d_field }))
}

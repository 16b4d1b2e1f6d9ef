// Checks the analytic bilinear-sampling gradient against central differences.

use camprobe::displacement::{DisplacementField, FieldDirection};
use camprobe::geometry::Vec2;
use camprobe::resample::{grid_sample, grid_sample_grad, Frame};

fn loss(frame: &Frame, field: &DisplacementField, upstream: &Frame) -> camprobe::Result<f64> {
    let out = grid_sample(frame, field)?;
    Ok(out.values().iter().zip(upstream.values()).map(|(a, b)| a * b).sum())
}

pub fn run_example() -> camprobe::Result<()> {
    let (h, w) = (8, 8);
    let frame = Frame::from_fn(h, w, 2, |i, j, c| ((i * 7 + j * 3 + c) as f64 * 0.37).sin());
    let upstream = Frame::from_fn(h, w, 2, |i, j, c| ((i + 2 * j + 5 * c) as f64 * 0.21).cos());
    let offsets: Vec<Vec2> =
        (0..h * w).map(|k| Vec2::new(0.05 + 0.03 * (k as f64 * 0.7).sin(), 0.06 + 0.03 * (k as f64 * 1.3).cos())).collect();
    let field = DisplacementField::from_parts(h, w, FieldDirection::Backward, offsets.clone(), vec![true; h * w])?;

    let (_, grad) = grid_sample_grad(&frame, &field, &upstream)?;
    let step = 1e-5;
    let mut worst = 0.0f64;
    for k in 0..h * w {
        for axis in 0..2 {
            let nudge = |delta: f64| {
                let mut o = offsets.clone();
                o[k][axis] += delta;
                DisplacementField::from_parts(h, w, FieldDirection::Backward, o, vec![true; h * w])
            };
            let numeric = (loss(&frame, &nudge(step)?, &upstream)? - loss(&frame, &nudge(-step)?, &upstream)?) / (2.0 * step);
            let analytic = grad.values[k][axis];
            worst = worst.max((analytic - numeric).abs() / numeric.abs().max(analytic.abs()).max(1e-8));
        }
    }
    println!("max relative gradient error over {} offsets: {worst:.2e}", 2 * h * w);
    assert!(worst < 1e-4, "analytic and numeric gradients disagree");
    Ok(())
}

#[allow(dead_code)]
fn main() -> camprobe::Result<()> {
    run_example()
}

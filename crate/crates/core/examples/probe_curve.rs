// Sweeps the control scale for two motions and renders the resulting
// dynamics and quality curves as SVG.

use camprobe::cli::{probe_point, render_svg, RunConfig};
use camprobe::geometry::MotionKind;
use camprobe::io::ProbeCurve;

pub fn run_example() -> camprobe::Result<()> {
    let cfg = RunConfig { height: 30, width: 52, frames: 7, ..Default::default() };
    let scales = [0.0, 0.5, 1.0, 2.0];
    let mut curves = Vec::new();
    for kind in [MotionKind::Pan, MotionKind::Truck] {
        let points = scales.iter().map(|&s| probe_point(&cfg, kind, s, 0)).collect::<camprobe::Result<Vec<_>>>()?;
        for p in &points {
            println!("{:<6} scale {:.1}: dynamics {:.4}, quality {:6.2} dB", kind.name(), p.scale, p.dynamics, p.quality);
        }
        curves.push(ProbeCurve { motion: kind.name().into(), points });
    }
    let svg = render_svg(&curves)?;
    println!("svg document: {} bytes", svg.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> camprobe::Result<()> {
    run_example()
}

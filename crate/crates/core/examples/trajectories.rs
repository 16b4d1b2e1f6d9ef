// Generates every named camera motion and writes one as a trajectory file.

use camprobe::geometry::{default_magnitude, make_motion, MotionKind, MotionParams};
use camprobe::io::{trajectory_from_json, trajectory_to_json};

pub fn run_example() -> camprobe::Result<()> {
    let params = MotionParams::default();
    for kind in MotionKind::ALL {
        let traj = make_motion(kind, default_magnitude(kind), 13, &params)?;
        let last = traj.poses().last().expect("non-empty trajectory");
        println!(
            "{:<9} last frame: rotation {:6.3} rad, camera centre {:?}",
            kind.name(),
            last.rotation.angle(),
            last.camera_center().iter().map(|v| (v * 1e3).round() / 1e3 + 0.0).collect::<Vec<_>>()
        );
    }

    let orbit = make_motion(MotionKind::Orbit, 0.5, 8, &params)?;
    let text = trajectory_to_json(&orbit)?;
    let back = trajectory_from_json(&text)?;
    println!("orbit file: {} bytes, {} poses after reload", text.len(), back.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> camprobe::Result<()> {
    run_example()
}

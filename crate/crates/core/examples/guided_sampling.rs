// Steers a static synthetic clip along a truck motion with the guided
// flow-matching sampler, for each update strategy, and compares with an
// unguided run.

use camprobe::diffusion::{sample, Schedule, Strategy, UpdateConfig};
use camprobe::geometry::{default_magnitude, make_motion, MotionKind, MotionParams};
use camprobe::pipeline::ToyProblem;
use camprobe::scene::generate_scene;

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn run_example() -> camprobe::Result<()> {
    let kind = MotionKind::Truck;
    let traj = make_motion(kind, default_magnitude(kind), 13, &MotionParams::default())?;
    let problem = ToyProblem::new(&generate_scene(2, 4)?, traj.clone(), 60, 104)?;
    let denoiser = problem.denoiser()?;
    let schedule = Schedule::linear(25)?;

    for (label, cfg) in [
        ("unguided", UpdateConfig { omega: 0.0, ..Default::default() }),
        ("full_resample", UpdateConfig { strategy: Strategy::FullResample, ..Default::default() }),
        ("v_only", UpdateConfig { strategy: Strategy::VOnly, ..Default::default() }),
        ("warp_v", UpdateConfig { strategy: Strategy::WarpV, ..Default::default() }),
    ] {
        let out = sample(&denoiser, &schedule, &traj, &problem.depth_provider(), &cfg)?;
        let frame_psnr = problem.frame_psnr(&out)?;
        let worst = frame_psnr.iter().copied().fold(f64::INFINITY, f64::min);
        println!("{label:<14} mean PSNR vs warped target {:6.2} dB, worst frame {worst:6.2} dB", mean(&frame_psnr));
    }
    println!("update steps inside the window: {}", UpdateConfig::default().update_steps(schedule.steps()));
    Ok(())
}

#[allow(dead_code)]
fn main() -> camprobe::Result<()> {
    run_example()
}

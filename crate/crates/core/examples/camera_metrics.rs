// Scores a noisy, rescaled estimate of an orbit trajectory: relative pose
// error with and without similarity alignment, motion leakage, axis
// alignment and the direction-bias arithmetic.

use camprobe::geometry::{make_motion, MotionKind, MotionParams, Pose, Rotation, Trajectory, Vec3};
use camprobe::metrics::{
    align_trajectory, axis_alignment, compute_lambda, direction_bias, leakage, rpe, Alignment, BiasInputs,
    LeakageNorm, Sim3,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> camprobe::Result<()> {
    let params = MotionParams::default();
    let gt = make_motion(MotionKind::Orbit, 0.6, 13, &params)?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let jittered: Vec<Pose> = gt
        .poses()
        .iter()
        .map(|p| {
            let mut jitter = || Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let dr = Rotation::exp(&(jitter() * 0.002));
            let dt = jitter() * 0.003;
            Pose::new(dr.compose(&p.rotation), p.translation + dt)
        })
        .collect();
    let gauge = Sim3 { scale: 2.5, rotation: Rotation::about_z(0.4), translation: Vec3::new(1.0, -2.0, 0.5) };
    let est = align_trajectory(&Trajectory::new(jittered, gt.intrinsics)?, &gauge);

    let windows = [1, 3, 6];
    let raw = rpe(&est, &gt, &windows, Alignment::None)?;
    let aligned = rpe(&est, &gt, &windows, Alignment::Sim3)?;
    println!("rpe without alignment: t {:.4}, r {:.3} deg", raw.rpe_t, raw.rpe_r);
    println!("rpe with sim3 alignment: t {:.4}, r {:.3} deg", aligned.rpe_t, aligned.rpe_r);

    let rotations: Vec<Trajectory> =
        [MotionKind::Pan, MotionKind::Tilt].iter().map(|&k| make_motion(k, 0.2, 13, &params)).collect::<Result<_, _>>()?;
    let translations: Vec<Trajectory> = [MotionKind::Truck, MotionKind::Pedestal, MotionKind::Dolly]
        .iter()
        .map(|&k| make_motion(k, 0.4, 13, &params))
        .collect::<Result<_, _>>()?;
    let cal = compute_lambda(&rotations, &translations)?;
    let pan = make_motion(MotionKind::Pan, 0.2, 13, &params)?;
    let leaky = make_motion(MotionKind::Arc, 0.2, 13, &params)?;
    let l = leakage(&leaky, &pan, &cal, LeakageNorm::Pred)?;
    println!("lambda {:.4}; arc under a pan command: translation-to-rotation leakage {:.3}", cal.lambda, l.trans_to_rot);

    let axis = axis_alignment(&make_motion(MotionKind::Truck, 0.4, 13, &params)?, &gt)?;
    println!("axis alignment of a truck against the orbit: combined {:.3}", axis.combined);

    let (d_inc, q_dec) = direction_bias(&BiasInputs { d_base: 1.0, q_base: 86.97, d_cam: 1.2, q_cam: 85.61 })?;
    println!("direction bias: dynamics +{:.2}%, quality -{:.2}%", 100.0 * d_inc, 100.0 * q_dec);
    Ok(())
}

#[allow(dead_code)]
fn main() -> camprobe::Result<()> {
    run_example()
}

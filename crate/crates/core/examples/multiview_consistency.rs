// Measures geometric consistency of a rendered clip: epipolar error of
// exact and perturbed marker correspondences, and depth-warp error.

use camprobe::geometry::{make_motion, MotionKind, MotionParams, Vec2};
use camprobe::metrics::{depth_warp_rmse, epipolar_rmse};
use camprobe::scene::{generate_scene, Correspondence};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn run_example() -> camprobe::Result<()> {
    let (h, w) = (60, 104);
    let scene = generate_scene(4, 4)?;
    let traj = make_motion(MotionKind::Arc, 0.3, 9, &MotionParams::default())?;
    let renders = scene.render_clip(&traj, h, w);
    let rel = traj.relative_to_first();

    let last = renders.len() - 1;
    let exact: Vec<Correspondence> = renders[last].correspondences.clone();
    let pose = &rel.poses()[last];
    println!("{} marker correspondences between frame 1 and frame {}", exact.len(), last + 1);
    println!("epipolar RMSE, exact: {:.2e} px", epipolar_rmse(&exact, pose, &traj.intrinsics, (w, h))?);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for sigma_px in [0.25, 1.0, 4.0] {
        let noise = Normal::new(0.0, sigma_px).expect("valid deviation");
        let noisy: Vec<Correspondence> = exact
            .iter()
            .map(|c| Correspondence {
                canonical: c.canonical,
                target: c.target
                    + Vec2::new(2.0 * noise.sample(&mut rng) / w as f64, 2.0 * noise.sample(&mut rng) / h as f64),
            })
            .collect();
        println!(
            "epipolar RMSE, {sigma_px:4.2} px noise: {:.3} px",
            epipolar_rmse(&noisy, pose, &traj.intrinsics, (w, h))?
        );
    }

    let frames: Vec<_> = renders.iter().map(|r| r.image.clone()).collect();
    let depths = renders.iter().map(|r| r.filled_depth()).collect::<camprobe::Result<Vec<_>>>()?;
    println!("depth-warp RMSE of the exact renders: {:.4}", depth_warp_rmse(&frames, &depths, &traj)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> camprobe::Result<()> {
    run_example()
}

// Warps a synthetic canonical render into a moved camera and compares the
// result with a direct render from that camera.

use camprobe::displacement::backward_field;
use camprobe::geometry::{Pose, Rotation, Vec3};
use camprobe::metrics::psnr;
use camprobe::resample::grid_sample;
use camprobe::scene::{generate_scene, mutual_visibility};

pub fn run_example() -> camprobe::Result<()> {
    let (h, w) = (60, 104);
    let scene = generate_scene(1, 4)?;
    let k = camprobe::geometry::Intrinsics::default();
    let canonical = scene.render(&Pose::identity(), &k, h, w);
    let pose = Pose::new(Rotation::about_y(0.05), Vec3::new(-0.08, 0.02, 0.05));
    let moved = scene.render(&pose, &k, h, w);

    let field = backward_field(&moved.filled_depth()?, &pose, &k);
    let warped = grid_sample(&canonical.image, &field)?;
    let mask = mutual_visibility(&canonical, &moved, &field);
    let visible = mask.iter().filter(|&&m| m).count();
    println!("mean displacement {:.4} (normalized units)", field.mean_magnitude());
    println!("mutually visible pixels: {visible} of {}", h * w);
    println!("warped vs direct render: {:.2} dB", psnr(&warped, &moved.image, Some(&mask))?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> camprobe::Result<()> {
    run_example()
}

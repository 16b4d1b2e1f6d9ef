mod trajectories {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/trajectories.rs"));
}

mod displacement_warp {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/displacement_warp.rs"));
}

mod resample_gradients {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/resample_gradients.rs"));
}

mod guided_sampling {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/guided_sampling.rs"));
}

mod camera_metrics {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/camera_metrics.rs"));
}

mod multiview_consistency {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/multiview_consistency.rs"));
}

mod probe_curve {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/probe_curve.rs"));
}

#[test]
fn trajectories_example_runs() {
    trajectories::run_example().expect("trajectories example should run");
}

#[test]
fn displacement_warp_example_runs() {
    displacement_warp::run_example().expect("displacement warp example should run");
}

#[test]
fn resample_gradients_example_runs() {
    resample_gradients::run_example().expect("resample gradients example should run");
}

#[test]
fn guided_sampling_example_runs() {
    guided_sampling::run_example().expect("guided sampling example should run");
}

#[test]
fn camera_metrics_example_runs() {
    camera_metrics::run_example().expect("camera metrics example should run");
}

#[test]
fn multiview_consistency_example_runs() {
    multiview_consistency::run_example().expect("multiview consistency example should run");
}

#[test]
fn probe_curve_example_runs() {
    probe_curve::run_example().expect("probe curve example should run");
}

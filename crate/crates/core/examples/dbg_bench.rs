// debug scratch: coarse-to-fine sweep across all ranges
use scanfuse::evaluation::*;
use scanfuse::registration::*;
use scanfuse::scanner::*;
use scanfuse::synth;

fn main() {
    let cam = CameraModel::default();
    let eared = synth::inspection_target(40, 80).unwrap();
    let scans = generate_scan_set(&eared, &cam, 8, 4, 7).unwrap();
    let gt = scans.gt_poses();
    let clouds = scans.clouds();
    for (voxel, mult) in [(0.004, 4.0)] {
        for range in [(0.0, 0.0), (0.0, 1.0), (1.0, 3.0), (3.0, 6.0), (6.0, 10.0), (10.0, 15.0)] {
            let perturbed = perturb_poses(&scans, range, range, 99).unwrap();
            let init = perturbed.perturbed_poses();
            for (name, method) in [("global", MultiviewMethod::GlobalIcp), ("pose-graph", MultiviewMethod::PoseGraph), ("refined", MultiviewMethod::RefinedPoseGraph)] {
                let params = PoseGraphParams {
                    voxel_size: voxel,
                    distance_multiplier: mult,
                    downsample_min_points: 0,
                    ..PoseGraphParams::default()
                };
                let t0 = std::time::Instant::now();
                match register_multiview(&clouds, &init, method, &params) {
                    Ok(poses) => {
                        let err = transform_error(&gt, &poses, ErrorUnit::Meters).unwrap();
                        println!("v {voxel} m {mult} range {range:?} {name:10} mean_abs {:.4e} ({:.1} s)", err.mean_abs, t0.elapsed().as_secs_f64());
                    }
                    Err(e) => println!("v {voxel} m {mult} range {range:?} {name:10} error {e}"),
                }
            }
        }
    }
}

//! Shared fixtures for the criterion benchmarks.

use nalgebra::Point3;
use scanfuse::rng::SeededRng;
use scanfuse::PointCloud;

/// Uniform random cloud in the unit cube.
pub fn random_cloud(n: usize, seed: u64) -> PointCloud {
    let mut rng = SeededRng::new(seed);
    PointCloud::from_points(
        (0..n)
            .map(|_| {
                Point3::new(
                    rng.uniform_in(0.0, 1.0),
                    rng.uniform_in(0.0, 1.0),
                    rng.uniform_in(0.0, 1.0),
                )
            })
            .collect(),
    )
}

/// Surface samples of the wavy benchmark shape, with normals.
pub fn wavy_cloud(n: usize, seed: u64) -> PointCloud {
    let mesh = scanfuse::synth::make_shape_mesh(scanfuse::synth::ShapeKind::SineWave, 32).unwrap();
    scanfuse::synth::sample_surface(&mesh, n, seed).unwrap()
}

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::Vector3;
use scanfuse::geometry::{apply_transform, RigidTransform};
use scanfuse::registration::{icp_generalized, icp_point_to_plane, IcpParams};
use scanfuse_bench::wavy_cloud;

fn pairwise_icp(c: &mut Criterion) {
    let target = wavy_cloud(20_000, 5);
    let offset = RigidTransform::from_axis_angle(
        &Vector3::new(0.1, 0.9, 0.2),
        1.0f64.to_radians(),
        Vector3::new(0.002, -0.001, 0.001),
    );
    let source = apply_transform(&target, &offset.inverse());
    let params = IcpParams {
        max_correspondence_distance: 0.02,
        max_iterations: 30,
        ..IcpParams::default()
    };
    c.bench_function("icp_point_to_plane_20k", |b| {
        b.iter(|| {
            icp_point_to_plane(&source, &target, &RigidTransform::identity(), &params).unwrap()
        });
    });
    c.bench_function("icp_generalized_20k", |b| {
        b.iter(|| {
            icp_generalized(&source, &target, &RigidTransform::identity(), &params).unwrap()
        });
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = pairwise_icp
}
criterion_main!(benches);

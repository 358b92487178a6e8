use criterion::{criterion_group, criterion_main, Criterion};
use scanfuse::metrics::{chamfer, cloud_to_mesh, earth_movers, plane_distance_lsq};
use scanfuse::synth::{self, PerturbationSpec, ShapeKind};

fn cloud_metrics(c: &mut Criterion) {
    let fixture = synth::make_metric_pair(
        ShapeKind::TriangularWave,
        &PerturbationSpec {
            noise_std: 0.02,
            ..PerturbationSpec::none(5)
        },
    )
    .unwrap();
    let mesh = synth::make_shape_mesh(ShapeKind::TriangularWave, synth::DEFAULT_SEGMENTS).unwrap();

    c.bench_function("chamfer_1k", |b| {
        b.iter(|| chamfer(&fixture.test, &fixture.reference, false).unwrap());
    });
    c.bench_function("plane_lsq_1k_k20", |b| {
        b.iter(|| plane_distance_lsq(&fixture.test, &fixture.reference, 20).unwrap());
    });
    c.bench_function("cloud_to_mesh_1k", |b| {
        b.iter(|| cloud_to_mesh(&fixture.test, &mesh).unwrap());
    });
}

fn assignment(c: &mut Criterion) {
    let clean = synth::make_metric_pair(ShapeKind::Plane, &PerturbationSpec::none(5)).unwrap();
    let mut group = c.benchmark_group("earth_movers");
    group.sample_size(10);
    group.bench_function("emd_1000", |b| {
        b.iter(|| earth_movers(&clean.test, &clean.reference, 2048).unwrap());
    });
    group.finish();
}

criterion_group!(benches, cloud_metrics, assignment);
criterion_main!(benches);

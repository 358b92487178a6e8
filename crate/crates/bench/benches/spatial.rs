use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use scanfuse::geometry::KdTree;
use scanfuse::scanner::{Bvh, Ray};
use scanfuse::synth;
use scanfuse_bench::random_cloud;

fn kdtree_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("kdtree_build");
    for n in [1_000usize, 10_000, 100_000] {
        let cloud = random_cloud(n, 7);
        group.bench_with_input(BenchmarkId::from_parameter(n), &cloud, |b, cloud| {
            b.iter(|| KdTree::build(cloud).unwrap());
        });
    }
    group.finish();
}

fn kdtree_knn(c: &mut Criterion) {
    let cloud = random_cloud(100_000, 7);
    let tree = KdTree::build(&cloud).unwrap();
    let queries = random_cloud(1_000, 9);
    c.bench_function("kdtree_knn_k10_100k", |b| {
        b.iter(|| {
            let mut acc = 0usize;
            for q in &queries.points {
                acc += tree.knn(q, 10).len();
            }
            acc
        });
    });
}

fn bvh_raycast(c: &mut Criterion) {
    let mesh = synth::inspection_target(48, 96).unwrap();
    let bvh = Bvh::build(&mesh).unwrap();
    let origins = random_cloud(1_000, 11);
    c.bench_function("bvh_raycast_1k", |b| {
        b.iter(|| {
            let mut hits = 0usize;
            for o in &origins.points {
                let origin = nalgebra::Point3::new(o.x - 0.5, o.y - 0.5, o.z + 0.4);
                let ray = Ray {
                    origin,
                    direction: (nalgebra::Point3::origin() - origin).normalize(),
                };
                if bvh.raycast(&ray).is_some() {
                    hits += 1;
                }
            }
            hits
        });
    });
}

criterion_group!(benches, kdtree_build, kdtree_knn, bvh_raycast);
criterion_main!(benches);

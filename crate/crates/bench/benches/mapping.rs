use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use surfdraw_bench::{cloud, fixture};
use surfdraw_core::kdtree::KdTree;
use surfdraw_core::mapping::{lscm_unfold, map_strokes};
use surfdraw_core::suite::Shape;
use surfdraw_core::surface::generators;
use surfdraw_core::{MappingConfig, Method};

fn kdtree(c: &mut Criterion) {
    let pts = cloud(100_000, 100.0);
    let queries = cloud(1_000, 120.0);
    c.bench_function("kdtree/build_1e5", |b| b.iter(|| KdTree::new(black_box(&pts))));
    let tree = KdTree::new(&pts);
    c.bench_function("kdtree/nearest_1e3", |b| {
        b.iter(|| queries.iter().map(|q| tree.nearest(q).unwrap().0).sum::<usize>())
    });
    c.bench_function("kdtree/k_nearest_10_1e3", |b| {
        b.iter(|| queries.iter().map(|q| tree.k_nearest(q, 10).len()).sum::<usize>())
    });
}

fn lscm(c: &mut Criterion) {
    let mut g = c.benchmark_group("lscm");
    g.sample_size(10);
    for segments in [60, 180] {
        let mesh = generators::half_cylinder(50.0, 100.0, segments, 2).unwrap();
        g.bench_with_input(BenchmarkId::new("half_cylinder", segments), &mesh, |b, m| {
            b.iter(|| lscm_unfold(m, None).unwrap())
        });
    }
    g.finish();
}

fn mapping(c: &mut Criterion) {
    let (surface, strokes) = fixture(Shape::Cylinder, 100_000);
    let mut g = c.benchmark_group("map_cylinder_1e5");
    g.sample_size(10);
    for method in Method::ALL {
        let cfg = MappingConfig { method, ..MappingConfig::default() };
        g.bench_function(method.to_string(), |b| b.iter(|| map_strokes(&strokes, &surface, &cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, kdtree, lscm, mapping);
criterion_main!(benches);

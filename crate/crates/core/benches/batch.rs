//! Batch workloads through the data-parallel path and the sequential
//! fallback.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sensyn::eval::verify;
use sensyn::geometry::{GridRegion, SensorSpec};
use sensyn::graphs::build_visibility_graph;
use sensyn::par;
use sensyn::placement::{DeployedSensor, Placement, Role};
use sensyn::scenario::{generate, ScenarioSpec};

fn scenes(n: u64) -> Vec<GridRegion> {
    (0..n)
        .map(|seed| {
            generate(&ScenarioSpec {
                width: 16,
                height: 16,
                cell_size: 1.0,
                extent: 0.2,
                gamma_target: 2.0,
                seed,
            })
            .expect("scene")
            .region
        })
        .collect()
}

/// One sensor per open cell center.
fn dense_placement(region: &GridRegion) -> Placement {
    Placement::new(
        region
            .open_cells()
            .into_iter()
            .map(|c| DeployedSensor::new(region.cell_center(c), 0, Role::Primary))
            .collect(),
    )
}

fn visibility_graphs(c: &mut Criterion) {
    let regions = scenes(8);
    let mut g = c.benchmark_group("visibility_graphs");
    g.sample_size(10);
    g.bench_function("parallel", |b| {
        b.iter(|| par::map(&regions, |r| build_visibility_graph(r, 4.0).edge_count()))
    });
    g.bench_function("sequential", |b| {
        b.iter(|| par::map_seq(&regions, |r| build_visibility_graph(r, 4.0).edge_count()))
    });
    g.finish();
}

fn verification(c: &mut Criterion) {
    let regions = scenes(8);
    let specs = [SensorSpec::new(0, 4.0, 4.0).expect("spec")];
    let work: Vec<(GridRegion, Placement)> = regions
        .into_iter()
        .map(|r| {
            let p = dense_placement(&r);
            (r, p)
        })
        .collect();
    let mut g = c.benchmark_group("verify");
    g.sample_size(10);
    g.bench_function("parallel", |b| {
        b.iter(|| par::map(&work, |(r, p)| verify(black_box(p), r, &specs, &[3]).passed()))
    });
    g.bench_function("sequential", |b| {
        b.iter(|| par::map_seq(&work, |(r, p)| verify(black_box(p), r, &specs, &[3]).passed()))
    });
    g.finish();
}

criterion_group!(benches, visibility_graphs, verification);
criterion_main!(benches);

//! Criterion comparison of the data-parallel node map against the
//! sequential fallback, on the two kernel shapes that dominate runtime:
//! the O(N^2) Riesz-style interaction sum and the windowed ball average
//! behind the maximal operator.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use morrey_lab::grid::{Ball, Domain, GridFunction, UniformGrid};
use morrey_lab::par::{map_indexed, map_indexed_seq};

fn setup(m: usize) -> (UniformGrid, GridFunction) {
    let dom = Domain::symmetric_box(2, 1.0).unwrap();
    let grid = UniformGrid::new(dom, m).unwrap();
    let f = GridFunction::from_fn(grid, |x| (3.0 * x[0]).cos() * (2.0 * x[1]).sin()).unwrap();
    (grid, f)
}

fn interaction_sum(grid: &UniformGrid, f: &GridFunction, parallel: bool) -> f64 {
    let n = grid.node_count();
    let kernel = |i: usize| {
        let x = grid.coord(i);
        let mut s = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let y = grid.coord(j);
            let dx = x[0] - y[0];
            let dy = x[1] - y[1];
            s += f.values[j] / (dx * dx + dy * dy).sqrt();
        }
        s
    };
    let out = if parallel {
        map_indexed(n, kernel)
    } else {
        map_indexed_seq(n, kernel)
    };
    out.iter().sum()
}

fn ball_averages(grid: &UniformGrid, f: &GridFunction, parallel: bool) -> f64 {
    let n = grid.node_count();
    let kernel = |i: usize| {
        let ball = Ball::new(grid.coord(i), 0.25).unwrap();
        let mut s = 0.0;
        grid.for_nodes_in_ball(&ball, |j, _| s += f.values[j].abs());
        s * grid.cell_volume()
    };
    let out = if parallel {
        map_indexed(n, kernel)
    } else {
        map_indexed_seq(n, kernel)
    };
    out.iter().sum()
}

fn bench_kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("riesz_interaction_sum");
    for m in [33usize, 49] {
        let (grid, f) = setup(m);
        group.bench_with_input(BenchmarkId::new("parallel", m), &m, |b, _| {
            b.iter(|| interaction_sum(&grid, &f, true))
        });
        group.bench_with_input(BenchmarkId::new("sequential", m), &m, |b, _| {
            b.iter(|| interaction_sum(&grid, &f, false))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("maximal_ball_averages");
    for m in [65usize, 129] {
        let (grid, f) = setup(m);
        group.bench_with_input(BenchmarkId::new("parallel", m), &m, |b, _| {
            b.iter(|| ball_averages(&grid, &f, true))
        });
        group.bench_with_input(BenchmarkId::new("sequential", m), &m, |b, _| {
            b.iter(|| ball_averages(&grid, &f, false))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_kernels);
criterion_main!(benches);

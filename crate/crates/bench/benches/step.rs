use std::sync::Arc;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use ewi_core::ewi::{ewi_step, EwiParams};
use ewi_core::potential::realize;
use ewi_core::{FilterShape, Grid, PotentialSpec, RealizeOptions, SpectralField};
use num_complex::Complex64;

fn gaussian(grid: &Arc<Grid>) -> SpectralField {
    SpectralField::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Complex64::new((-0.5 * r2).exp(), 0.0)
    })
}

fn grids() -> Vec<(&'static str, Arc<Grid>)> {
    vec![
        ("1d-4096", Arc::new(Grid::cube(1, -16.0, 16.0, 4096).unwrap())),
        ("2d-128", Arc::new(Grid::cube(2, -8.0, 8.0, 128).unwrap())),
        ("3d-32", Arc::new(Grid::cube(3, -4.0, 4.0, 32).unwrap())),
    ]
}

fn fft(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft");
    for (name, grid) in grids() {
        let mut data = gaussian(&grid).values();
        group.bench_function(BenchmarkId::new("forward+inverse", name), |b| {
            b.iter(|| {
                grid.forward_in_place(&mut data).unwrap();
                grid.inverse_in_place(&mut data).unwrap();
            })
        });
    }
    group.finish();
}

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("ewi_step");
    for (name, grid) in grids() {
        let d = grid.dim();
        let spec = PotentialSpec::inverse_power(&vec![0.0; d], -1.0, 0.5);
        let v = Arc::new(realize(&spec, &grid, RealizeOptions::default()).unwrap());
        let params = EwiParams::new(1e-3, 1e-3, 1.0, 1.0, Some(FilterShape::Smooth), v).unwrap();
        let psi = gaussian(&grid);
        group.bench_function(BenchmarkId::new("inverse-power", name), |b| {
            b.iter(|| ewi_step(black_box(&psi), &params).unwrap())
        });
    }
    group.finish();
}

fn potential_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("potential_apply");
    for (name, grid) in grids() {
        let d = grid.dim();
        let spec = PotentialSpec::inverse_power(&vec![0.0; d], -1.0, 0.5);
        let v = realize(&spec, &grid, RealizeOptions::default()).unwrap();
        let psi = gaussian(&grid);
        group.bench_function(BenchmarkId::new("oversampled", name), |b| {
            b.iter(|| v.apply(black_box(&psi)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, fft, step, potential_apply);
criterion_main!(benches);

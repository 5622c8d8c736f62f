use criterion::{black_box, criterion_group, criterion_main, Criterion};
use heisenspec::eigen::{HermitianOperator, SolverOptions};
use heisenspec::nil::{build_operator, spectrum_below, NilGrid, SectorOperator};
use heisenspec::{heat_kernel_fs, heat_value_at_origin, nu, HeatQuery, ModelOperatorSpec};
use num_complex::Complex64;

fn scalar_kernels(c: &mut Criterion) {
    c.bench_function("nu n=3 mu=0.4", |b| b.iter(|| nu(black_box(3), black_box(0.4)).unwrap()));

    let near = HeatQuery::with_real_mu(2, 0.3, 0.5, vec![0.4, 0.1, 0.0, -0.2], 1.0).unwrap();
    let far = HeatQuery::with_real_mu(2, 0.3, 6.0, vec![1.5, 0.0, 0.0, 0.0], 1.0).unwrap();
    c.bench_function("heat_kernel_fs near origin", |b| b.iter(|| heat_kernel_fs(black_box(&near)).unwrap()));
    c.bench_function("heat_kernel_fs oscillatory", |b| b.iter(|| heat_kernel_fs(black_box(&far)).unwrap()));

    let spec = ModelOperatorSpec::real(2, &[1.0, -1.0]).unwrap();
    c.bench_function("heat_value_at_origin n=2", |b| b.iter(|| heat_value_at_origin(black_box(&spec), 1.0).unwrap()));
}

fn nilmanifold(c: &mut Criterion) {
    let grid = NilGrid::new(32, true).unwrap();
    let sector = SectorOperator::new(&grid, 5);
    let x: Vec<Complex64> = (0..sector.dim()).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
    let mut y = vec![Complex64::new(0.0, 0.0); sector.dim()];
    c.bench_function("sector apply N=32", |b| b.iter(|| sector.apply(black_box(&x), &mut y)));

    let small = build_operator(&NilGrid::new(16, true).unwrap());
    let mut group = c.benchmark_group("spectrum");
    group.sample_size(10);
    group.bench_function("spectrum_below N=16", |b| {
        b.iter(|| spectrum_below(&small, 30.0, 7, SolverOptions::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, scalar_kernels, nilmanifold);
criterion_main!(benches);

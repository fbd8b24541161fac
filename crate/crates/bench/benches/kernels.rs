use criterion::{criterion_group, criterion_main, Criterion};
use mage::regularization::{mollify, MollifierKernel};
use mage::solver::{solve_exponential, SolverConfig};
use mage::spectral::{ma_density, modulus_ladder, Spectral};
use mage_bench::{conformal_metric, flat_metric, smooth_density};

fn spectral(c: &mut Criterion) {
    let m = conformal_metric(16);
    let u = smooth_density(&m).map(|v| 0.01 * v);
    let spec = Spectral::new(m.grid);
    c.bench_function("hessian_n2_r16", |b| b.iter(|| spec.hessian(u.values())));
    c.bench_function("ma_density_n2_r16", |b| {
        b.iter(|| ma_density(&u, &m).unwrap())
    });
}

fn solver(c: &mut Criterion) {
    let m = flat_metric(1, 64);
    let f = smooth_density(&m);
    let cfg = SolverConfig::default();
    c.bench_function("solve_exponential_n1_r64", |b| {
        b.iter(|| solve_exponential(&f, &m, &cfg).unwrap())
    });
}

fn regularization(c: &mut Criterion) {
    let m = flat_metric(1, 128);
    let u = smooth_density(&m);
    let k = MollifierKernel::new(m.grid, 1024).unwrap();
    c.bench_function("mollify_n1_r128_t0.1", |b| {
        b.iter(|| mollify(&u, 0.1, &k).unwrap())
    });
    c.bench_function("modulus_n1_r128", |b| {
        b.iter(|| modulus_ladder(&u, &[0.05, 0.1, 0.25]).unwrap())
    });
}

criterion_group!(benches, spectral, solver, regularization);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use katolab::euler::{initial_from_velocity, solve_euler, EulerConfig};
use katolab::ops::advect_grid;
use katolab::sde::{BrownianPath, GalerkinSystem, SdeConfig};
use katolab::{Domain, SpectralBasis};
use katolab_bench::fixture;

fn spectral(c: &mut Criterion) {
    let d = Domain::new(16).unwrap();
    c.bench_function("basis_build_nx16_m32", |b| b.iter(|| SpectralBasis::build(black_box(&d), 32).unwrap()));
    let fx = fixture(16, 32);
    let f = fx.u0.grid.clone();
    c.bench_function("leray_project_nx16", |b| b.iter(|| fx.basis.leray().project(black_box(&f)).unwrap()));
    c.bench_function("advect_grid_nx16", |b| b.iter(|| advect_grid(&d, black_box(&f), black_box(&f))));
}

fn sde(c: &mut Criterion) {
    let fx = fixture(16, 32);
    let sys = GalerkinSystem::new(&fx.basis, &fx.model, SdeConfig::new(0.05, 32, 0.005, 0.5)).unwrap();
    let dw = BrownianPath::generate(0, 8, 1, 0.005).increments[0].clone();
    let c0 = fx.u0.coeffs.clone();
    c.bench_function("sde_step_n32", |b| b.iter(|| sys.step(black_box(&c0), black_box(&dw))));
    c.bench_function("sde_path_n32_100_steps", |b| b.iter(|| sys.simulate(black_box(&fx.u0)).unwrap()));
}

fn euler(c: &mut Criterion) {
    let fx = fixture(16, 32);
    let psi0 = initial_from_velocity(&fx.basis, &fx.u0);
    let cfg = EulerConfig { dt: 0.0025, t_end: 0.1, store_every: 1 };
    c.bench_function("euler_nx16_40_steps", |b| b.iter(|| solve_euler(16, black_box(psi0.clone()), &cfg).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = spectral, sde, euler
}
criterion_main!(benches);

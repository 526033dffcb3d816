use std::hint::black_box;

use cattomo_core::{
    forward_model, herald_subtract, mle_reconstruct, preset, sample_quadratures, wigner_grid, DensityMatrix,
    MleConfig, PhaseSchedule, PhaseSpaceGrid, QuadratureDataset,
};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

fn one_photon_state() -> DensityMatrix {
    forward_model(&preset("one-photon-apd").unwrap()).unwrap().state
}

fn dataset(rho: &DensityMatrix, n: usize) -> QuadratureDataset {
    sample_quadratures(rho, 0.15, &PhaseSchedule::default(), n, 7, "bench").unwrap()
}

fn bench_herald(c: &mut Criterion) {
    let cfg = preset("three-photon-tes").unwrap();
    let squeezed = cattomo_core::prepare_squeezed(&cfg.squeeze, cfg.dim()).unwrap();
    let herald = cfg.herald.unwrap();
    c.bench_function("herald_subtract/tes3_dim30", |b| {
        b.iter(|| herald_subtract(black_box(&squeezed), &herald).unwrap())
    });
    c.bench_function("forward_model/two_photon_apd", |b| {
        let cfg = preset("two-photon-apd").unwrap();
        b.iter(|| forward_model(black_box(&cfg)).unwrap())
    });
}

fn bench_wigner(c: &mut Criterion) {
    let rho = one_photon_state();
    let grid = PhaseSpaceGrid::default();
    c.bench_function("wigner_grid/201x201_dim30", |b| {
        b.iter(|| wigner_grid(black_box(&rho), &grid).unwrap())
    });
}

fn bench_sampler(c: &mut Criterion) {
    let rho = one_photon_state();
    c.bench_function("sample_quadratures/1e4", |b| b.iter(|| dataset(black_box(&rho), 10_000)));
}

fn bench_mle(c: &mut Criterion) {
    let rho = one_photon_state();
    let mut group = c.benchmark_group("mle_iteration");
    group.sample_size(10);
    for n in [1_087, 10_000, 100_000] {
        let data = dataset(&rho, n);
        let mut cfg = MleConfig::new(rho.dim(), 0.15);
        cfg.max_iters = 1;
        group.bench_function(format!("n={n}"), |b| {
            b.iter_batched(|| &data, |d| mle_reconstruct(d, &cfg).unwrap(), BatchSize::SmallInput)
        });
    }
    group.finish();
}

criterion_group!(benches, bench_herald, bench_wigner, bench_sampler, bench_mle);
criterion_main!(benches);

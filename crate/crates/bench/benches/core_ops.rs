use std::hint::black_box;

use criterion::{Criterion, criterion_group, criterion_main};

use histent::sample::{random_density, random_hermitian, random_matrix, random_window, seeded_rng};
use histent::{
    ComplexMatrix, DecoherenceFunction, herm_eig, kron, minimize_greedy_refinement,
    minimize_spectral,
};

fn bench_kron(c: &mut Criterion) {
    let mut rng = seeded_rng(1);
    let a = random_matrix(&mut rng, 8);
    let b = random_matrix(&mut rng, 8);
    c.bench_function("kron 8x8 x 8x8", |bench| {
        bench.iter(|| kron(black_box(&a), black_box(&b)).unwrap())
    });
}

fn bench_herm_eig(c: &mut Criterion) {
    let mut rng = seeded_rng(2);
    let h = random_hermitian(&mut rng, 32);
    c.bench_function("herm_eig dim 32", |bench| {
        bench.iter(|| herm_eig(black_box(&h), 1e-9).unwrap())
    });
}

fn bench_eval(c: &mut Criterion) {
    let mut rng = seeded_rng(3);
    let rho = random_density(&mut rng, 8);
    let d = DecoherenceFunction::from_single_time(rho, 1e-9).unwrap();
    let w = random_window(&mut rng, 8, 4);
    c.bench_function("window gram dim 8, 4 blocks", |bench| {
        bench.iter(|| d.window_gram(black_box(&w)).unwrap())
    });
}

fn bench_two_time_build(c: &mut Criterion) {
    let rho = ComplexMatrix::diag_real(&[1.0 / 3.0; 3]);
    c.bench_function("two-time operator build N=3", |bench| {
        bench.iter(|| DecoherenceFunction::from_two_time(black_box(rho.clone()), 1e-9).unwrap())
    });
}

fn bench_search(c: &mut Criterion) {
    let mut rng = seeded_rng(4);
    let rho = random_density(&mut rng, 4);
    let d = DecoherenceFunction::from_single_time(rho, 1e-9).unwrap();
    c.bench_function("spectral minimisation dim 4", |bench| {
        bench.iter(|| minimize_spectral(black_box(&d), 1e-9).unwrap())
    });
    c.bench_function("greedy minimisation dim 4", |bench| {
        bench.iter(|| minimize_greedy_refinement(black_box(&d), 8, 3, 0, 1e-9).unwrap())
    });
}

fn bench_coarse_grainings(c: &mut Criterion) {
    let mut rng = seeded_rng(5);
    let w = random_window(&mut rng, 8, 8);
    c.bench_function("coarse-graining enumeration, 8 blocks", |bench| {
        bench.iter(|| black_box(&w).coarse_grainings().unwrap().count())
    });
}

criterion_group!(
    benches,
    bench_kron,
    bench_herm_eig,
    bench_eval,
    bench_two_time_build,
    bench_search,
    bench_coarse_grainings
);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use noether_calc::a_operator::{random_compact, random_fredholm_pair, AOperator};
use noether_calc::base_space::make_sequence_space;
use noether_calc::compactness::{is_compact, tail_norm_profile};
use noether_calc::fredholm::{decompose_fredholm, decompose_id_plus_k};
use noether_calc::gallery;
use noether_calc::numerics;
use noether_calc::topologies::{family_continuity, Topology};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_spectral_norm(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral_norm");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [16usize, 64, 128] {
        let m = numerics::random_matrix(n, n, &mut rng);
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| numerics::spectral_norm(black_box(m)))
        });
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 64;
    let m = numerics::random_matrix(n, n, &mut rng);
    let rhs = numerics::random_matrix(n, 4, &mut rng);
    c.bench_function("solve_64", |b| {
        b.iter(|| numerics::solve(black_box(&m), black_box(&rhs), 1e-8).unwrap())
    });
    c.bench_function("least_squares_64", |b| {
        b.iter(|| numerics::least_squares(black_box(&m), black_box(&rhs)).unwrap())
    });
}

fn bench_compose(c: &mut Criterion) {
    let space = make_sequence_space(8);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = random_compact(&space, 24, 1.0, &mut rng);
    let t = AOperator::shift(space.clone(), 1)
        .add(&random_compact(&space, 24, 0.5, &mut rng))
        .unwrap();
    c.bench_function("compose_support24", |b| {
        b.iter(|| black_box(&s).compose(black_box(&t)).unwrap())
    });
    c.bench_function("op_norm_support24", |b| b.iter(|| black_box(&t).op_norm()));
}

fn bench_compactness(c: &mut Criterion) {
    let fam = gallery::make_eq_aa(32);
    c.bench_function("tail_norm_profile_eqAA_32", |b| {
        b.iter(|| tail_norm_profile(black_box(&fam.operator), 36))
    });
    let space = make_sequence_space(4);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let k = random_compact(&space, 32, 1.0, &mut rng);
    c.bench_function("is_compact_dense_32", |b| {
        b.iter(|| is_compact(black_box(&k), 1e-8, 36))
    });
}

fn bench_fredholm(c: &mut Criterion) {
    let space = make_sequence_space(4);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let k = random_compact(&space, 8, 0.7, &mut rng);
    c.bench_function("decompose_id_plus_k_support8", |b| {
        b.iter(|| decompose_id_plus_k(black_box(&k), 0.9).unwrap())
    });
    let (f, g) = random_fredholm_pair(&space, 1, 4, &mut rng);
    c.bench_function("decompose_fredholm_shift_pair", |b| {
        b.iter(|| decompose_fredholm(black_box(&f), black_box(&g), 0.9, 1e-8).unwrap())
    });
}

fn bench_topologies(c: &mut Criterion) {
    let fam = gallery::make_eq_aa(16);
    let family = fam.family();
    c.bench_function("family_continuity_im_eqAA_16", |b| {
        b.iter(|| family_continuity(black_box(&family), Topology::Im, 1e-6).unwrap())
    });
    let shifted = fam.shifted_family();
    c.bench_function("family_continuity_f_eqAA_16", |b| {
        b.iter(|| family_continuity(black_box(&shifted), Topology::F, 1e-6).unwrap())
    });
}

criterion_group!(
    benches,
    bench_spectral_norm,
    bench_solve,
    bench_compose,
    bench_compactness,
    bench_fredholm,
    bench_topologies
);
criterion_main!(benches);

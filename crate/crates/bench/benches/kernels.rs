use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use qsubspace::doa::{esprit_basis, vandermonde, AngleSet};
use qsubspace::estimate::{LevelAccumulator, OuterProductAccumulator};
use qsubspace::numcore::hermitian_eig;
use qsubspace::randsrc::haar_orthonormal;
use qsubspace::{Complex64, ComplexMatrix, Field, QuantizerSpec, RngStream};

const P: usize = 32;

fn random_hermitian(p: usize) -> ComplexMatrix {
    let mut rng = RngStream::new(7, 0);
    let a = ComplexMatrix::from_fn(p, p, |_, _| rng.complex_normal());
    (&a + &a.adjoint()).scale(0.5)
}

fn snapshots(count: usize) -> Vec<Vec<Complex64>> {
    let mut rng = RngStream::new(11, 0);
    (0..count).map(|_| (0..P).map(|_| rng.complex_normal()).collect()).collect()
}

fn eigensolver(c: &mut Criterion) {
    let a = random_hermitian(P);
    c.bench_function("hermitian_eig 32x32", |b| b.iter(|| hermitian_eig(black_box(&a)).unwrap()));
}

fn esprit(c: &mut Criterion) {
    let theta = AngleSet::new(&[0.05, 0.3, 0.55, 0.8]).unwrap();
    let phi = vandermonde(&theta, P).unwrap();
    let q = ComplexMatrix::from_fn(P, 4, |i, j| phi[(i, j)] * (1.0 / (P as f64).sqrt()));
    let mut rng = RngStream::new(3, 0);
    let mix = haar_orthonormal(&mut rng, 4, 4, Field::Complex).unwrap();
    let basis = &q * &mix;
    c.bench_function("esprit p=32 s=4", |b| b.iter(|| esprit_basis(black_box(&basis)).unwrap()));
}

/// Streaming covariance of 1024 quantized snapshots: floating-point rank-one
/// updates against exact integer level sums.
fn accumulation(c: &mut Criterion) {
    let ys = snapshots(1024);
    let spec = QuantizerSpec::triangular(4.0, 2, Field::Complex).unwrap();
    let mut group = c.benchmark_group("accumulate tri_b2 x1024");
    group.bench_function("float", |b| {
        b.iter_batched(
            || (RngStream::new(1, 2), RngStream::new(1, 3)),
            |(mut da, mut db)| {
                let mut acc = OuterProductAccumulator::new(P, Field::Complex);
                let zero = Complex64::new(0.0, 0.0);
                let (mut q, mut q_dot) = (vec![zero; P], vec![zero; P]);
                for y in &ys {
                    spec.quantize_into(y, &mut da, &mut db, &mut q, &mut q_dot);
                    acc.add_gram(&q);
                }
                acc.to_matrix(1.0 / ys.len() as f64)
            },
            BatchSize::SmallInput,
        )
    });
    group.bench_function("levels", |b| {
        b.iter_batched(
            || (RngStream::new(1, 2), RngStream::new(1, 3)),
            |(mut da, mut db)| {
                let mut acc = LevelAccumulator::new(P, Field::Complex, false);
                let (mut l, mut l_dot) = (vec![0; 2 * P], vec![0; 2 * P]);
                for y in &ys {
                    spec.quantize_levels(y, &mut da, &mut db, &mut l, &mut l_dot);
                    acc.push(&l, &l_dot);
                }
                acc.to_matrix(spec.level_scale().powi(2) / ys.len() as f64)
            },
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

/// Integer levels of one 32-element complex snapshot, per scheme.
fn quantizers(c: &mut Criterion) {
    let y = snapshots(1).remove(0);
    let mut group = c.benchmark_group("quantize_levels p=32 complex");
    for spec in [
        QuantizerSpec::rectangular(4.0, Field::Complex).unwrap(),
        QuantizerSpec::triangular(4.0, 2, Field::Complex).unwrap(),
        QuantizerSpec::direct_round(4.0, 2, Field::Complex).unwrap(),
    ] {
        let (mut da, mut db) = (RngStream::new(1, 2), RngStream::new(1, 3));
        let (mut l, mut l_dot) = (vec![0; 2 * P], vec![0; 2 * P]);
        group.bench_function(spec.label(), |b| {
            b.iter(|| {
                spec.quantize_levels(black_box(&y), &mut da, &mut db, &mut l, &mut l_dot);
                black_box(l[0] + l_dot[0])
            })
        });
    }
    group.finish();
    let mut rng = RngStream::new(1, 4);
    c.bench_function("chacha8 next_u64", |b| b.iter(|| black_box(rng.next_u64())));
    let mut words = [0u64; 64];
    c.bench_function("chacha8 fill_u64 x64", |b| {
        b.iter(|| {
            rng.fill_u64(&mut words);
            black_box(words[63])
        })
    });
}

criterion_group!(benches, eigensolver, esprit, accumulation, quantizers);
criterion_main!(benches);

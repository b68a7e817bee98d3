use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ghrr::encoder::EncoderConfig;
use ghrr::hdalg::{bind, bundle, sample_base, similarity, BaseSamplerSpec};
use ghrr::matalg::{haar_unitary, hermitian_exp_unitary, DiagonalityOptimizer};
use ghrr::rng;
use ghrr::structures::{decode_tree_accuracy, encode_tree, Codebook, StructureSpec};

fn hypervector_ops(c: &mut Criterion) {
    let mut group = c.benchmark_group("ops");
    for m in [1usize, 2, 3, 4] {
        let d = 600 / (m * m);
        let mut r = rng::seeded(1);
        let spec = BaseSamplerSpec::new(d, m);
        let a = sample_base(&spec, &mut r).unwrap();
        let b = sample_base(&spec, &mut r).unwrap();
        group.bench_with_input(BenchmarkId::new("bind", m), &m, |bch, _| {
            bch.iter(|| bind(black_box(&a), black_box(&b)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("bundle", m), &m, |bch, _| {
            bch.iter(|| bundle(black_box(&a), black_box(&b)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("similarity", m), &m, |bch, _| {
            bch.iter(|| similarity(black_box(&a), black_box(&b)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sample", m), &m, |bch, _| {
            bch.iter(|| sample_base(black_box(&spec), &mut r).unwrap())
        });
    }
    group.finish();
}

fn unitaries(c: &mut Criterion) {
    let mut group = c.benchmark_group("unitary");
    let mut r = rng::seeded(2);
    for m in [2usize, 4, 8] {
        group.bench_with_input(BenchmarkId::new("haar", m), &m, |bch, &m| bch.iter(|| haar_unitary(m, &mut r)));
        group.bench_with_input(BenchmarkId::new("hermitian-exp", m), &m, |bch, &m| {
            bch.iter(|| hermitian_exp_unitary(m, &mut r))
        });
    }
    group.bench_function("optimize-m3-target-0", |bch| {
        let opt = DiagonalityOptimizer::default();
        bch.iter(|| opt.run(3, 0.0, &mut r).unwrap())
    });
    group.finish();
}

fn encoder(c: &mut Criterion) {
    let enc = EncoderConfig::new(8, 1000, 2).build_seeded().unwrap();
    let x = [0.1, -0.4, 0.3, 0.9, -1.2, 0.0, 0.5, 2.0];
    c.bench_function("encode-n8-d1000-m2", |bch| bch.iter(|| enc.encode(black_box(&x)).unwrap()));
}

fn trees(c: &mut Criterion) {
    let spec = StructureSpec::new(6);
    let mut r = rng::seeded(3);
    let book = Codebook::sample(&spec, &BaseSamplerSpec::new(67, 3), &mut r).unwrap();
    let h = encode_tree(&spec, &book).unwrap();
    c.bench_function("encode-tree-depth6-m3", |bch| bch.iter(|| encode_tree(&spec, &book).unwrap()));
    c.bench_function("decode-tree-depth6-m3", |bch| {
        bch.iter(|| decode_tree_accuracy(black_box(&h), &spec, &book).unwrap())
    });
}

criterion_group!(benches, hypervector_ops, unitaries, encoder, trees);
criterion_main!(benches);

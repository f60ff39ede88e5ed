//! Criterion benchmarks for sequence generation, metrics and scans.

use std::hint::black_box;

use criterion::{BenchmarkId, Criterion, Throughput};
use mindetect::construction::{build_x_pipeline, lemma2_scan};
use mindetect::detector::{build_umd_detector, bundled_specs, lemma3_check, lipschitz_sample_test};
use mindetect::metric::dbar_block;
use mindetect::symbolic::dbar_truncated;
use mindetect::toeplitz::{block_recurrence_scan, enumerate_rationals, two_adic_level, v_enumeration};
use mindetect::{build_x, Block, Point2};
use num_bigint::BigUint;

pub fn terms(c: &mut Criterion) {
    let mut g = c.benchmark_group("terms");
    g.throughput(Throughput::Elements(1024));
    g.bench_function("two_adic_level", |b| {
        b.iter(|| {
            (1..=1024u64)
                .map(|j| two_adic_level(black_box(j)).unwrap())
                .sum::<u32>()
        })
    });
    g.bench_function("enumerate_rationals", |b| {
        b.iter(|| {
            (1..=1024u64)
                .map(|n| enumerate_rationals(black_box(n << 20)))
                .next_back()
        })
    });
    let closed = build_x().sequence().clone();
    let pipeline = build_x_pipeline();
    g.bench_function("x_closed_form", |b| {
        b.iter(|| (1..=1024u64).map(|j| closed.term(black_box(j))).next_back())
    });
    g.bench_function("x_pipeline", |b| {
        b.iter(|| (1..=1024u64).map(|j| pipeline.term(black_box(j))).next_back())
    });
    let huge = BigUint::from(3u32) << 3045u32;
    g.bench_function("x_big_index", |b| {
        b.iter(|| (0..1024u32).map(|k| closed.term_big(&(&huge + k))).next_back())
    });
    g.finish();
}

pub fn metrics(c: &mut Criterion) {
    let mut g = c.benchmark_group("dbar");
    let x = build_x().sequence().clone();
    for len in [3usize, 64, 1024] {
        let a: Block<Point2> = x.block_at(1, len).unwrap();
        let b: Block<Point2> = x.block_at(1000, len).unwrap();
        g.bench_with_input(BenchmarkId::new("block", len), &len, |bench, _| {
            bench.iter(|| dbar_block(black_box(&a), black_box(&b)).unwrap())
        });
    }
    g.bench_function("truncated_depth_64", |b| {
        let shifted = x.shift(3 << 20);
        b.iter(|| dbar_truncated(&shifted, &x, black_box(64)).unwrap())
    });
    g.finish();
}

pub fn scans(c: &mut Criterion) {
    let mut g = c.benchmark_group("scans");
    g.sample_size(10);
    for len in [3 * (1 << 10) + 3, 3 * (1 << 14) + 3] {
        g.bench_with_input(BenchmarkId::new("lemma2_scan", len), &len, |b, &len| {
            b.iter(|| lemma2_scan(len).unwrap())
        });
    }
    g.bench_function("block_recurrence_4096", |b| {
        b.iter(|| block_recurrence_scan(&v_enumeration(), 4096, 16, 8).unwrap())
    });
    let specs = bundled_specs();
    let rising = &specs.iter().find(|(n, _)| *n == "poly-rising").unwrap().1;
    g.bench_function("lemma3_poly_rising", |b| {
        b.iter(|| lemma3_check(rising, 0.25, 1 << 16, 1 << 24).unwrap())
    });
    let detector = build_umd_detector(build_x().sequence(), 1, 3).unwrap();
    g.bench_function("lipschitz_1000_pairs", |b| {
        b.iter(|| lipschitz_sample_test(&detector, 1000, black_box(1)))
    });
    g.finish();
}

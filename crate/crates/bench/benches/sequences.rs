use criterion::{criterion_group, criterion_main};

criterion_group!(
    benches,
    mindetect_bench::terms,
    mindetect_bench::metrics,
    mindetect_bench::scans
);
criterion_main!(benches);

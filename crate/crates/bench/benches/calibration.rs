use ats_bench::market;
use ats_core::calibration::{calibrate_slice, OptimizerConfig, SliceData};
use ats_core::pricing::QuadratureConfig;
use criterion::{criterion_group, criterion_main, Criterion};

fn slice_calibration(c: &mut Criterion) {
    let slices = market(&[0.5]);
    let data = SliceData::from(&slices[0]);
    let cfg = OptimizerConfig::default();
    let q = QuadratureConfig::default();
    let mut group = c.benchmark_group("calibration");
    group.sample_size(10);
    group.bench_function("calibrate_slice", |b| {
        b.iter(|| calibrate_slice(&data, 0.5, None, &cfg, &q))
    });
    group.finish();
}

criterion_group!(benches, slice_calibration);
criterion_main!(benches);

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use crowd_clbp::descriptor::FrameCodes;
use crowd_clbp::pipeline::{frame_features, DescriptorKind, FeatureConfig};
use crowd_clbp_bench::test_frame;

fn codes(c: &mut Criterion) {
    let frame = test_frame(1);
    let params = FeatureConfig::default().clbp;
    c.bench_function("frame_codes_768x576", |b| {
        b.iter(|| FrameCodes::compute(black_box(&frame), &params).unwrap())
    });
}

fn features(c: &mut Criterion) {
    let frame = test_frame(2);
    let mut group = c.benchmark_group("frame_features_768x576");
    group.sample_size(20);
    for kind in DescriptorKind::ALL {
        let cfg = FeatureConfig {
            descriptor: kind,
            ..FeatureConfig::default()
        };
        group.bench_function(kind.name(), |b| b.iter(|| frame_features(black_box(&frame), &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, codes, features);
criterion_main!(benches);

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use crowd_clbp::pipeline::{frame_features, FeatureConfig};
use crowd_clbp::svm::{grid_search_cv, predict, train_multiclass, GridConfig, KernelSpec, SmoParams};
use crowd_clbp::DensityLabel;
use crowd_clbp_bench::labeled_frames;

fn corpus(per_class: usize) -> (Vec<Vec<f64>>, Vec<DensityLabel>) {
    let cfg = FeatureConfig::default();
    labeled_frames(per_class, cfg.block_size, 7)
        .into_iter()
        .map(|(img, label)| {
            let (_, mut f) = frame_features(&img, &cfg).unwrap();
            (f.remove(0), label)
        })
        .unzip()
}

fn params() -> SmoParams {
    SmoParams {
        c: 10.0,
        kernel: KernelSpec::Rbf { gamma: 1.0 },
        ..SmoParams::default()
    }
}

fn training(c: &mut Criterion) {
    let (x, y) = corpus(50);
    let p = params();
    let mut group = c.benchmark_group("svm");
    group.sample_size(10);
    group.bench_function("train_multiclass_200", |b| b.iter(|| train_multiclass(black_box(&x), &y, &p).unwrap()));
    let model = train_multiclass(&x, &y, &p).unwrap();
    group.bench_function("predict_200", |b| {
        b.iter(|| {
            for v in &x {
                black_box(predict(&model, black_box(v)).unwrap());
            }
        })
    });
    let (x, y) = corpus(15);
    let grid = GridConfig::default();
    group.bench_function("grid_search_60", |b| b.iter(|| grid_search_cv(black_box(&x), &y, &grid, &p).unwrap()));
    group.finish();
}

criterion_group!(benches, training);
criterion_main!(benches);

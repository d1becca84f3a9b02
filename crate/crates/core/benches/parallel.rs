use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use howire_core::camera::{look_at, CameraIntrinsics};
use howire_core::forge::{generate_dataset, GenerateConfig};
use howire_core::metrics::{evaluate_dataset, gt_as_predictions, perturb_predictions, GroundTruthSample};
use howire_core::oracle::{matching_sweep, random_box_field, visibility_sweep};
use howire_core::visibility::{rasterize_with, ShadingOptions};
use howire_core::{Execution, Vec3};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn small_config() -> GenerateConfig {
    GenerateConfig { seed: 9, solids: 8, views: 8, split_ratio: 0.0, ..GenerateConfig::default() }
}

fn bench_visibility(c: &mut Criterion) {
    let config = GenerateConfig { solids: 4, ..small_config() };
    let mut group = c.benchmark_group("visibility_sweep");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| visibility_sweep(&config, mode).unwrap()));
    }
    group.finish();
}

fn bench_matching(c: &mut Criterion) {
    let mut group = c.benchmark_group("matching_sweep");
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| matching_sweep(200, 7, 3, mode)));
    }
    group.finish();
}

fn bench_raster(c: &mut Criterion) {
    let (mesh, _) = random_box_field(200, 5);
    let pose = look_at(Vec3::new(0.0, 0.0, -12.0), Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0)).unwrap();
    let mesh = mesh.transformed(&pose);
    let k = CameraIntrinsics::default();
    let mut group = c.benchmark_group("rasterize");
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| rasterize_with(&mesh, &k, &ShadingOptions::default(), mode))
        });
    }
    group.finish();
}

fn bench_generate(c: &mut Criterion) {
    let config = small_config();
    let mut group = c.benchmark_group("generate");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| generate_dataset(&config, mode).unwrap()));
    }
    group.finish();
}

fn bench_eval(c: &mut Criterion) {
    let data = generate_dataset(&small_config(), Execution::Parallel).unwrap();
    let gt: Vec<GroundTruthSample> = data.splits[1]
        .samples
        .iter()
        .map(|s| GroundTruthSample {
            sample_id: s.sample_id.clone(),
            wireframe: s.wireframe.clone(),
            intrinsics: s.intrinsics,
        })
        .collect();
    let preds = perturb_predictions(&gt_as_predictions(&gt), 1.0, 7);
    let mut group = c.benchmark_group("evaluate");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| evaluate_dataset(&preds, &gt, mode).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_visibility, bench_matching, bench_raster, bench_generate, bench_eval);
criterion_main!(benches);

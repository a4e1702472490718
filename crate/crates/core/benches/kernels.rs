use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stackfuse_core::iqa::{self, Metric, Models};
use stackfuse_core::par::Execution;
use stackfuse_core::pipeline::{enumerate_sequences, run_grid, Families, GridOptions, OperatorSet};
use stackfuse_core::preprocess::{
    bilateral_with, clahe_with, default_operators, median_blur_with, nl_means_with, ClaheParams,
};
use stackfuse_core::project::{project_with, Projection};
use stackfuse_core::stackio::FrameStack;
use stackfuse_core::{Raster, Raster8};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn image(seed: u64, h: usize, w: usize) -> Raster8 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Raster8::from_fn(h, w, |_, _| rng.gen())
}

fn stack(depth: usize, h: usize, w: usize) -> FrameStack {
    FrameStack::new("bench", (0..depth as u64).map(|s| image(s, h, w)).collect()).unwrap()
}

fn filters(c: &mut Criterion) {
    let img: Raster = image(1, 256, 256).to_raster();
    let mut g = c.benchmark_group("filters_256");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("median5", name), &exec, |b, &e| {
            b.iter(|| median_blur_with(black_box(&img), 5, e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("bilateral3", name), &exec, |b, &e| {
            b.iter(|| bilateral_with(black_box(&img), 3, 25.0, 50.0, e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("nl_means_3_7", name), &exec, |b, &e| {
            b.iter(|| nl_means_with(black_box(&img), 10.0, 3, 7, e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("clahe", name), &exec, |b, &e| {
            b.iter(|| clahe_with(black_box(&img), &ClaheParams::new(4.0, (16, 16)), e).unwrap())
        });
    }
    g.finish();
}

fn projections(c: &mut Criterion) {
    let s = stack(50, 256, 256);
    let mut g = c.benchmark_group("projections_256x50");
    for p in [Projection::Ap, Projection::Sdp, Projection::Qp] {
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(p.token(), name), &exec, |b, &e| {
                b.iter(|| project_with(black_box(&s), p, 0.75, e).unwrap())
            });
        }
    }
    g.finish();
}

fn grid(c: &mut Criterion) {
    let videos: Vec<FrameStack> = (0..2)
        .map(|v| FrameStack::new(format!("v{v}"), stack(4, 64, 64).frames().to_vec()).unwrap())
        .collect();
    let seqs: Vec<_> = enumerate_sequences(&Families::default(), 3)
        .unwrap()
        .into_iter()
        .filter(|s| s.len() <= 2)
        .collect();
    let ops = OperatorSet::new(default_operators());
    let mut g = c.benchmark_group("grid_pairs_2x64");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = GridOptions {
            exec,
            ..GridOptions::default()
        };
        g.bench_function(name, |b| {
            b.iter(|| run_grid(black_box(&videos), &seqs, &Projection::GRID, &ops, &opts).unwrap())
        });
    }
    g.finish();
}

fn scoring(c: &mut Criterion) {
    let img = image(9, 192, 192);
    let models = Models::bundled();
    let mut g = c.benchmark_group("iqa_192");
    for m in Metric::ALL {
        g.bench_function(m.name(), |b| {
            b.iter(|| iqa::score(black_box(&img), m, &models).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, filters, projections, grid, scoring);
criterion_main!(benches);

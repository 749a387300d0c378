use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ssdgan_core::experiments::{add_noise, make_checkerboard};
use ssdgan_core::par::Execution;
use ssdgan_core::rng::{SeededRng, Stream};
use ssdgan_core::spectral::phi_batch;
use ssdgan_core::tensor_nn::ops::{conv2d_backward, conv2d_forward};
use ssdgan_core::tensor_nn::Tensor;
use ssdgan_core::Image;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn random(shape: &[usize], seed: u64) -> Tensor<f32> {
    let mut rng = SeededRng::new(seed, Stream::Data);
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.uniform(-1.0, 1.0) as f32).collect()).unwrap()
}

fn conv(c: &mut Criterion) {
    let x = random(&[8, 64, 16, 16], 0);
    let w = random(&[64, 64, 3, 3], 1);
    let b = random(&[64], 2);
    let mut group = c.benchmark_group("conv2d_3x3_64ch_16px");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("forward_backward", name), &exec, |bench, &exec| {
            bench.iter(|| {
                let fwd = conv2d_forward(exec, black_box(&x), &w, Some(&b), 1, 1).unwrap();
                let grads =
                    conv2d_backward(exec, &fwd.geometry, &fwd.cols, &w, &fwd.output, true, true, true).unwrap();
                black_box(grads.input)
            })
        });
    }
    group.finish();
}

fn spectra(c: &mut Criterion) {
    let board = make_checkerboard(32).unwrap();
    let images: Vec<Image> = (0..64).map(|i| add_noise(&board, 0.1, i)).collect();
    let mut group = c.benchmark_group("phi_64_images_32px");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bench, &exec| {
            bench.iter(|| black_box(phi_batch(exec, black_box(&images)).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, conv, spectra);
criterion_main!(benches);

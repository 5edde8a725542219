use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use hilladam::mlp::INPUT;
use hilladam::*;
use hilladam_bench::{sample_image, sample_weights};

fn bench_polynomials(c: &mut Criterion) {
    let rows = benchmark_losses();
    let tenth = rows.last().unwrap().clone();

    c.bench_function("eval_poly/10th_order", |b| {
        b.iter(|| eval_poly(black_box(&tenth), black_box(1.7)).unwrap())
    });
    c.bench_function("global_min_oracle/10th_order_10k", |b| {
        b.iter(|| global_min_oracle(black_box(&tenth), 10_000).unwrap())
    });
}

fn bench_network(c: &mut Criterion) {
    let (w, _) = sample_weights();
    let trace = forward(&w, &INPUT).unwrap();

    c.bench_function("mlp/forward", |b| {
        b.iter(|| forward(black_box(&w), &INPUT).unwrap())
    });
    c.bench_function("mlp/backward", |b| {
        b.iter(|| backward(black_box(&trace), &w, &INPUT, black_box(2.0)).unwrap())
    });
}

fn bench_optimizer(c: &mut Criterion) {
    let (_, flat) = sample_weights();
    let opt = OptimizerSettings::new(0.01);
    let hill = HillAdamSettings::new(1e-4, 1e6);
    let grads = vec![0.01; flat.len()];

    c.bench_function("hilladam_step/47_params", |b| {
        b.iter_batched(
            || (HillAdamController::new(flat.len()), flat.clone()),
            |(mut ctl, mut params)| {
                hilladam_step(&mut ctl, &mut params, &grads, black_box(1.5), &opt, &hill).unwrap()
            },
            criterion::BatchSize::SmallInput,
        )
    });
}

fn bench_color(c: &mut Criterion) {
    let means = ChannelMeans {
        r: 196.5,
        g: 136.5,
        b: 55.5,
    };
    let targets = ChannelMeans {
        r: 55.5,
        g: 116.5,
        b: 86.5,
    };
    let spec = ColorLossSpec::new(means, targets, 2.0, (0.8, 1.6)).unwrap();
    let gains = init_gains(7);
    let image = sample_image();
    let encoded = save_image(&image);

    c.bench_function("color_loss", |b| {
        b.iter(|| color_loss(black_box(&gains), &spec))
    });
    c.bench_function("ppm/round_trip_64x64", |b| {
        b.iter(|| save_image(&load_image(black_box(&encoded)).unwrap()))
    });
    c.bench_function("channel_means/64x64", |b| {
        b.iter(|| channel_means(black_box(&image)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_polynomials,
    bench_network,
    bench_optimizer,
    bench_color
);
criterion_main!(benches);

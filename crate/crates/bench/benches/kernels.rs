use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stefan_es::analysis::{forward_transform, inverse_transform, KernelSpec};
use stefan_es::controller::{ControllerConfig, EsController};
use stefan_es::dither::{DitherConfig, DitherGenerator};
use stefan_es_bench::{error_profile, plant_near_setpoint};

fn plant_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("plant_step");
    for n in [50usize, 100, 200] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            let (mut plant, state) = plant_near_setpoint(n);
            b.iter(|| {
                let mut st = state.clone();
                plant.step(&mut st, black_box(0.05), 0.005).unwrap();
                st.s
            })
        });
    }
    group.finish();
}

fn dither(c: &mut Criterion) {
    let gen = DitherGenerator::new(DitherConfig::default()).unwrap();
    c.bench_function("dither_signal", |b| b.iter(|| gen.dither_signal(black_box(1.234)).unwrap()));
    c.bench_function("beta_profile_build", |b| b.iter(|| gen.beta_profile(black_box(1.234))));
    let profile = gen.beta_profile(1.234);
    c.bench_function("beta_profile_grid_101", |b| {
        b.iter(|| (0..=100).map(|j| profile.eval(j as f64 * 0.008).unwrap()).sum::<f64>())
    });
    c.bench_function("beta_eval_direct", |b| b.iter(|| gen.beta_eval(black_box(0.4), 1.234).unwrap()));
}

fn transforms(c: &mut Criterion) {
    let spec = KernelSpec::new(0.1, 0.8).unwrap();
    let u = error_profile(200, 0.8);
    let w = forward_transform(&u, 0.2, 0.8, &spec);
    c.bench_function("forward_transform_200", |b| b.iter(|| forward_transform(black_box(&u), 0.2, 0.8, &spec)));
    c.bench_function("inverse_transform_200", |b| b.iter(|| inverse_transform(black_box(&w), 0.2, 0.8, &spec)));
}

fn controller(c: &mut Criterion) {
    let mut ctl = EsController::new(ControllerConfig::default()).unwrap();
    let mut k = 0u64;
    c.bench_function("control_update_delay_compensated", |b| {
        b.iter(|| {
            k += 1;
            ctl.control_update(k as f64 * 0.005, black_box(3.99), 0.01).unwrap().u_filt
        })
    });
}

criterion_group!(benches, plant_step, dither, transforms, controller);
criterion_main!(benches);

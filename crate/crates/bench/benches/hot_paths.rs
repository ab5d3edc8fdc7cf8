use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ddreg_core::rng::stream_rng;
use ddreg_core::sampler::{ess_step, log_lstar, EllipticalT};
use ddreg_core::special::{log_norm_const_trunc, reg_inc_beta};
use ddreg_core::synth::{gen_dataset, AlphaSetting, GenDesign, Scenario};
use ddreg_core::{LinkConfig, ShapePair, Window, WindowedModel};
use rand::Rng;

fn special(c: &mut Criterion) {
    let mut rng = stream_rng(1, 0);
    let args: Vec<(f64, f64, f64)> = (0..1000)
        .map(|_| {
            (
                rng.random::<f64>(),
                0.1 + 29.9 * rng.random::<f64>(),
                0.1 + 29.9 * rng.random::<f64>(),
            )
        })
        .collect();
    c.bench_function("reg_inc_beta x1000", |b| {
        b.iter(|| {
            let mut s = 0.0;
            for &(x, a, bb) in &args {
                s += reg_inc_beta(black_box(x), ShapePair { a, b: bb }).unwrap();
            }
            s
        })
    });
    c.bench_function("log_norm_const_trunc x1000", |b| {
        b.iter(|| {
            let mut s = 0.0;
            for &(x, a, bb) in &args {
                s += log_norm_const_trunc(0.5, black_box(x), ShapePair { a, b: bb }, 0.25, 0.75)
                    .unwrap();
            }
            s
        })
    });
}

fn likelihood(c: &mut Criterion) {
    let data = gen_dataset(&GenDesign::named(
        Scenario::Matching,
        AlphaSetting::Easy,
        2000,
        1,
    ))
    .unwrap();
    let theta = vec![0.1; 18];
    for delta in [None, Some(0.25)] {
        let w = match delta {
            Some(d) => Window::new(&data, d).unwrap(),
            None => Window::full(&data),
        };
        let model = WindowedModel::new(&data, &w, LinkConfig::default());
        let name = format!(
            "log_likelihood n=2000 window={}",
            delta.map_or("full".into(), |d| d.to_string())
        );
        c.bench_function(&name, |b| {
            b.iter(|| model.log_likelihood(black_box(&theta)).unwrap())
        });
    }
}

fn ess(c: &mut Criterion) {
    let data = gen_dataset(&GenDesign::named(
        Scenario::Matching,
        AlphaSetting::Easy,
        2000,
        1,
    ))
    .unwrap();
    let w = Window::full(&data);
    let model = WindowedModel::new(&data, &w, LinkConfig::default());
    let e = EllipticalT::prior_shaped(6, 6.0).unwrap();
    let mut rng = stream_rng(2, 0);
    let start = vec![0.0; 18];
    let start_l = log_lstar(&model, &e, &start).unwrap();
    c.bench_function("ess_step n=2000", |b| {
        b.iter_batched(
            || (start.clone(), start_l),
            |(theta, l)| {
                let nu = e.sample_auxiliary(&theta, &mut rng);
                let mut f = |th: &[f64]| log_lstar(&model, &e, th);
                ess_step(&theta, l, &nu, &mut f, &mut rng, 100).unwrap()
            },
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, special, likelihood, ess);
criterion_main!(benches);

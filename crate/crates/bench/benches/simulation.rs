use std::f64::consts::PI;
use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};
use eraser_core::device::Transition;
use eraser_core::idtcirc::{network_impedance, rate_sweep, AdmittanceModel, CircuitParams, IdtParams, Loss};
use eraser_core::protocols::{calibrate, eraser_point, transfer_experiment, ExperimentConfig};

fn circuit(c: &mut Criterion) {
    let circuit = CircuitParams::default();
    let idt = IdtParams::default();
    let grid: Vec<f64> = (0..=160).map(|k| 2.0 * PI * (3.6e9 + 5e6 * k as f64)).collect();
    c.bench_function("com impedance", |b| {
        b.iter(|| network_impedance(black_box(2.0 * PI * 4e9), &circuit, &idt, AdmittanceModel::Com, Loss::Lossy))
    });
    c.bench_function("rate sweep, 161 points", |b| {
        b.iter(|| rate_sweep(black_box(&grid), &circuit, &idt, AdmittanceModel::Com))
    });
}

fn protocols(c: &mut Criterion) {
    let cfg = ExperimentConfig::paper();
    let cal = calibrate(&cfg).expect("calibration");
    let mut g = c.benchmark_group("protocols");
    g.sample_size(10).measurement_time(Duration::from_secs(20));
    g.bench_function("ge transfer", |b| b.iter(|| transfer_experiment(Transition::Ge, &cfg, None)));
    g.bench_function("eraser point", |b| b.iter(|| eraser_point(black_box(PI / 3.0), &cfg, &cal)));
    g.finish();
}

criterion_group!(benches, circuit, protocols);
criterion_main!(benches);

//! Sequential vs parallel execution of the data-parallel kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sandpile_core::group::enumerate_recurrent;
use sandpile_core::harmonic::{homoclinic_with, mahler_with};
use sandpile_core::product::{build_product_model, WStrategy};
use sandpile_core::{parse, Exec, TopplingMatrix, Window};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn recurrent_enumeration(c: &mut Criterion) {
    let h = parse("-2u^-2-3u^-1+8-u-u^2").unwrap();
    let tm = TopplingMatrix::from_poly(&h, &Window::interval(1, 6)).unwrap();
    let mut group = c.benchmark_group("enumerate_recurrent");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| enumerate_recurrent(black_box(&tm), exec).unwrap().order())
        });
    }
    group.finish();
}

fn mahler_grid(c: &mut Criterion) {
    let h = parse("9-u1^2-2u1*u2-u2^2").unwrap();
    let mut group = c.benchmark_group("mahler_2d");
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| mahler_with(black_box(&h), 1e-10, 1 << 10, exec).unwrap().value)
        });
    }
    group.finish();
}

fn kernel_fft(c: &mut Criterion) {
    let h = parse("7-u1-2u1^-1-u2-u2^-1").unwrap();
    let mut group = c.benchmark_group("homoclinic_2d");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| homoclinic_with(black_box(&h), 1e-10, 64, exec).unwrap().radius)
        });
    }
    group.finish();
}

fn w_enumeration(c: &mut Criterion) {
    let m = build_product_model(&parse("3+u1+u2").unwrap(), &parse("3-u1-u2").unwrap(), &Window::boxed(&[(0, 2), (0, 2)]))
        .unwrap();
    let mut group = c.benchmark_group("enumerate_w_2d");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| m.enumerate_w(WStrategy::FilterRecurrent, exec).unwrap().len())
        });
    }
    group.finish();
}

criterion_group!(benches, recurrent_enumeration, mahler_grid, kernel_fft, w_enumeration);
criterion_main!(benches);

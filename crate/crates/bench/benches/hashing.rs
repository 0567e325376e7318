use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use maxload_bench::uniform_keys;
use maxload_core::chaintable::build_profile;
use maxload_core::experiment::{run_trials, FamilyConfig, TrialOptions};
use maxload_core::hashfn::{LinearModPParams, MultiplyShiftParams};
use maxload_core::keysets::{KeySetSpec, KeySetVariant};
use maxload_core::modmath::next_prime_at_least;

fn eval(c: &mut Criterion) {
    let keys = uniform_keys(1 << 12, 1 << 31);
    let p = next_prime_at_least(1 << 31).unwrap();
    let linear = LinearModPParams::new(p, 1 << 12, 0x1234_5678, 99).unwrap();
    let shift = MultiplyShiftParams::new(31, 12, 0x5bd1_e995).unwrap();

    let mut g = c.benchmark_group("eval");
    g.throughput(Throughput::Elements(keys.len() as u64));
    g.bench_function("linear", |b| {
        b.iter(|| keys.iter().map(|&x| linear.eval(black_box(x)).unwrap()).sum::<u64>())
    });
    g.bench_function("multiply_shift", |b| {
        b.iter(|| keys.iter().map(|&x| shift.eval(black_box(x)).unwrap()).sum::<u64>())
    });
    g.finish();
}

fn profile(c: &mut Criterion) {
    let mut g = c.benchmark_group("load_profile");
    for log_n in [8u32, 12, 16] {
        let n = 1u64 << log_n;
        let keys = uniform_keys(n, 1 << 31);
        let shift = MultiplyShiftParams::new(31, log_n, 0x5bd1_e995).unwrap();
        g.throughput(Throughput::Elements(n));
        g.bench_with_input(BenchmarkId::from_parameter(n), &keys, |b, keys| {
            b.iter(|| build_profile(keys, &shift).unwrap().max_load().unwrap())
        });
    }
    g.finish();
}

fn trials(c: &mut Criterion) {
    let spec = KeySetSpec::new(KeySetVariant::Interval { start: 0, n: 1024 }, 1 << 20);
    let family = FamilyConfig::LinearModP {
        p: next_prime_at_least(1 << 20).unwrap(),
        m: 1024,
    };
    let mut g = c.benchmark_group("trials");
    g.sample_size(20);
    for threads in [1usize, 4] {
        let opts = TrialOptions {
            threads: Some(threads),
            force_a: None,
        };
        g.bench_with_input(BenchmarkId::new("linear_n1024_t200", threads), &opts, |b, opts| {
            b.iter(|| run_trials(&family, &spec, 200, 7, opts).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, eval, profile, trials);
criterion_main!(benches);

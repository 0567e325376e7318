//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fail.
//!
//! Seeds below were fixed before the first run and are not tuned.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use maxload_core::experiment::{
    exhaustive_expectation, run_trials, scaling_sweep, FamilyConfig, FamilyTemplate, KeySetTemplate,
    ScalingReport, TrialBatch, TrialOptions,
};
use maxload_core::keysets::{KeySetSpec, KeySetVariant};
use maxload_core::lemma_oracle::{
    exact_collision_probability, interval_preimage_of_bucket, pairwise_uniformity_exhaustive, run_lemma_campaign,
    CampaignConfig, Universe,
};
use maxload_core::modmath::{is_prime, mul_mod, next_prime_at_least};
use maxload_core::Prime64;

// Tolerances and budgets.
const C1_TRIALS: u64 = 100_000;
const C1_MEAN_SE: f64 = 3.0;
const C1_BUDGET: Duration = Duration::from_secs(120);
const C1_SEED: u64 = 0xacce_0001;
const C1_KEY_SEED: u64 = 0xacce_0002;
const C3_BUDGET: Duration = Duration::from_secs(60);
const C4_INSTANCES: u64 = 1000;
const C4_BUDGET: Duration = Duration::from_secs(120);
const C7_GRID: [u64; 5] = [1 << 8, 1 << 10, 1 << 12, 1 << 14, 1 << 16];
const C7_TRIALS: u64 = 200;
const C7_MAX_SLOPE: f64 = 0.45;
const C7_MAX_NORMALIZED_GROWTH: f64 = 2.0;
const C7_BUDGET: Duration = Duration::from_secs(600);
const C7_SEED: u64 = 0xacce_0007;
const C7_KEY_SEED: u64 = 0xacce_0008;
const C7_LINEAR_UNIVERSE: u64 = 1 << 31;
const C7_SHIFT_R: u32 = 32;
const PRIMARY_THREADS: usize = 8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn opts(threads: usize) -> TrialOptions {
    TrialOptions {
        threads: Some(threads),
        force_a: None,
    }
}

fn csv_of(batch: &TrialBatch) -> Vec<u8> {
    let mut out = Vec::new();
    batch.write_csv(&mut out).unwrap();
    out
}

fn scaling_csv(report: &ScalingReport) -> Vec<u8> {
    let mut out = Vec::new();
    report.write_rows_csv(&mut out).unwrap();
    report.write_trials_csv(&mut out).unwrap();
    out
}

fn c1_setups() -> Vec<(u64, u64, u64)> {
    vec![(251, 16, 16), (1009, 64, 64)]
}

fn c1_spec(p: u64, n: u64) -> KeySetSpec {
    KeySetSpec::new(KeySetVariant::UniformRandom { n, seed: C1_KEY_SEED }, p)
}

fn c1_batch(p: u64, m: u64, n: u64, threads: usize) -> TrialBatch {
    let family = FamilyConfig::LinearModP {
        p: Prime64::new(p).unwrap(),
        m,
    };
    run_trials(&family, &c1_spec(p, n), C1_TRIALS, C1_SEED, &opts(threads)).unwrap()
}

/// Monte Carlo mean and tails against full `(a, b)` enumeration.
fn criterion_1(batches: &[TrialBatch]) -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut notes = Vec::new();
    for ((p, m, n), batch) in c1_setups().into_iter().zip(batches) {
        let keys = c1_spec(p, n).generate().unwrap();
        let exact = exhaustive_expectation(Prime64::new(p).unwrap(), m, &keys, None, None).unwrap();
        let mc = batch.mean().unwrap();
        let z = (mc.mean - exact.mean()).abs() / mc.std_err;
        let mean_ok = z <= C1_MEAN_SE;
        let misses: Vec<u64> = (1..=n)
            .filter(|&t| !batch.tail_at(t).contains(exact.tail(t)))
            .collect();
        pass &= mean_ok && misses.is_empty();
        notes.push(format!(
            "p={p}: exact {:.6}, mc {:.6}, |z|={z:.2}, tail misses {misses:?}",
            exact.mean(),
            mc.mean
        ));
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: pass && elapsed < C1_BUDGET,
        detail: format!("{} ({elapsed:.1?})", notes.join("; ")),
    }
}

/// `a = 0` sends every key to bucket `b mod m`.
fn criterion_2() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    let p = next_prime_at_least(1 << 20).unwrap();
    for n in [1u64, 16, 64, 1000] {
        let specs = [
            KeySetTemplate::Interval,
            KeySetTemplate::ArithmeticProgression { stride: None },
            KeySetTemplate::GridSumset { stride: None },
            KeySetTemplate::UniformRandom { seed: 3 },
        ]
        .map(|t| t.instantiate(n, 1 << 20).unwrap());
        for spec in specs {
            for m in [1, 7, n.max(2)] {
                let family = FamilyConfig::LinearModP { p, m };
                let forced = TrialOptions {
                    threads: None,
                    force_a: Some(0),
                };
                let batch = run_trials(&family, &spec, 200, 2, &forced).unwrap();
                checked += batch.trials();
                if batch.max_loads().any(|x| x != n) {
                    bad.push(format!("{} n={n} m={m}", spec.label()));
                }
            }
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: format!("{checked} forced trials, failures {bad:?}"),
    }
}

/// Exact per-difference collision probabilities against their ceilings.
fn criterion_3() -> Outcome {
    let start = Instant::now();
    let (mut cases, mut violations) = (0u64, Vec::new());
    for p in (2..=211u64).filter(|&p| is_prime(p)) {
        let u = Universe::prime(p).unwrap();
        for m in [p.div_ceil(4), p] {
            for alpha in [1.0, 2.0, 4.0] {
                for d in 1..p {
                    cases += 1;
                    if !exact_collision_probability(u, m, alpha, d).unwrap().within {
                        violations.push(format!("p={p} m={m} alpha={alpha} d={d}"));
                    }
                }
            }
        }
    }
    for r in 1..=10u32 {
        let u = Universe::PowerOfTwo { r };
        for l in 1..=r {
            for alpha in [1.0, 2.0, 4.0] {
                for d in (1..1u64 << r).step_by(2) {
                    cases += 1;
                    if !exact_collision_probability(u, 1 << l, alpha, d).unwrap().within {
                        violations.push(format!("r={r} l={l} alpha={alpha} d={d}"));
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: violations.is_empty() && elapsed < C3_BUDGET,
        detail: format!("{cases} cases, violations {violations:?} ({elapsed:.1?})"),
    }
}

/// Seeded campaign of generated lemma instances.
fn criterion_4() -> Outcome {
    let start = Instant::now();
    let config = CampaignConfig {
        instances: C4_INSTANCES,
        r_max: 10_000,
        m_min: 2,
        m_max: 8,
        ..Default::default()
    };
    let report = run_lemma_campaign(&config, None).unwrap();
    let elapsed = start.elapsed();
    Outcome {
        pass: report.passed() && report.checked >= C4_INSTANCES && elapsed < C4_BUDGET,
        detail: format!(
            "{} checked ({} infeasible draws), {} counterexamples, {} bookkeeping failures, min pairs/required {:.3} ({elapsed:.1?})",
            report.checked,
            report.infeasible,
            report.violations.len(),
            report.bookkeeping_failures.len(),
            report.min_ratio
        ),
    }
}

/// Bucket preimages are certified intervals of the right size.
fn criterion_5() -> Outcome {
    let mut cases = 0u64;
    let mut bad = Vec::new();
    for p in (2..=211u64).filter(|&p| is_prime(p)) {
        let u = Universe::prime(p).unwrap();
        for m in 1..=p {
            for y in 0..m {
                cases += 1;
                let pre = interval_preimage_of_bucket(u, m, y).unwrap();
                let mut ok = pre.certified && pre.interval.len() <= p.div_ceil(m);
                if !pre.degenerate {
                    ok &= (0..p).all(|x| pre.interval.contains(x) == (mul_mod(m, x, p) % m == y));
                }
                if !ok {
                    bad.push(format!("p={p} m={m} y={y}"));
                }
            }
        }
    }
    for r in 1..=10u32 {
        let q = 1u64 << r;
        for l in 1..=r {
            let m = 1u64 << l;
            for y in 0..m {
                cases += 1;
                let pre = interval_preimage_of_bucket(Universe::PowerOfTwo { r }, m, y).unwrap();
                let ok = pre.certified
                    && pre.interval.len() == q / m
                    && (0..q).all(|z| pre.interval.contains(z) == (z >> (r - l) == y));
                if !ok {
                    bad.push(format!("r={r} l={l} y={y}"));
                }
            }
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: format!("{cases} buckets, failures {bad:?}"),
    }
}

/// `(a, b) -> (h'(x), h'(x'))` is a bijection for every distinct pair.
fn criterion_6() -> Outcome {
    let mut pairs = 0;
    let mut bad = Vec::new();
    for p in [3u64, 5, 7, 11, 101] {
        let v = pairwise_uniformity_exhaustive(Prime64::new(p).unwrap()).unwrap();
        pairs += v.pairs_checked;
        if !v.holds() {
            bad.push((p, v.failures.len()));
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: format!("{pairs} pairs, failing primes {bad:?}"),
    }
}

fn c7_families() -> [(&'static str, FamilyTemplate); 2] {
    [
        ("linear", FamilyTemplate::LinearModP { universe: C7_LINEAR_UNIVERSE }),
        ("multiply-shift", FamilyTemplate::MultiplyShift { r: C7_SHIFT_R }),
    ]
}

fn c7_keysets() -> [KeySetTemplate; 4] {
    [
        KeySetTemplate::Interval,
        KeySetTemplate::ArithmeticProgression { stride: None },
        KeySetTemplate::GridSumset { stride: None },
        KeySetTemplate::UniformRandom { seed: C7_KEY_SEED },
    ]
}

fn c7_sweeps(threads: usize) -> Vec<(&'static str, ScalingReport)> {
    let mut out = Vec::new();
    for (name, family) in c7_families() {
        for keyset in c7_keysets() {
            let report = scaling_sweep(&family, &keyset, &C7_GRID, C7_TRIALS, C7_SEED, &opts(threads)).unwrap();
            out.push((name, report));
        }
    }
    out
}

/// Growth of the mean max load with `m = n`, on the worst key set per family.
fn criterion_7(sweeps: &[(&'static str, ScalingReport)], elapsed: Duration) -> Outcome {
    let mut pass = elapsed < C7_BUDGET;
    let mut notes = Vec::new();
    for (family, _) in c7_families() {
        let rows: Vec<&ScalingReport> = sweeps.iter().filter(|(f, _)| *f == family).map(|(_, r)| r).collect();
        for r in &rows {
            let growth = r.rows.last().unwrap().normalized / r.rows[0].normalized;
            let ok = r.fit.slope <= C7_MAX_SLOPE && growth <= C7_MAX_NORMALIZED_GROWTH;
            pass &= ok;
            if !ok {
                notes.push(format!(
                    "{family}/{} FAILS slope {:.3} growth {growth:.3}",
                    r.keyset.label(),
                    r.fit.slope
                ));
            }
        }
        let worst = rows
            .iter()
            .max_by(|a, b| a.fit.slope.total_cmp(&b.fit.slope))
            .unwrap();
        let growth = worst.rows.last().unwrap().normalized / worst.rows[0].normalized;
        notes.push(format!(
            "{family} worst {}: slope {:.3}, normalized growth {growth:.3}, mean M at 2^16 {:.2}",
            worst.keyset.label(),
            worst.fit.slope,
            worst.rows.last().unwrap().mean_m
        ));
    }
    Outcome {
        pass,
        detail: format!("{} ({elapsed:.1?})", notes.join("; ")),
    }
}

/// Thread count does not change any CSV output of criteria 1 and 7.
fn criterion_8(c1: &[TrialBatch], c7: &[(&'static str, ScalingReport)]) -> Outcome {
    let mut diffs = Vec::new();
    for ((p, m, n), batch) in c1_setups().into_iter().zip(c1) {
        if csv_of(&c1_batch(p, m, n, 1)) != csv_of(batch) {
            diffs.push(format!("criterion 1 p={p}"));
        }
    }
    for ((family, report), (_, single)) in c7.iter().zip(c7_sweeps(1)) {
        if scaling_csv(report) != scaling_csv(&single) {
            diffs.push(format!("criterion 7 {family}/{}", report.keyset.label()));
        }
    }
    Outcome {
        pass: diffs.is_empty(),
        detail: format!("threads {PRIMARY_THREADS} vs 1, differing outputs {diffs:?}"),
    }
}

fn main() -> ExitCode {
    let mut results = Vec::new();
    let mut report = |id: u32, name: &str, o: Outcome| {
        println!(
            "criterion {id} [{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push(o.pass);
    };

    let t = Instant::now();
    let c1_batches: Vec<TrialBatch> = c1_setups()
        .into_iter()
        .map(|(p, m, n)| c1_batch(p, m, n, PRIMARY_THREADS))
        .collect();
    let mut c1 = criterion_1(&c1_batches);
    c1.pass &= t.elapsed() < C1_BUDGET;
    report(1, "exhaustive-oracle agreement", c1);
    report(2, "degenerate seed a = 0 gives M = n", criterion_2());
    report(3, "collision-probability ceilings", criterion_3());
    report(4, "lemma campaign", criterion_4());
    report(5, "preimage-interval geometry", criterion_5());
    report(6, "pairwise uniformity", criterion_6());
    let t = Instant::now();
    let sweeps = c7_sweeps(PRIMARY_THREADS);
    report(7, "scaling consistency", criterion_7(&sweeps, t.elapsed()));
    report(8, "determinism across thread counts", criterion_8(&c1_batches, &sweeps));

    let failed = results.iter().filter(|&&p| !p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

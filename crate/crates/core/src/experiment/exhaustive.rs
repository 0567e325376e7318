use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::chaintable::ensure_distinct;
use crate::error::{Error, Result};
use crate::hashfn::DEFAULT_ENUMERATION_GUARD;
use crate::modmath::{add_mod, mul_mod, Prime64};
use crate::report::ser_f64;

/// Exact distribution of `M` over an enumerated seed space of the linear
/// family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactDistribution {
    pub p: u64,
    pub m: u64,
    pub n: u64,
    /// Number of seeds enumerated.
    pub seeds: u64,
    /// `counts[k]` = number of seeds with `M = k`, for `k` in `0..=n`.
    pub counts: Vec<u64>,
}

impl ExactDistribution {
    /// `E[M]` as an exact fraction.
    pub fn mean_ratio(&self) -> Ratio<u128> {
        let total: u128 = self
            .counts
            .iter()
            .enumerate()
            .map(|(k, &c)| k as u128 * c as u128)
            .sum();
        Ratio::new(total, self.seeds as u128)
    }

    pub fn mean(&self) -> f64 {
        ratio_to_f64(&self.mean_ratio())
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &c)| c as f64 * (k as f64 - mu).powi(2))
            .sum::<f64>()
            / self.seeds as f64
    }

    /// Exact `Pr[M >= threshold]`.
    pub fn tail_ratio(&self, threshold: u64) -> Ratio<u128> {
        let hits: u128 = self
            .counts
            .iter()
            .skip(threshold as usize)
            .map(|&c| c as u128)
            .sum();
        Ratio::new(hits, self.seeds as u128)
    }

    pub fn tail(&self, threshold: u64) -> f64 {
        ratio_to_f64(&self.tail_ratio(threshold))
    }

    pub fn max_observed(&self) -> u64 {
        self.counts.iter().rposition(|&c| c > 0).unwrap_or(0) as u64
    }

    pub fn summary(&self) -> ExactSummary {
        let mean = self.mean_ratio();
        ExactSummary {
            p: self.p,
            m: self.m,
            n: self.n,
            seeds: self.seeds,
            mean_exact: format!("{}/{}", mean.numer(), mean.denom()),
            mean: ratio_to_f64(&mean),
            distribution: self
                .counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(k, &c)| MassPoint {
                    max_load: k as u64,
                    seeds: c,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactSummary {
    pub p: u64,
    pub m: u64,
    pub n: u64,
    pub seeds: u64,
    /// Reduced fraction `numerator/denominator`.
    pub mean_exact: String,
    #[serde(serialize_with = "ser_f64")]
    pub mean: f64,
    pub distribution: Vec<MassPoint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MassPoint {
    pub max_load: u64,
    pub seeds: u64,
}

fn ratio_to_f64(r: &Ratio<u128>) -> f64 {
    // Exact operands give a correctly rounded quotient.
    const EXACT: u128 = 1 << 53;
    let (n, d) = (*r.numer(), *r.denom());
    if n < EXACT && d < EXACT {
        return n as f64 / d as f64;
    }
    (n / d) as f64 + (n % d) as f64 / d as f64
}

/// Exact `E[M]` and the distribution of `M` for `((a x + b) mod p) mod m`,
/// averaging over all `p^2` seeds `(a, b)`.
pub fn exhaustive_expectation(
    p: Prime64,
    m: u64,
    keys: &[u64],
    guard: Option<u64>,
    threads: Option<usize>,
) -> Result<ExactDistribution> {
    enumerate(p, m, keys, 0, guard, threads)
}

/// As [`exhaustive_expectation`], restricted to `a != 0`: the conditional
/// distribution the tail argument works with.
pub fn exhaustive_expectation_nonzero_a(
    p: Prime64,
    m: u64,
    keys: &[u64],
    guard: Option<u64>,
    threads: Option<usize>,
) -> Result<ExactDistribution> {
    enumerate(p, m, keys, 1, guard, threads)
}

fn enumerate(
    p: Prime64,
    m: u64,
    keys: &[u64],
    first_a: u64,
    guard: Option<u64>,
    threads: Option<usize>,
) -> Result<ExactDistribution> {
    let pv = p.get();
    let guard = guard.unwrap_or(DEFAULT_ENUMERATION_GUARD);
    if pv > guard {
        return Err(Error::EnumerationGuard {
            required: pv as u128 * pv as u128,
            guard: guard as u128 * guard as u128,
        });
    }
    if m == 0 || m > pv {
        return Err(Error::BadParams(format!("need 1 <= m <= p, got m = {m}, p = {p}")));
    }
    if keys.is_empty() {
        return Err(Error::EmptyKeySet);
    }
    ensure_distinct(keys)?;
    if let Some(&k) = keys.iter().find(|&&k| k >= pv) {
        return Err(Error::KeyOutOfUniverse {
            key: k,
            universe: pv as u128,
        });
    }
    let n = keys.len();

    let per_a = |a: u64, (mut counts, mut ax, mut load): (Vec<u64>, Vec<u64>, Vec<u32>)| {
        ax.clear();
        ax.extend(keys.iter().map(|&x| mul_mod(a, x, pv)));
        load.resize(m as usize, 0);
        for b in 0..pv {
            let mut best = 0;
            for &v in &ax {
                let slot = &mut load[(add_mod(v, b, pv) % m) as usize];
                *slot += 1;
                best = best.max(*slot);
            }
            for &v in &ax {
                load[(add_mod(v, b, pv) % m) as usize] = 0;
            }
            counts[best as usize] += 1;
        }
        (counts, ax, load)
    };
    let init = || (vec![0u64; n + 1], Vec::with_capacity(n), Vec::new());
    let job = || {
        (first_a..pv)
            .into_par_iter()
            .fold(init, |acc, a| per_a(a, acc))
            .map(|(c, _, _)| c)
            .reduce(
                || vec![0u64; n + 1],
                |mut x, y| {
                    x.iter_mut().zip(y).for_each(|(l, r)| *l += r);
                    x
                },
            )
    };
    let counts = match threads {
        None => job(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::BadExperiment(format!("thread pool: {e}")))?
            .install(job),
    };

    Ok(ExactDistribution {
        p: pv,
        m,
        n: n as u64,
        seeds: (pv - first_a) * pv,
        counts,
    })
}

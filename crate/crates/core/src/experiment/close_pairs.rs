//! Expected number of ordered key pairs `x != x'` whose scaled difference
//! `a (x - x')` has modular norm below `U / (m alpha)`.

use num_rational::Ratio;
use rand::Rng;
use serde::Serialize;

use super::{run_indexed, FamilyConfig, MeanEstimate};
use crate::chaintable::ensure_distinct;
use crate::error::{Error, Result};
use crate::hashfn::trial_rng;
use crate::lemma_oracle::count_close_pairs;
use crate::modmath::mul_mod;
use crate::report::ser_f64;

/// Largest universe enumerated by [`close_pair_exact`].
const EXACT_GUARD: u64 = 1 << 26;

/// Modulus and multiplier space for the scaled-difference argument.
#[derive(Clone, Copy, Debug)]
enum Scaling {
    /// `a` uniform over `Z_p^*`.
    Prime(u64),
    /// `a` uniform over the odd residues mod `2^r`.
    PowerOfTwo(u32),
}

impl Scaling {
    fn of(family: &FamilyConfig) -> Result<Self> {
        match *family {
            FamilyConfig::LinearModP { p, .. } => Ok(Scaling::Prime(p.get())),
            FamilyConfig::MultiplyShift { r, .. } if r <= 63 => Ok(Scaling::PowerOfTwo(r)),
            FamilyConfig::MultiplyShift { r, .. } => Err(Error::BadExperiment(format!(
                "close-pair counting needs r <= 63, got {r}"
            ))),
            FamilyConfig::FullyRandom { .. } => Err(Error::BadExperiment(
                "close pairs are defined for the linear and multiply-shift families only".into(),
            )),
        }
    }

    fn modulus(self) -> u64 {
        match self {
            Scaling::Prime(p) => p,
            Scaling::PowerOfTwo(r) => 1 << r,
        }
    }

    fn multipliers(self) -> u64 {
        match self {
            Scaling::Prime(p) => p - 1,
            Scaling::PowerOfTwo(r) => 1 << (r - 1),
        }
    }

    /// The `i`-th multiplier in enumeration order.
    fn multiplier(self, i: u64) -> u64 {
        match self {
            Scaling::Prime(_) => i + 1,
            Scaling::PowerOfTwo(_) => 2 * i + 1,
        }
    }
}

/// Analytic ceiling on the expected number of close ordered pairs:
/// `2 n (n - 1) p / (m alpha (p - 1))` for the linear family and
/// `4 n (n - 1) / (m alpha)` for multiply-shift.
pub fn close_pair_ceiling(family: &FamilyConfig, n: u64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let pairs = n as f64 * n.saturating_sub(1) as f64;
    let m = family.m() as f64;
    match Scaling::of(family)? {
        Scaling::Prime(p) => Ok(pairs * 2.0 * p as f64 / (m * alpha * (p - 1) as f64)),
        Scaling::PowerOfTwo(_) => Ok(pairs * 4.0 / (m * alpha)),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha < 1.0 {
        return Err(Error::AlphaOutOfRange {
            alpha,
            reason: "must be a finite value >= 1".into(),
        });
    }
    Ok(())
}

fn validate_keys(keys: &[u64], universe: u64) -> Result<()> {
    ensure_distinct(keys)?;
    match keys.iter().find(|&&k| k >= universe) {
        Some(&k) => Err(Error::KeyOutOfUniverse {
            key: k,
            universe: universe as u128,
        }),
        None => Ok(()),
    }
}

fn count_for(keys: &[u64], a: u64, modulus: u64, bound: f64, scratch: &mut Vec<u64>) -> u64 {
    scratch.clear();
    scratch.extend(keys.iter().map(|&x| mul_mod(a, x, modulus)));
    count_close_pairs(scratch, modulus, bound)
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosePairEstimate {
    #[serde(serialize_with = "ser_f64")]
    pub alpha: f64,
    pub n: u64,
    pub mean: MeanEstimate,
    #[serde(serialize_with = "ser_f64")]
    pub ceiling: f64,
}

/// Monte Carlo mean of the close-pair count over `trials` random multipliers.
pub fn close_pair_expectation(
    family: &FamilyConfig,
    keys: &[u64],
    alpha: f64,
    trials: u64,
    base_seed: u64,
    threads: Option<usize>,
) -> Result<ClosePairEstimate> {
    let scaling = Scaling::of(family)?;
    check_alpha(alpha)?;
    if trials == 0 {
        return Err(Error::BadExperiment("need at least one trial".into()));
    }
    let modulus = scaling.modulus();
    validate_keys(keys, modulus)?;
    let bound = modulus as f64 / (family.m() as f64 * alpha);
    let counts = run_indexed(trials, threads, |i| {
        let idx = trial_rng(base_seed, i).random_range(0..scaling.multipliers());
        Ok(count_for(keys, scaling.multiplier(idx), modulus, bound, &mut Vec::new()) as f64)
    })?;
    Ok(ClosePairEstimate {
        alpha,
        n: keys.len() as u64,
        mean: MeanEstimate::from_samples(counts)?,
        ceiling: close_pair_ceiling(family, keys.len() as u64, alpha)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosePairExact {
    #[serde(serialize_with = "ser_f64")]
    pub alpha: f64,
    pub n: u64,
    pub multipliers: u64,
    /// Sum of close-pair counts over every multiplier.
    pub total: u128,
    #[serde(skip)]
    pub mean: Ratio<u128>,
    #[serde(serialize_with = "ser_f64")]
    pub ceiling: f64,
}

impl ClosePairExact {
    pub fn mean_f64(&self) -> f64 {
        *self.mean.numer() as f64 / *self.mean.denom() as f64
    }

    /// `mean <= ceiling`, compared as `total <= ceiling * multipliers`.
    pub fn within_ceiling(&self) -> bool {
        self.total as f64 <= self.ceiling * self.multipliers as f64
    }
}

/// Exact mean of the close-pair count over every multiplier.
pub fn close_pair_exact(
    family: &FamilyConfig,
    keys: &[u64],
    alpha: f64,
    threads: Option<usize>,
) -> Result<ClosePairExact> {
    let scaling = Scaling::of(family)?;
    check_alpha(alpha)?;
    let modulus = scaling.modulus();
    if modulus > EXACT_GUARD {
        return Err(Error::EnumerationGuard {
            required: scaling.multipliers() as u128,
            guard: EXACT_GUARD as u128,
        });
    }
    validate_keys(keys, modulus)?;
    let bound = modulus as f64 / (family.m() as f64 * alpha);
    let counts = run_indexed(scaling.multipliers(), threads, |i| {
        Ok(count_for(keys, scaling.multiplier(i), modulus, bound, &mut Vec::new()) as u128)
    })?;
    let total: u128 = counts.iter().sum();
    Ok(ClosePairExact {
        alpha,
        n: keys.len() as u64,
        multipliers: scaling.multipliers(),
        total,
        mean: Ratio::new(total, scaling.multipliers() as u128),
        ceiling: close_pair_ceiling(family, keys.len() as u64, alpha)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modmath::{mod_norm, Prime64};

    fn linear(p: u64, m: u64) -> FamilyConfig {
        FamilyConfig::LinearModP {
            p: Prime64::new(p).unwrap(),
            m,
        }
    }

    /// Direct O(n^2) count per multiplier.
    fn naive_total(keys: &[u64], modulus: u64, mults: impl Iterator<Item = u64>, m: u64, alpha: f64) -> u128 {
        let bound = modulus as f64 / (m as f64 * alpha);
        let mut total = 0u128;
        for a in mults {
            for &x in keys {
                for &y in keys {
                    if x != y {
                        let d = (x + modulus - y) % modulus;
                        let v = (a as u128 * d as u128 % modulus as u128) as u64;
                        if (mod_norm(v, modulus) as f64) < bound {
                            total += 1;
                        }
                    }
                }
            }
        }
        total
    }

    #[test]
    fn single_key_has_no_pairs() {
        let est = close_pair_expectation(&linear(101, 8), &[5], 1.0, 50, 1, None).unwrap();
        assert_eq!(est.mean.mean, 0.0);
        let ex = close_pair_exact(&linear(101, 8), &[5], 1.0, None).unwrap();
        assert_eq!(ex.total, 0);
    }

    #[test]
    fn linear_exact_below_ceiling() {
        let keys: Vec<u64> = (0..8).collect();
        for alpha in [1.0, 2.0] {
            let ex = close_pair_exact(&linear(101, 8), &keys, alpha, None).unwrap();
            assert_eq!(ex.multipliers, 100);
            assert_eq!(ex.total, naive_total(&keys, 101, 1..101, 8, alpha));
            assert!(ex.within_ceiling(), "alpha={alpha}: {} > {}", ex.mean_f64(), ex.ceiling);
            let expected = 2.0 * 8.0 * 7.0 * 101.0 / (8.0 * alpha * 100.0);
            assert!((ex.ceiling - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn multiply_shift_exact_below_ceiling() {
        let family = FamilyConfig::MultiplyShift { r: 10, l: 3 };
        let keys = [1u64, 2, 3, 5, 8, 13, 21, 34];
        for alpha in [1.0, 2.0] {
            let ex = close_pair_exact(&family, &keys, alpha, None).unwrap();
            assert_eq!(ex.multipliers, 512);
            assert_eq!(ex.total, naive_total(&keys, 1024, (1..1024).step_by(2), 8, alpha));
            assert!(ex.within_ceiling());
        }
    }

    #[test]
    fn monte_carlo_tracks_exact() {
        let keys: Vec<u64> = (0..16).map(|i| i * 37 % 1009).collect();
        let mut keys = keys;
        keys.sort();
        let family = linear(1009, 16);
        let ex = close_pair_exact(&family, &keys, 1.0, None).unwrap();
        let mc = close_pair_expectation(&family, &keys, 1.0, 20_000, 3, None).unwrap();
        assert!((mc.mean.mean - ex.mean_f64()).abs() < 4.0 * mc.mean.std_err);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(close_pair_exact(&linear(101, 8), &[1, 2], 0.5, None).is_err());
        assert!(close_pair_exact(&FamilyConfig::FullyRandom { m: 8 }, &[1, 2], 1.0, None).is_err());
        assert!(close_pair_exact(&linear(101, 8), &[1, 101], 1.0, None).is_err());
        assert!(close_pair_exact(&linear(101, 8), &[1, 1], 1.0, None).is_err());
    }
}

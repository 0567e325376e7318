//! The hash families under study, plus a fully random baseline.
//!
//! * linear mod-p: `h(x) = ((a x + b) mod p) mod m`, with `a, b` uniform over
//!   `[p]` (including `a = 0`).
//! * multiply-shift: `h(x) = ((a x) mod 2^r) >> (r - l)`, with `a` uniform over
//!   the odd residues mod `2^r`.
//! * fully random: an i.i.d. uniform bucket per key, tabulated per trial.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modmath::{add_mod, mul_mod, Prime64};

/// Default bound on `p` for exhaustive seed enumeration (`p^2` seeds).
pub const DEFAULT_ENUMERATION_GUARD: u64 = 1 << 16;

/// Random source handed to samplers. Counter-based, so a trial's stream is a
/// pure function of its seed.
pub type TrialRng = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-trial seed derived from `(base_seed, trial_index)`. Independent of the
/// order in which trials are executed.
#[inline]
pub fn trial_seed(base_seed: u64, trial_index: u64) -> u64 {
    mix64(mix64(base_seed) ^ trial_index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub fn trial_rng(base_seed: u64, trial_index: u64) -> TrialRng {
    TrialRng::seed_from_u64(trial_seed(base_seed, trial_index))
}

/// Anything that maps keys to buckets in `[buckets()]`.
pub trait BucketHash {
    fn buckets(&self) -> u64;

    fn bucket(&self, x: u64) -> Result<u64>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HashFamilyId {
    LinearModP,
    MultiplyShift,
    /// Comparison baseline; no bound is claimed for it.
    FullyRandom,
}

impl fmt::Display for HashFamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HashFamilyId::LinearModP => "linear-mod-p",
            HashFamilyId::MultiplyShift => "multiply-shift",
            HashFamilyId::FullyRandom => "fully-random",
        })
    }
}

/// Seed `(a, b)` of `((a x + b) mod p) mod m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinearModPParams {
    p: Prime64,
    m: u64,
    a: u64,
    b: u64,
}

impl LinearModPParams {
    pub fn new(p: Prime64, m: u64, a: u64, b: u64) -> Result<Self> {
        if m == 0 || m > p.get() {
            return Err(Error::BadParams(format!("need 1 <= m <= p, got m = {m}, p = {p}")));
        }
        if a >= p.get() || b >= p.get() {
            return Err(Error::BadParams(format!("a = {a}, b = {b} must be < p = {p}")));
        }
        Ok(LinearModPParams { p, m, a, b })
    }

    pub fn p(&self) -> Prime64 {
        self.p
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    /// `(a x + b) mod p`, the stage before reduction mod `m`.
    #[inline]
    pub fn pre_bucket(&self, x: u64) -> u64 {
        let p = self.p.get();
        add_mod(mul_mod(self.a, x, p), self.b, p)
    }

    /// Bucket of `x`; `x` must lie in `[p]`.
    pub fn eval(&self, x: u64) -> Result<u64> {
        if x >= self.p.get() {
            return Err(Error::KeyOutOfUniverse {
                key: x,
                universe: self.p.get() as u128,
            });
        }
        Ok(self.pre_bucket(x) % self.m)
    }
}

impl BucketHash for LinearModPParams {
    fn buckets(&self) -> u64 {
        self.m
    }

    fn bucket(&self, x: u64) -> Result<u64> {
        self.eval(x)
    }
}

/// `((a x + b) mod p) mod m`.
pub fn linear_eval(params: &LinearModPParams, x: u64) -> Result<u64> {
    params.eval(x)
}

/// Multiplier `a` of `((a x) mod 2^r) >> (r - l)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiplyShiftParams {
    r: u32,
    l: u32,
    a: u64,
}

impl MultiplyShiftParams {
    pub fn new(r: u32, l: u32, a: u64) -> Result<Self> {
        check_shift_shape(r, l)?;
        if a & 1 == 0 {
            return Err(Error::BadParams(format!("multiplier a = {a} must be odd")));
        }
        if r < 64 && a >> r != 0 {
            return Err(Error::BadParams(format!("multiplier a = {a} must be < 2^{r}")));
        }
        Ok(MultiplyShiftParams { r, l, a })
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    /// `2^l`.
    pub fn m(&self) -> u64 {
        1 << self.l
    }

    /// `2^r` as a `u128`, since `r = 64` is allowed.
    pub fn q(&self) -> u128 {
        1u128 << self.r
    }

    #[inline]
    fn word_mask(&self) -> u64 {
        low_mask(self.r)
    }

    /// Shift form: the top `l` of the low `r` bits of `a x`.
    #[inline]
    pub fn eval_unchecked(&self, x: u64) -> u64 {
        (self.a.wrapping_mul(x) & self.word_mask()) >> (self.r - self.l)
    }

    pub fn eval(&self, x: u64) -> Result<u64> {
        if x & !self.word_mask() != 0 {
            return Err(Error::KeyOutOfUniverse {
                key: x,
                universe: self.q(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    /// `floor(((a x) mod q) / (q / m))`, evaluated in 128-bit arithmetic.
    /// Must agree with [`MultiplyShiftParams::eval`] bit for bit.
    pub fn eval_floor_division(&self, x: u64) -> Result<u64> {
        if x as u128 >= self.q() {
            return Err(Error::KeyOutOfUniverse {
                key: x,
                universe: self.q(),
            });
        }
        let q = self.q();
        let block = q / self.m() as u128;
        Ok((((self.a as u128 * x as u128) % q) / block) as u64)
    }
}

impl BucketHash for MultiplyShiftParams {
    fn buckets(&self) -> u64 {
        self.m()
    }

    fn bucket(&self, x: u64) -> Result<u64> {
        self.eval(x)
    }
}

pub fn multiply_shift_eval(params: &MultiplyShiftParams, x: u64) -> Result<u64> {
    params.eval(x)
}

#[inline]
pub(crate) fn low_mask(r: u32) -> u64 {
    if r >= 64 {
        u64::MAX
    } else {
        (1 << r) - 1
    }
}

pub(crate) fn check_shift_shape(r: u32, l: u32) -> Result<()> {
    // m = 2^l must fit in a u64 bucket count.
    if l < 1 || l > r || r > 64 || l > 63 {
        return Err(Error::BadParams(format!(
            "need 1 <= l <= min(r, 63) and r <= 64, got r = {r}, l = {l}"
        )));
    }
    Ok(())
}

/// Draws `a` and `b` independently and uniformly from `[p]`. `a = 0` is possible.
pub fn sample_linear<R: Rng + ?Sized>(p: Prime64, m: u64, rng: &mut R) -> Result<LinearModPParams> {
    let a = rng.random_range(0..p.get());
    let b = rng.random_range(0..p.get());
    LinearModPParams::new(p, m, a, b)
}

/// Draws `a = 2u + 1` with `u` uniform over `[2^(r-1)]`.
pub fn sample_multiply_shift<R: Rng + ?Sized>(r: u32, l: u32, rng: &mut R) -> Result<MultiplyShiftParams> {
    check_shift_shape(r, l)?;
    let u = rng.random::<u64>() & low_mask(r - 1);
    MultiplyShiftParams::new(r, l, 2 * u + 1)
}

/// Every seed `(a, b) ∈ [p]^2` in a-major order.
pub fn enumerate_linear_seeds(
    p: Prime64,
    m: u64,
    guard: Option<u64>,
) -> Result<impl Iterator<Item = LinearModPParams>> {
    let guard = guard.unwrap_or(DEFAULT_ENUMERATION_GUARD);
    if p.get() > guard {
        return Err(Error::EnumerationGuard {
            required: p.get() as u128 * p.get() as u128,
            guard: guard as u128 * guard as u128,
        });
    }
    // Validate (p, m) once so the iterator itself cannot fail.
    LinearModPParams::new(p, m, 0, 0)?;
    let pv = p.get();
    Ok((0..pv).flat_map(move |a| (0..pv).map(move |b| LinearModPParams { p, m, a, b })))
}

/// A per-trial table of i.i.d. uniform buckets.
#[derive(Clone, Debug)]
pub struct FullyRandomTable {
    m: u64,
    table: HashMap<u64, u64>,
}

impl FullyRandomTable {
    /// Assigns each key an independent uniform bucket. Keys are visited in the
    /// given order, so the table is a deterministic function of `(keys, rng)`.
    pub fn build<R: Rng + ?Sized>(keys: &[u64], m: u64, rng: &mut R) -> Result<Self> {
        if m == 0 {
            return Err(Error::BadParams("m must be >= 1".into()));
        }
        let mut table = HashMap::with_capacity(keys.len());
        for &k in keys {
            if table.insert(k, rng.random_range(0..m)).is_some() {
                return Err(Error::DuplicateKey(k));
            }
        }
        Ok(FullyRandomTable { m, table })
    }

    pub fn eval(&self, x: u64) -> Result<u64> {
        self.table.get(&x).copied().ok_or(Error::UnknownKey(x))
    }
}

impl BucketHash for FullyRandomTable {
    fn buckets(&self) -> u64 {
        self.m
    }

    fn bucket(&self, x: u64) -> Result<u64> {
        self.eval(x)
    }
}

pub fn fully_random_eval(assignment: &FullyRandomTable, x: u64) -> Result<u64> {
    assignment.eval(x)
}

/// A sampled member of one of the three families.
#[derive(Clone, Debug)]
pub enum HashFunction {
    Linear(LinearModPParams),
    MultiplyShift(MultiplyShiftParams),
    FullyRandom(FullyRandomTable),
}

impl HashFunction {
    pub fn family(&self) -> HashFamilyId {
        match self {
            HashFunction::Linear(_) => HashFamilyId::LinearModP,
            HashFunction::MultiplyShift(_) => HashFamilyId::MultiplyShift,
            HashFunction::FullyRandom(_) => HashFamilyId::FullyRandom,
        }
    }

    /// `(a, b)` where the family has them.
    pub fn seed_fields(&self) -> (Option<u64>, Option<u64>) {
        match self {
            HashFunction::Linear(h) => (Some(h.a), Some(h.b)),
            HashFunction::MultiplyShift(h) => (Some(h.a), None),
            HashFunction::FullyRandom(_) => (None, None),
        }
    }
}

impl BucketHash for HashFunction {
    fn buckets(&self) -> u64 {
        match self {
            HashFunction::Linear(h) => h.buckets(),
            HashFunction::MultiplyShift(h) => h.buckets(),
            HashFunction::FullyRandom(h) => h.buckets(),
        }
    }

    #[inline]
    fn bucket(&self, x: u64) -> Result<u64> {
        match self {
            HashFunction::Linear(h) => h.eval(x),
            HashFunction::MultiplyShift(h) => h.eval(x),
            HashFunction::FullyRandom(h) => h.eval(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    fn prime(p: u64) -> Prime64 {
        Prime64::new(p).unwrap()
    }

    #[test]
    fn linear_examples() {
        let h = LinearModPParams::new(prime(7), 3, 2, 1).unwrap();
        assert_eq!(linear_eval(&h, 4).unwrap(), 2);
        assert!(matches!(h.eval(7), Err(Error::KeyOutOfUniverse { .. })));

        let h = LinearModPParams::new(prime(1009), 100, 1, 0).unwrap();
        for x in 0..1009 {
            assert_eq!(h.eval(x).unwrap(), x % 100);
        }
    }

    #[test]
    fn linear_constant_when_a_is_zero() {
        for b in 0..101 {
            let h = LinearModPParams::new(prime(101), 10, 0, b).unwrap();
            let first = h.eval(0).unwrap();
            assert!((0..101).all(|x| h.eval(x).unwrap() == first));
        }
    }

    #[test]
    fn linear_rejects_bad_params() {
        assert!(LinearModPParams::new(prime(7), 8, 1, 1).is_err());
        assert!(LinearModPParams::new(prime(7), 0, 1, 1).is_err());
        assert!(LinearModPParams::new(prime(7), 3, 7, 1).is_err());
        assert!(LinearModPParams::new(prime(7), 3, 1, 7).is_err());
    }

    #[test]
    fn multiply_shift_examples() {
        let h = MultiplyShiftParams::new(4, 2, 1).unwrap();
        assert_eq!(multiply_shift_eval(&h, 13).unwrap(), 3);
        let h = MultiplyShiftParams::new(4, 2, 5).unwrap();
        assert_eq!(h.eval(3).unwrap(), 3);
        assert!(h.eval(16).is_err());
        let h = MultiplyShiftParams::new(8, 8, 77).unwrap();
        for x in 0..256 {
            assert_eq!(h.eval(x).unwrap(), 77 * x % 256);
        }
        let h = MultiplyShiftParams::new(64, 3, 0x9e37_79b9_7f4a_7c15).unwrap();
        assert_eq!(h.eval(1).unwrap(), 0x9e37_79b9_7f4a_7c15 >> 61);
        assert_eq!(h.eval(u64::MAX).unwrap(), h.eval_floor_division(u64::MAX).unwrap());
    }

    #[test]
    fn multiply_shift_rejects_bad_params() {
        assert!(MultiplyShiftParams::new(4, 2, 2).is_err());
        assert!(MultiplyShiftParams::new(4, 2, 17).is_err());
        assert!(MultiplyShiftParams::new(4, 0, 1).is_err());
        assert!(MultiplyShiftParams::new(4, 5, 1).is_err());
        assert!(MultiplyShiftParams::new(65, 5, 1).is_err());
    }

    #[test]
    fn shift_form_equals_floor_division_form() {
        for r in 1..=12u32 {
            for l in 1..=r {
                for a in (1..1u64 << r).step_by(2) {
                    let h = MultiplyShiftParams::new(r, l, a).unwrap();
                    for x in 0..1u64 << r {
                        assert_eq!(h.eval(x).unwrap(), h.eval_floor_division(x).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn shift_form_equals_floor_division_form_r_up_to_16() {
        // Fully exhaustive at r = 16 is ~10^10 evaluations; cover every
        // (l, a) with a stride over x instead.
        for r in 13..=16u32 {
            for l in 1..=r {
                for a in (1..1u64 << r).step_by(2) {
                    let h = MultiplyShiftParams::new(r, l, a).unwrap();
                    for x in (0..1u64 << r).step_by(251) {
                        assert_eq!(h.eval(x).unwrap(), h.eval_floor_division(x).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn sample_linear_frequencies() {
        let p = prime(11);
        let mut rng = trial_rng(7, 0);
        let mut counts = [[0u32; 11]; 11];
        let draws = 1_000_000u32;
        for _ in 0..draws {
            let h = sample_linear(p, 5, &mut rng).unwrap();
            counts[h.a() as usize][h.b() as usize] += 1;
        }
        let expected = draws as f64 / 121.0;
        let sigma = (draws as f64 * (1.0 / 121.0) * (120.0 / 121.0)).sqrt();
        let mut chi2 = 0.0;
        for row in counts {
            for c in row {
                assert!((c as f64 - expected).abs() < 4.0 * sigma, "count {c}");
                chi2 += (c as f64 - expected).powi(2) / expected;
            }
        }
        // 120 degrees of freedom; 99.9% quantile is about 173.6.
        assert!(chi2 < 173.6, "chi2 = {chi2}");
    }

    #[test]
    fn sample_linear_replay_and_reachability() {
        let p = prime(1_000_003);
        let a = sample_linear(p, 1000, &mut trial_rng(42, 9)).unwrap();
        let b = sample_linear(p, 1000, &mut trial_rng(42, 9)).unwrap();
        assert_eq!(a, b);

        let mut seen = HashSet::new();
        let mut rng = trial_rng(1, 1);
        for _ in 0..200 {
            let h = sample_linear(prime(2), 2, &mut rng).unwrap();
            seen.insert((h.a(), h.b()));
        }
        assert_eq!(seen.len(), 4);
        assert!(sample_linear(prime(2), 3, &mut rng).is_err());
    }

    #[test]
    fn sample_multiply_shift_frequencies() {
        let mut rng = trial_rng(3, 0);
        let draws = 100_000;
        let ones = (0..draws)
            .filter(|_| sample_multiply_shift(2, 1, &mut rng).unwrap().a() == 1)
            .count();
        let sigma = (draws as f64 * 0.25).sqrt();
        assert!((ones as f64 - draws as f64 / 2.0).abs() < 4.0 * sigma);

        let mut rng = trial_rng(3, 1);
        for _ in 0..draws {
            let h = sample_multiply_shift(30, 10, &mut rng).unwrap();
            assert_eq!(h.a() & 1, 1);
            assert!(h.a() < 1 << 30);
        }
        let x = sample_multiply_shift(64, 16, &mut trial_rng(5, 5)).unwrap();
        let y = sample_multiply_shift(64, 16, &mut trial_rng(5, 5)).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn seed_enumeration() {
        let seeds: Vec<_> = enumerate_linear_seeds(prime(3), 3, None).unwrap().collect();
        assert_eq!(seeds.len(), 9);
        assert_eq!((seeds[1].a(), seeds[1].b()), (0, 1));

        let hits = enumerate_linear_seeds(prime(5), 2, None)
            .unwrap()
            .filter(|h| h.a() == 0 && h.b() == 4)
            .count();
        assert_eq!(hits, 1);

        let all: HashSet<_> = enumerate_linear_seeds(prime(251), 16, None)
            .unwrap()
            .map(|h| (h.a(), h.b()))
            .collect();
        assert_eq!(all.len(), 63_001);

        match enumerate_linear_seeds(prime(65_537), 16, None) {
            Err(Error::EnumerationGuard { required, .. }) => assert_eq!(required, 65_537u128 * 65_537),
            other => panic!("expected guard error, got {:?}", other.map(|_| ())),
        }
        assert!(enumerate_linear_seeds(prime(65_537), 16, Some(1 << 17)).is_ok());
    }

    #[test]
    fn fully_random_table() {
        let keys: Vec<u64> = (0..100).map(|k| k * 7).collect();
        let t1 = FullyRandomTable::build(&keys, 10, &mut trial_rng(11, 2)).unwrap();
        let t2 = FullyRandomTable::build(&keys, 10, &mut trial_rng(11, 2)).unwrap();
        for &k in &keys {
            assert_eq!(fully_random_eval(&t1, k).unwrap(), t2.eval(k).unwrap());
            assert!(t1.eval(k).unwrap() < 10);
        }
        assert!(matches!(t1.eval(1), Err(Error::UnknownKey(1))));
        assert!(FullyRandomTable::build(&[1, 1], 10, &mut trial_rng(0, 0)).is_err());
    }

    #[test]
    fn trial_seeds_differ() {
        let seeds: HashSet<u64> = (0..10_000).map(|i| trial_seed(99, i)).collect();
        assert_eq!(seeds.len(), 10_000);
        assert_ne!(trial_seed(1, 0), trial_seed(2, 0));
    }
}

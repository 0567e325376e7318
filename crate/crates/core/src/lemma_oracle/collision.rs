//! Exact per-difference collision probabilities, bucket preimages, and
//! pairwise uniformity of the linear family.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashfn::check_shift_shape;
use crate::modmath::{add_mod, inv_mod, mod_norm, mul_mod, IntervalZr, Prime64};
use crate::report::ser_f64;

/// Largest multiplier space [`exact_collision_probability`] enumerates.
const MULTIPLIER_GUARD: u64 = 1 << 26;

/// Largest prime [`pairwise_uniformity_exhaustive`] accepts.
pub const UNIFORMITY_MAX_P: u64 = 101;

/// The scaling universe: `Z_p` with multipliers in `Z_p^*`, or `Z_{2^r}` with
/// odd multipliers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Universe {
    Prime { p: Prime64 },
    PowerOfTwo { r: u32 },
}

impl Universe {
    pub fn prime(p: u64) -> Result<Self> {
        Ok(Universe::Prime { p: Prime64::new(p)? })
    }

    /// `p` or `2^r`.
    pub fn size(&self) -> u128 {
        match *self {
            Universe::Prime { p } => p.get() as u128,
            Universe::PowerOfTwo { r } => 1u128 << r,
        }
    }

    fn multipliers(&self) -> u128 {
        match *self {
            Universe::Prime { p } => p.get() as u128 - 1,
            Universe::PowerOfTwo { r } => 1u128 << r.saturating_sub(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollisionProbability {
    pub universe: Universe,
    pub m: u64,
    #[serde(serialize_with = "ser_f64")]
    pub alpha: f64,
    pub d: u64,
    /// Multipliers `a` with `mod_norm(a d) < U / (m alpha)`.
    pub hits: u64,
    pub multipliers: u64,
    #[serde(skip)]
    pub probability: Ratio<u64>,
    #[serde(serialize_with = "ser_f64")]
    pub ceiling: f64,
    pub within: bool,
}

impl CollisionProbability {
    pub fn probability_f64(&self) -> f64 {
        *self.probability.numer() as f64 / *self.probability.denom() as f64
    }
}

/// Exact `Pr_a[mod_norm(a d) < U / (m alpha)]` over every multiplier `a`,
/// with the ceiling `2p / (m alpha (p - 1))` (prime) or `4 / (m alpha)`
/// (power of two).
pub fn exact_collision_probability(universe: Universe, m: u64, alpha: f64, d: u64) -> Result<CollisionProbability> {
    if !alpha.is_finite() || alpha < 1.0 {
        return Err(Error::AlphaOutOfRange {
            alpha,
            reason: "must be a finite value >= 1".into(),
        });
    }
    let size = universe.size();
    if m == 0 || m as u128 > size {
        return Err(Error::BadParams(format!("need 1 <= m <= {size}, got {m}")));
    }
    if let Universe::PowerOfTwo { r } = universe {
        if r == 0 || !m.is_power_of_two() {
            return Err(Error::BadParams(format!(
                "power-of-two universe needs r >= 1 and m a power of two, got r = {r}, m = {m}"
            )));
        }
    }
    if universe.multipliers() > MULTIPLIER_GUARD as u128 {
        return Err(Error::EnumerationGuard {
            required: universe.multipliers(),
            guard: MULTIPLIER_GUARD as u128,
        });
    }
    let u = size as u64;
    if d as u128 >= size {
        return Err(Error::BadParams(format!("difference {d} is not reduced mod {u}")));
    }
    if d == 0 {
        return Err(Error::ZeroDifference);
    }
    let threshold = u as f64 / (m as f64 * alpha);
    let close = |a: u64| (mod_norm(mul_mod(a, d, u), u) as f64) < threshold;
    let (hits, multipliers, ceiling, budget) = match universe {
        Universe::Prime { p } => {
            let p = p.get();
            let hits = (1..p).filter(|&a| close(a)).count() as u64;
            (hits, p - 1, 2.0 * p as f64 / (m as f64 * alpha * (p - 1) as f64), 2 * p)
        }
        Universe::PowerOfTwo { .. } => {
            let hits = (1..u).step_by(2).filter(|&a| close(a)).count() as u64;
            (hits, u / 2, 4.0 / (m as f64 * alpha), 2 * u)
        }
    };
    // hits / multipliers <= ceiling, cleared of denominators:
    // hits * m * alpha <= 2p (prime) or 2^(r+1) (power of two).
    let within = hits as f64 * m as f64 * alpha <= budget as f64;
    Ok(CollisionProbability {
        universe,
        m,
        alpha,
        d,
        hits,
        multipliers,
        probability: Ratio::new(hits, multipliers),
        ceiling,
        within,
    })
}

/// The scaled preimage of one bucket, with its certification.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BucketPreimage {
    pub interval: IntervalZr,
    /// `ceil(p / m)` or `2^r / m`.
    pub size_bound: u64,
    /// `p = m`: the preimage is the single residue `y`, left unscaled.
    pub degenerate: bool,
    /// The interval holds exactly the scaled preimage and fits the bound.
    pub certified: bool,
}

/// For the prime universe, `m^-1 f^-1(y)` where `f(z) = z mod m` on `[p]`;
/// for `2^r`, the block `f^-1(y)` where `f(z) = z >> (r - l)` and `m = 2^l`.
pub fn interval_preimage_of_bucket(universe: Universe, m: u64, y: u64) -> Result<BucketPreimage> {
    if y >= m {
        return Err(Error::BadParams(format!("bucket {y} out of range for m = {m}")));
    }
    match universe {
        Universe::Prime { p } => {
            let pv = p.get();
            if m > pv {
                return Err(Error::BadParams(format!("need m <= p, got m = {m}, p = {pv}")));
            }
            if m == pv {
                return Ok(BucketPreimage {
                    interval: IntervalZr::new(pv, y, 1)?,
                    size_bound: 1,
                    degenerate: true,
                    certified: true,
                });
            }
            let inv = inv_mod(m, p)?;
            let start = mul_mod(inv, y, pv);
            let len = (pv - y).div_ceil(m);
            let interval = IntervalZr::new(pv, start, len)?;
            let exact = (0..len).all(|k| mul_mod(inv, y + k * m, pv) == add_mod(start, k % pv, pv));
            let size_bound = pv.div_ceil(m);
            Ok(BucketPreimage {
                interval,
                size_bound,
                degenerate: false,
                certified: exact && len <= size_bound,
            })
        }
        Universe::PowerOfTwo { r } => {
            if !m.is_power_of_two() || m < 2 {
                return Err(Error::BadParams(format!("m must be a power of two >= 2, got {m}")));
            }
            let l = m.trailing_zeros();
            check_shift_shape(r, l)?;
            if r > 62 {
                return Err(Error::BadParams(format!("r = {r} too large for an interval of Z_2^r")));
            }
            let q = 1u64 << r;
            let shift = r - l;
            let width = 1u64 << shift;
            let start = y << shift;
            let end = start + width;
            let inside = (start >> shift) == y && ((end - 1) >> shift) == y;
            let left = start == 0 || ((start - 1) >> shift) != y;
            let right = end == q || (end >> shift) != y;
            Ok(BucketPreimage {
                interval: IntervalZr::new(q, start, width)?,
                size_bound: width,
                degenerate: false,
                certified: inside && left && right,
            })
        }
    }
}

/// Checks that `(a, b) -> ((a x + b) mod p, (a x' + b) mod p)` is a bijection
/// of `[p]^2`.
pub fn pairwise_uniformity_for_pair(p: Prime64, x: u64, x2: u64) -> Result<bool> {
    let pv = p.get();
    if x == x2 {
        return Err(Error::IdenticalKeys(x));
    }
    if let Some(&k) = [x, x2].iter().find(|&&k| k >= pv) {
        return Err(Error::KeyOutOfUniverse {
            key: k,
            universe: pv as u128,
        });
    }
    if pv > 1 << 12 {
        return Err(Error::EnumerationGuard {
            required: pv as u128 * pv as u128,
            guard: 1 << 24,
        });
    }
    let mut seen = vec![false; (pv * pv) as usize];
    for a in 0..pv {
        let (ax, ax2) = (mul_mod(a, x, pv), mul_mod(a, x2, pv));
        for b in 0..pv {
            let cell = (add_mod(ax, b, pv) * pv + add_mod(ax2, b, pv)) as usize;
            if std::mem::replace(&mut seen[cell], true) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UniformityVerdict {
    pub p: u64,
    pub pairs_checked: u64,
    /// Unordered pairs `x < x'` whose map is not a bijection.
    pub failures: Vec<(u64, u64)>,
}

impl UniformityVerdict {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// [`pairwise_uniformity_for_pair`] over every pair `x < x'` in `[p]`.
pub fn pairwise_uniformity_exhaustive(p: Prime64) -> Result<UniformityVerdict> {
    let pv = p.get();
    if pv > UNIFORMITY_MAX_P {
        return Err(Error::EnumerationGuard {
            required: (pv as u128).pow(4),
            guard: (UNIFORMITY_MAX_P as u128).pow(4),
        });
    }
    let mut failures = Vec::new();
    let mut pairs_checked = 0;
    for x in 0..pv {
        for x2 in x + 1..pv {
            pairs_checked += 1;
            if !pairwise_uniformity_for_pair(p, x, x2)? {
                failures.push((x, x2));
            }
        }
    }
    Ok(UniformityVerdict {
        p: pv,
        pairs_checked,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modmath::is_prime;

    fn prime(p: u64) -> Universe {
        Universe::prime(p).unwrap()
    }

    #[test]
    fn threshold_below_one() {
        for d in 1..11 {
            let c = exact_collision_probability(prime(11), 11, 1.0, d).unwrap();
            assert_eq!(c.hits, 0);
            assert!(c.within);
        }
    }

    #[test]
    fn p101_direct_count() {
        let c = exact_collision_probability(prime(101), 10, 2.0, 1).unwrap();
        // norm(a) < 5.05 for a in 1..100: a in {1..5, 96..100}.
        assert_eq!(c.hits, 10);
        assert_eq!(c.probability, Ratio::new(10, 100));
        assert!(c.probability_f64() <= 2.0 * 101.0 / (10.0 * 2.0 * 100.0));
        assert!(c.within);
    }

    #[test]
    fn q256_odd_d() {
        for d in (1..256).step_by(2) {
            let c = exact_collision_probability(Universe::PowerOfTwo { r: 8 }, 16, 2.0, d).unwrap();
            assert_eq!(c.multipliers, 128);
            // 256 / 32 = 8: odd y with norm < 8 are +-1, +-3, +-5, +-7.
            assert_eq!(c.hits, 8);
            assert!(c.within);
        }
    }

    #[test]
    fn ceilings_hold_small_primes() {
        for p in (2..=211u64).filter(|&p| is_prime(p)) {
            for m in [p.div_ceil(4), p] {
                for alpha in [1.0, 2.0, 4.0] {
                    for d in 1..p {
                        let c = exact_collision_probability(prime(p), m, alpha, d).unwrap();
                        assert!(c.within, "p={p} m={m} alpha={alpha} d={d}");
                    }
                }
            }
        }
    }

    #[test]
    fn collision_errors() {
        assert!(matches!(
            exact_collision_probability(prime(11), 4, 1.0, 0),
            Err(Error::ZeroDifference)
        ));
        assert!(exact_collision_probability(prime(11), 4, 0.5, 1).is_err());
        assert!(exact_collision_probability(prime(11), 12, 1.0, 1).is_err());
        assert!(exact_collision_probability(Universe::PowerOfTwo { r: 8 }, 12, 1.0, 1).is_err());
        assert!(exact_collision_probability(Universe::PowerOfTwo { r: 40 }, 4, 1.0, 1).is_err());
    }

    #[test]
    fn aligned_block() {
        let pre = interval_preimage_of_bucket(Universe::PowerOfTwo { r: 4 }, 4, 1).unwrap();
        assert_eq!((pre.interval.start(), pre.interval.len()), (4, 4));
        assert!(pre.certified);
    }

    #[test]
    fn p11_m3_bucket0() {
        let pre = interval_preimage_of_bucket(prime(11), 3, 0).unwrap();
        let mut members: Vec<u64> = pre.interval.members().collect();
        members.sort();
        assert_eq!(members, vec![0, 1, 2, 3]);
        assert_eq!(pre.size_bound, 4);
        assert!(pre.certified && !pre.degenerate);
    }

    #[test]
    fn linear_preimage_membership_exhaustive() {
        for p in (2..=211u64).filter(|&p| is_prime(p)) {
            for m in 1..=p {
                for y in 0..m {
                    let pre = interval_preimage_of_bucket(prime(p), m, y).unwrap();
                    assert!(pre.certified);
                    assert!(pre.interval.len() <= pre.size_bound);
                    if pre.degenerate {
                        assert_eq!(m, p);
                        continue;
                    }
                    for x in 0..p {
                        let inside = pre.interval.contains(x);
                        assert_eq!(inside, mul_mod(m, x, p) % m == y, "p={p} m={m} y={y} x={x}");
                    }
                }
            }
        }
    }

    #[test]
    fn shift_preimage_exhaustive() {
        for r in 1..=10u32 {
            let q = 1u64 << r;
            for l in 1..=r {
                let m = 1u64 << l;
                for y in 0..m {
                    let pre = interval_preimage_of_bucket(Universe::PowerOfTwo { r }, m, y).unwrap();
                    assert!(pre.certified);
                    assert_eq!(pre.interval.len(), q / m);
                    for z in 0..q {
                        assert_eq!(pre.interval.contains(z), z >> (r - l) == y);
                    }
                }
            }
        }
    }

    #[test]
    fn uniformity() {
        let v = pairwise_uniformity_exhaustive(Prime64::new(3).unwrap()).unwrap();
        assert_eq!(v.pairs_checked, 3);
        assert!(v.holds());
        for p in [5, 7, 11] {
            assert!(pairwise_uniformity_exhaustive(Prime64::new(p).unwrap()).unwrap().holds());
        }
        let p101 = Prime64::new(101).unwrap();
        for (x, x2) in [(0, 1), (5, 100), (37, 64)] {
            assert!(pairwise_uniformity_for_pair(p101, x, x2).unwrap());
        }
        assert!(matches!(
            pairwise_uniformity_for_pair(p101, 4, 4),
            Err(Error::IdenticalKeys(4))
        ));
        assert!(pairwise_uniformity_exhaustive(Prime64::new(103).unwrap()).is_err());
    }
}

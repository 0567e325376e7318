//! Exact integer and modular arithmetic on 64-bit words.
//!
//! Every product that can exceed 64 bits goes through [`mul_mod`], which
//! widens to `u128`. Moduli are capped at [`MAX_MODULUS`] so that `r - x`
//! and interval arithmetic stay in `u64`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest modulus accepted by [`Residue`] and [`IntervalZr`].
pub const MAX_MODULUS: u64 = (1 << 63) - 1;

/// `(x * y) mod r`, exact for every `u64` input.
#[inline]
pub fn mul_mod(x: u64, y: u64, r: u64) -> u64 {
    debug_assert!(r >= 1);
    ((x as u128 * y as u128) % r as u128) as u64
}

#[inline]
pub fn add_mod(x: u64, y: u64, r: u64) -> u64 {
    debug_assert!(x < r && y < r);
    let (s, carry) = x.overflowing_add(y);
    if carry || s >= r {
        s.wrapping_sub(r)
    } else {
        s
    }
}

#[inline]
pub fn sub_mod(x: u64, y: u64, r: u64) -> u64 {
    debug_assert!(x < r && y < r);
    if x >= y {
        x - y
    } else {
        r - (y - x)
    }
}

pub fn pow_mod(mut base: u64, mut exp: u64, r: u64) -> u64 {
    if r == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= r;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, r);
        }
        base = mul_mod(base, base, r);
        exp >>= 1;
    }
    acc
}

/// Greatest common divisor. `gcd(0, 0)` is rejected.
pub fn gcd(n: u64, m: u64) -> Result<u64> {
    if n == 0 && m == 0 {
        return Err(Error::GcdOfZeros);
    }
    let (mut a, mut b) = (n, m);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    Ok(a)
}

pub fn coprime(n: u64, m: u64) -> bool {
    matches!(gcd(n, m), Ok(1))
}

/// Inverse of `a` modulo an arbitrary modulus `r`, via the extended Euclidean
/// algorithm. Fails unless `gcd(a, r) = 1`.
pub fn inv_mod_coprime(a: u64, r: u64) -> Result<u64> {
    let not_invertible = Error::NotInvertible { value: a, modulus: r };
    if r < 2 {
        return Err(not_invertible);
    }
    let a = a % r;
    // Signed Bezout coefficients stay within (-r, r), so i128 is ample.
    let (mut old_r, mut cur_r) = (a as i128, r as i128);
    let (mut old_s, mut cur_s) = (1i128, 0i128);
    while cur_r != 0 {
        let q = old_r / cur_r;
        (old_r, cur_r) = (cur_r, old_r - q * cur_r);
        (old_s, cur_s) = (cur_s, old_s - q * cur_s);
    }
    if old_r != 1 {
        return Err(not_invertible);
    }
    Ok(old_s.rem_euclid(r as i128) as u64)
}

/// Multiplicative inverse modulo a prime.
pub fn inv_mod(a: u64, p: Prime64) -> Result<u64> {
    inv_mod_coprime(a, p.get())
}

const SMALL_PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic primality test, exact for every `u64`.
///
/// Miller-Rabin with the first twelve primes as witnesses. This witness set
/// has no strong pseudoprime below 3.3 * 10^24 (Sorenson & Webster, 2015),
/// which covers the whole 64-bit range.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &q in &SMALL_PRIMES {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    if n < 41 * 41 {
        return true;
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &w in &SMALL_PRIMES {
        let mut x = pow_mod(w, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A 64-bit prime, checked on construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Prime64(u64);

impl Prime64 {
    pub fn new(p: u64) -> Result<Self> {
        if is_prime(p) {
            Ok(Prime64(p))
        } else {
            Err(Error::NotPrime(p))
        }
    }

    #[inline]
    pub const fn get(self) -> u64 {
        self.0
    }
}

impl TryFrom<u64> for Prime64 {
    type Error = Error;

    fn try_from(p: u64) -> Result<Self> {
        Prime64::new(p)
    }
}

impl From<Prime64> for u64 {
    fn from(p: Prime64) -> u64 {
        p.0
    }
}

impl fmt::Display for Prime64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Smallest prime `>= m`.
pub fn next_prime_at_least(m: u64) -> Result<Prime64> {
    let mut c = m.max(2);
    loop {
        if is_prime(c) {
            return Ok(Prime64(c));
        }
        c = c.checked_add(1).ok_or(Error::PrimeOverflow(m))?;
    }
}

/// All primes `q` with `lo < q < hi`, ascending.
pub fn primes_in_open_interval(lo: u64, hi: u64) -> Vec<u64> {
    if hi <= lo.saturating_add(1) {
        return Vec::new();
    }
    let first = lo + 1;
    let width = hi - first;
    if hi <= 1 << 40 && width <= 1 << 24 {
        segmented_sieve(first, hi)
    } else {
        (first..hi).filter(|&c| is_prime(c)).collect()
    }
}

/// Primes in `[first, end)` by sieving with base primes up to `sqrt(end)`.
fn segmented_sieve(first: u64, end: u64) -> Vec<u64> {
    let limit = (end as f64).sqrt() as u64 + 1;
    let mut base = vec![true; limit as usize + 1];
    let mut base_primes = Vec::new();
    for i in 2..=limit as usize {
        if base[i] {
            base_primes.push(i as u64);
            let mut j = i * i;
            while j <= limit as usize {
                base[j] = false;
                j += i;
            }
        }
    }

    let mut seg = vec![true; (end - first) as usize];
    for &q in &base_primes {
        let mut j = (q * q).max(first.div_ceil(q) * q);
        while j < end {
            seg[(j - first) as usize] = false;
            j += q;
        }
    }
    seg.iter()
        .enumerate()
        .filter(|&(i, &keep)| keep && first + i as u64 >= 2)
        .map(|(i, _)| first + i as u64)
        .collect()
}

/// The modular norm `min(x, r - x)`: distance from `x` to 0 on the cycle `Z_r`.
#[inline]
pub fn mod_norm(x: u64, r: u64) -> u64 {
    debug_assert!(x < r);
    if x == 0 {
        0
    } else {
        x.min(r - x)
    }
}

fn check_modulus(r: u64) -> Result<()> {
    if (2..=MAX_MODULUS).contains(&r) {
        Ok(())
    } else {
        Err(Error::BadModulus(r))
    }
}

/// An element of `Z_r`, stored as its canonical representative in `[r]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Residue {
    value: u64,
    modulus: u64,
}

impl Residue {
    /// Reduces `x` into `[r]`.
    pub fn new(x: u64, r: u64) -> Result<Self> {
        check_modulus(r)?;
        Ok(Residue {
            value: x % r,
            modulus: r,
        })
    }

    /// Canonical representative in `[r]`.
    #[inline]
    pub fn value(self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(self) -> u64 {
        self.modulus
    }

    pub fn inverse(self) -> Result<Residue> {
        Ok(Residue {
            value: inv_mod_coprime(self.value, self.modulus)?,
            ..self
        })
    }

    pub fn norm(self) -> u64 {
        mod_norm(self.value, self.modulus)
    }
}

impl std::ops::Add for Residue {
    type Output = Residue;

    fn add(self, other: Residue) -> Residue {
        debug_assert_eq!(self.modulus, other.modulus);
        Residue {
            value: add_mod(self.value, other.value, self.modulus),
            ..self
        }
    }
}

impl std::ops::Sub for Residue {
    type Output = Residue;

    fn sub(self, other: Residue) -> Residue {
        debug_assert_eq!(self.modulus, other.modulus);
        Residue {
            value: sub_mod(self.value, other.value, self.modulus),
            ..self
        }
    }
}

impl std::ops::Mul for Residue {
    type Output = Residue;

    fn mul(self, other: Residue) -> Residue {
        debug_assert_eq!(self.modulus, other.modulus);
        Residue {
            value: mul_mod(self.value, other.value, self.modulus),
            ..self
        }
    }
}

impl std::ops::Neg for Residue {
    type Output = Residue;

    fn neg(self) -> Residue {
        Residue {
            value: sub_mod(0, self.value, self.modulus),
            ..self
        }
    }
}

/// The interval `{start, start + 1, ..., start + len - 1}` taken mod `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntervalZr {
    modulus: u64,
    start: u64,
    len: u64,
}

impl IntervalZr {
    pub fn new(modulus: u64, start: u64, len: u64) -> Result<Self> {
        check_modulus(modulus)?;
        if start >= modulus || len == 0 || len > modulus {
            return Err(Error::BadInterval {
                modulus,
                start,
                len,
            });
        }
        Ok(IntervalZr {
            modulus,
            start,
            len,
        })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    #[inline]
    pub fn start(&self) -> u64 {
        self.start
    }

    #[inline]
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u64 {
        self.len
    }

    /// `x ∈ I  ⇔  (x - start) mod r < len`.
    #[inline]
    pub fn contains(&self, x: u64) -> bool {
        x < self.modulus && sub_mod(x, self.start, self.modulus) < self.len
    }

    /// Members in order, starting at `start` and wrapping past `r - 1`.
    pub fn members(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(move |k| {
            let v = self.start as u128 + k as u128;
            (v % self.modulus as u128) as u64
        })
    }
}

/// Collects [`IntervalZr::members`].
pub fn interval_members(interval: &IntervalZr) -> Vec<u64> {
    interval.members().collect()
}

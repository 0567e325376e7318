//! Splitting `b^-1 I` into the `iota(b)` intervals it is made of.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modmath::{coprime, IntervalZr};

/// Largest `iota(b)` we are willing to split into pieces.
const PIECE_GUARD: u64 = 1 << 24;

/// A possibly empty run `start, start + 1, ..., start + len - 1` in `Z_r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreimagePiece {
    pub start: u64,
    pub len: u64,
}

impl PreimagePiece {
    pub fn contains(&self, x: u64, r: u64) -> bool {
        x < r && (x + r - self.start) % r < self.len
    }

    pub fn members(&self, r: u64) -> impl Iterator<Item = u64> {
        let start = self.start;
        (0..self.len).map(move |k| ((start as u128 + k as u128) % r as u128) as u64)
    }
}

/// `b^-1 I` as `iota(b)` disjoint runs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    pub b: u64,
    pub r: u64,
    pub interval: IntervalZr,
    pub pieces: Vec<PreimagePiece>,
    /// `ceil(r / (n iota(b)))`.
    pub piece_bound: u64,
}

impl Decomposition {
    /// Index of the piece holding `x`, if any.
    pub fn piece_of(&self, x: u64) -> Option<usize> {
        self.pieces.iter().position(|p| p.contains(x, self.r))
    }
}

/// Writes `b^-1 I` as the union of `iota(b)` runs, where `iota(b) = b` is
/// the integer representative of `b` in `[r]`.
///
/// Piece `t` collects the `x` with `b x = y + t r` for some integer `y` in
/// `[start, start + len)`, so every piece has at most `ceil(len / b)` members.
/// `I` must have length `ceil(r / n)`.
pub fn decompose_preimage(b: u64, interval: &IntervalZr, n: u64) -> Result<Decomposition> {
    let r = interval.modulus();
    if b == 0 || b >= r || !coprime(b, r) {
        return Err(Error::NotInvertible { value: b, modulus: r });
    }
    if n == 0 || interval.len() != r.div_ceil(n) {
        return Err(Error::BadParams(format!(
            "interval length {} must equal ceil(r / n) = ceil({r} / {n})",
            interval.len()
        )));
    }
    if b > PIECE_GUARD {
        return Err(Error::EnumerationGuard {
            required: b as u128,
            guard: PIECE_GUARD as u128,
        });
    }
    let (s, len) = (interval.start() as u128, interval.len() as u128);
    let (beta, r128) = (b as u128, r as u128);
    let pieces = (0..beta)
        .map(|t| {
            let lo = (s + t * r128).div_ceil(beta);
            let hi = (s + len - 1 + t * r128) / beta;
            if hi < lo {
                PreimagePiece {
                    start: (lo % r128) as u64,
                    len: 0,
                }
            } else {
                PreimagePiece {
                    start: (lo % r128) as u64,
                    len: (hi - lo + 1) as u64,
                }
            }
        })
        .collect();
    Ok(Decomposition {
        b,
        r,
        interval: *interval,
        pieces,
        piece_bound: r.div_ceil(n.saturating_mul(b)),
    })
}

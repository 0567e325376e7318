//! Deterministic key-set generation.
//!
//! Structured variants (intervals, progressions, grid sumsets) are candidate
//! hard inputs for linear-style hashing; nothing here claims any of them is
//! worst case.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashfn::TrialRng;

/// A key set `X ⊂ [universe]`. Serializes as a flat JSON object, e.g.
/// `{"variant": "interval", "start": 0, "n": 5, "universe": 100}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeySetSpec {
    #[serde(flatten)]
    pub variant: KeySetVariant,
    /// Exclusive upper bound on keys.
    pub universe: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum KeySetVariant {
    Interval { start: u64, n: u64 },
    ArithmeticProgression { start: u64, stride: u64, n: u64 },
    /// `{i * stride + j : i < n1, j < n2}`.
    GridSumset { n1: u64, stride: u64, n2: u64 },
    UniformRandom { n: u64, seed: u64 },
    FromFile { path: PathBuf },
    /// Keys given inline.
    Explicit { keys: Vec<u64> },
}

impl KeySetSpec {
    pub fn new(variant: KeySetVariant, universe: u64) -> Self {
        KeySetSpec { variant, universe }
    }

    /// Key count, where it is known without touching the filesystem.
    pub fn n(&self) -> Option<u64> {
        match &self.variant {
            KeySetVariant::Interval { n, .. }
            | KeySetVariant::ArithmeticProgression { n, .. }
            | KeySetVariant::UniformRandom { n, .. } => Some(*n),
            KeySetVariant::GridSumset { n1, n2, .. } => n1.checked_mul(*n2),
            KeySetVariant::Explicit { keys } => Some(keys.len() as u64),
            KeySetVariant::FromFile { .. } => None,
        }
    }

    /// Short variant label.
    pub fn label(&self) -> &'static str {
        match &self.variant {
            KeySetVariant::Interval { .. } => "interval",
            KeySetVariant::ArithmeticProgression { .. } => "arithmetic-progression",
            KeySetVariant::GridSumset { .. } => "grid-sumset",
            KeySetVariant::UniformRandom { .. } => "uniform-random",
            KeySetVariant::FromFile { .. } => "from-file",
            KeySetVariant::Explicit { .. } => "explicit",
        }
    }

    /// Sorted, distinct keys, all below `universe`.
    pub fn generate(&self) -> Result<Vec<u64>> {
        let u = self.universe;
        let overflow = || Error::BadKeySet(format!("{self:?} does not fit in universe {u}"));
        let mut keys = match self.variant {
            KeySetVariant::Interval { start, n } => {
                let end = start.checked_add(n).ok_or_else(overflow)?;
                if end > u {
                    return Err(overflow());
                }
                (start..end).collect()
            }
            KeySetVariant::ArithmeticProgression { start, stride, n } => {
                if n > 1 && stride == 0 {
                    return Err(Error::BadKeySet("progression stride must be >= 1".into()));
                }
                let last = (n.saturating_sub(1))
                    .checked_mul(stride)
                    .and_then(|s| s.checked_add(start))
                    .ok_or_else(overflow)?;
                if n > 0 && last >= u {
                    return Err(overflow());
                }
                (0..n).map(|i| start + i * stride).collect()
            }
            KeySetVariant::GridSumset { n1, stride, n2 } => {
                if stride < n2 {
                    return Err(Error::BadKeySet(format!(
                        "grid sumset needs stride >= n2, got stride = {stride}, n2 = {n2}"
                    )));
                }
                if n1 > 0 && n2 > 0 {
                    let last = (n1 - 1)
                        .checked_mul(stride)
                        .and_then(|s| s.checked_add(n2 - 1))
                        .ok_or_else(overflow)?;
                    if last >= u {
                        return Err(overflow());
                    }
                }
                (0..n1)
                    .flat_map(|i| (0..n2).map(move |j| i * stride + j))
                    .collect()
            }
            KeySetVariant::UniformRandom { n, seed } => {
                if n > u {
                    return Err(overflow());
                }
                sample_without_replacement(n, u, seed)
            }
            KeySetVariant::FromFile { ref path } => within_universe(load_keys(path)?, u)?,
            KeySetVariant::Explicit { ref keys } => within_universe(keys.clone(), u)?,
        };
        keys.sort_unstable();
        if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateKey(w[0]));
        }
        Ok(keys)
    }
}

fn within_universe(keys: Vec<u64>, universe: u64) -> Result<Vec<u64>> {
    match keys.iter().find(|&&k| k >= universe) {
        Some(&k) => Err(Error::KeyOutOfUniverse {
            key: k,
            universe: universe as u128,
        }),
        None => Ok(keys),
    }
}

pub fn generate(spec: &KeySetSpec) -> Result<Vec<u64>> {
    spec.generate()
}

/// `n` distinct uniform draws from `[universe]`: hash-set rejection below half
/// density, a partial Fisher-Yates shuffle at or above it. Every `n`-subset is
/// equally likely under both.
fn sample_without_replacement(n: u64, universe: u64, seed: u64) -> Vec<u64> {
    let mut rng = TrialRng::seed_from_u64(seed);
    if n.saturating_mul(2) < universe {
        let mut seen = HashSet::with_capacity(n as usize);
        let mut out = Vec::with_capacity(n as usize);
        while (out.len() as u64) < n {
            let k = rng.random_range(0..universe);
            if seen.insert(k) {
                out.push(k);
            }
        }
        out
    } else {
        let mut pool: Vec<u64> = (0..universe).collect();
        for i in 0..n as usize {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        pool.truncate(n as usize);
        pool
    }
}

/// Parses newline-delimited decimal keys. `#` starts a comment; blank lines
/// are skipped. The result is sorted.
pub fn parse_keys(text: &str, origin: &Path) -> Result<Vec<u64>> {
    let mut keys = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let key = line.parse::<u64>().map_err(|e| Error::KeyFileParse {
            path: origin.to_path_buf(),
            line: i + 1,
            message: format!("{line:?}: {e}"),
        })?;
        keys.push(key);
    }
    keys.sort_unstable();
    if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateKey(w[0]));
    }
    Ok(keys)
}

pub fn load_keys(path: &Path) -> Result<Vec<u64>> {
    parse_keys(&fs::read_to_string(path)?, path)
}

pub fn save_keys(keys: &[u64], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_keys(keys, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_keys<W: Write>(keys: &[u64], out: &mut W) -> Result<()> {
    for k in keys {
        writeln!(out, "{k}")?;
    }
    Ok(())
}

//! Hashing with chaining: bucket occupancy and the longest chain.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashfn::BucketHash;

/// Per-bucket occupancy of a key set under one hash function.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadProfile {
    m: u64,
    counts: Vec<u64>,
    n: u64,
}

impl LoadProfile {
    /// Counts keys per bucket. Keys must be distinct.
    pub fn build<H: BucketHash + ?Sized>(keys: &[u64], h: &H) -> Result<Self> {
        ensure_distinct(keys)?;
        let m = h.buckets();
        let mut counts = vec![0u64; m as usize];
        for &x in keys {
            counts[h.bucket(x)? as usize] += 1;
        }
        Ok(LoadProfile {
            m,
            counts,
            n: keys.len() as u64,
        })
    }

    /// Builds from raw counts, e.g. a profile computed elsewhere.
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::BadParams("a profile needs at least one bucket".into()));
        }
        Ok(LoadProfile {
            m: counts.len() as u64,
            n: counts.iter().sum(),
            counts,
        })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `M(h, X)`: the size of the fullest bucket.
    pub fn max_load(&self) -> Result<u64> {
        if self.n == 0 {
            return Err(Error::EmptyKeySet);
        }
        Ok(self.counts.iter().copied().max().unwrap_or(0))
    }

    /// Smallest bucket index attaining the max load.
    pub fn argmax_bucket(&self) -> Result<u64> {
        let best = self.max_load()?;
        Ok(self.counts.iter().position(|&c| c == best).unwrap() as u64)
    }

    /// Writes `bucket_index,count` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bucket_index", "count"])?;
        for (i, c) in self.counts.iter().enumerate() {
            w.write_record([i.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn build_profile<H: BucketHash + ?Sized>(keys: &[u64], h: &H) -> Result<LoadProfile> {
    LoadProfile::build(keys, h)
}

pub fn max_load(profile: &LoadProfile) -> Result<u64> {
    profile.max_load()
}

/// Max load without materializing a [`LoadProfile`], reusing `scratch` as the
/// count array. Keys are assumed distinct.
pub(crate) fn max_load_into<H: BucketHash + ?Sized>(
    keys: &[u64],
    h: &H,
    scratch: &mut Vec<u32>,
) -> Result<u64> {
    if keys.is_empty() {
        return Err(Error::EmptyKeySet);
    }
    scratch.clear();
    scratch.resize(h.buckets() as usize, 0);
    let mut best = 0;
    for &x in keys {
        let slot = &mut scratch[h.bucket(x)? as usize];
        *slot += 1;
        best = best.max(*slot);
    }
    Ok(best as u64)
}

pub(crate) fn ensure_distinct(keys: &[u64]) -> Result<()> {
    if keys.windows(2).all(|w| w[0] < w[1]) {
        return Ok(());
    }
    let mut sorted = keys.to_vec();
    sorted.sort_unstable();
    match sorted.windows(2).find(|w| w[0] == w[1]) {
        Some(w) => Err(Error::DuplicateKey(w[0])),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted,
    AlreadyPresent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lookup {
    pub found: bool,
    /// Keys compared before the search stopped.
    pub probes: usize,
}

/// A chained hash table over integer keys. New keys go to the tail of their
/// bucket's chain; lookups scan the chain from the head.
#[derive(Clone, Debug)]
pub struct ChainedTable<H> {
    hash: H,
    chains: Vec<Vec<u64>>,
    len: usize,
}

impl<H: BucketHash> ChainedTable<H> {
    pub fn new(hash: H) -> Self {
        let chains = vec![Vec::new(); hash.buckets() as usize];
        ChainedTable {
            hash,
            chains,
            len: 0,
        }
    }

    pub fn hash(&self) -> &H {
        &self.hash
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn insert(&mut self, key: u64) -> Result<InsertOutcome> {
        let chain = &mut self.chains[self.hash.bucket(key)? as usize];
        if chain.contains(&key) {
            return Ok(InsertOutcome::AlreadyPresent);
        }
        chain.push(key);
        self.len += 1;
        Ok(InsertOutcome::Inserted)
    }

    pub fn lookup(&self, key: u64) -> Result<Lookup> {
        let chain = &self.chains[self.hash.bucket(key)? as usize];
        Ok(match chain.iter().position(|&k| k == key) {
            Some(i) => Lookup {
                found: true,
                probes: i + 1,
            },
            None => Lookup {
                found: false,
                probes: chain.len(),
            },
        })
    }

    pub fn chain_len(&self, bucket: u64) -> usize {
        self.chains[bucket as usize].len()
    }

    /// Longest chain.
    pub fn max_chain(&self) -> usize {
        self.chains.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn profile(&self) -> LoadProfile {
        LoadProfile {
            m: self.chains.len() as u64,
            counts: self.chains.iter().map(|c| c.len() as u64).collect(),
            n: self.len as u64,
        }
    }
}


#[cfg(test)]
mod proptests {
    use std::collections::{BTreeMap, BTreeSet};

    use proptest::prelude::*;

    use super::*;
    use crate::hashfn::LinearModPParams;
    use crate::modmath::next_prime_at_least;

    fn instance() -> impl Strategy<Value = (LinearModPParams, Vec<u64>)> {
        (2u64..5000, 1u64..64, any::<u64>(), any::<u64>()).prop_flat_map(|(p, m, a, b)| {
            let p = next_prime_at_least(p).unwrap();
            let m = m.min(p.get());
            let h = LinearModPParams::new(p, m, a % p.get(), b % p.get()).unwrap();
            let keys = proptest::collection::btree_set(0..p.get(), 1..=(p.get() as usize).min(200));
            (Just(h), keys.prop_map(|s: BTreeSet<u64>| s.into_iter().collect()))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn max_load_matches_group_by((h, keys) in instance()) {
            let mut groups: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
            for &k in &keys {
                groups.entry(((h.a() as u128 * k as u128 + h.b() as u128) % h.p().get() as u128 % h.m() as u128) as u64)
                    .or_default()
                    .push(k);
            }
            let oracle = groups.values().map(Vec::len).max().unwrap() as u64;
            let prof = build_profile(&keys, &h).unwrap();
            let m = prof.max_load().unwrap();
            prop_assert_eq!(m, oracle);
            prop_assert_eq!(prof.counts().iter().sum::<u64>(), keys.len() as u64);

            let n = keys.len() as u64;
            prop_assert!(1 <= m && m <= n);
            prop_assert!(m >= n.div_ceil(h.m()));

            let mut scratch = Vec::new();
            prop_assert_eq!(max_load_into(&keys, &h, &mut scratch).unwrap(), m);
        }

        #[test]
        fn worst_lookup_equals_max_load((h, keys) in instance()) {
            let mut t = ChainedTable::new(h);
            for &k in &keys {
                t.insert(k).unwrap();
            }
            let worst = keys.iter().map(|&k| t.lookup(k).unwrap().probes).max().unwrap();
            prop_assert_eq!(worst as u64, build_profile(&keys, &h).unwrap().max_load().unwrap());
        }
    }
}

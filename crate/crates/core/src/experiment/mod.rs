//! Monte Carlo and exhaustive measurement of the max load `M`.
//!
//! Trial `i` of a batch draws its hash function from
//! [`trial_rng`]`(base_seed, i)`, so a batch is the same on any number of
//! threads and in any execution order.

mod close_pairs;
mod exhaustive;
mod scaling;
pub mod stats;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use close_pairs::{
    close_pair_ceiling, close_pair_exact, close_pair_expectation, ClosePairEstimate, ClosePairExact,
};
pub use exhaustive::{exhaustive_expectation, exhaustive_expectation_nonzero_a, ExactDistribution};
pub use scaling::{
    normalizer, scaling_sweep, synthetic_rows, FamilyTemplate, KeySetTemplate, ScalingReport,
    ScalingRow,
};
pub use stats::{fit_power_law, wilson_interval, MeanEstimate, PowerFit, Z_95};

use crate::chaintable::{ensure_distinct, max_load_into};
use crate::error::{Error, Result};
use crate::hashfn::{
    check_shift_shape, sample_linear, sample_multiply_shift, trial_rng, FullyRandomTable,
    HashFamilyId, HashFunction, LinearModPParams, TrialRng,
};
use crate::keysets::KeySetSpec;
use crate::modmath::Prime64;
use crate::report::{ser_f64, ser_f64_pair};

/// A hash family together with its universe and table size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilyConfig {
    LinearModP { p: Prime64, m: u64 },
    MultiplyShift { r: u32, l: u32 },
    FullyRandom { m: u64 },
}

impl FamilyConfig {
    pub fn id(&self) -> HashFamilyId {
        match self {
            FamilyConfig::LinearModP { .. } => HashFamilyId::LinearModP,
            FamilyConfig::MultiplyShift { .. } => HashFamilyId::MultiplyShift,
            FamilyConfig::FullyRandom { .. } => HashFamilyId::FullyRandom,
        }
    }

    pub fn m(&self) -> u64 {
        match *self {
            FamilyConfig::LinearModP { m, .. } | FamilyConfig::FullyRandom { m } => m,
            FamilyConfig::MultiplyShift { l, .. } => 1 << l,
        }
    }

    /// Exclusive bound on keys the family accepts.
    pub fn universe(&self) -> u128 {
        match *self {
            FamilyConfig::LinearModP { p, .. } => p.get() as u128,
            FamilyConfig::MultiplyShift { r, .. } => 1u128 << r,
            FamilyConfig::FullyRandom { .. } => 1u128 << 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FamilyConfig::LinearModP { p, m } => LinearModPParams::new(p, m, 0, 0).map(|_| ()),
            FamilyConfig::MultiplyShift { r, l } => check_shift_shape(r, l),
            FamilyConfig::FullyRandom { m: 0 } => {
                Err(Error::BadParams("m must be >= 1".into()))
            }
            FamilyConfig::FullyRandom { .. } => Ok(()),
        }
    }

    /// Draws one member of the family. `keys` is only consulted by the fully
    /// random baseline, which tabulates a bucket per key.
    pub fn sample(&self, keys: &[u64], rng: &mut TrialRng) -> Result<HashFunction> {
        Ok(match *self {
            FamilyConfig::LinearModP { p, m } => HashFunction::Linear(sample_linear(p, m, rng)?),
            FamilyConfig::MultiplyShift { r, l } => {
                HashFunction::MultiplyShift(sample_multiply_shift(r, l, rng)?)
            }
            FamilyConfig::FullyRandom { m } => {
                HashFunction::FullyRandom(FullyRandomTable::build(keys, m, rng)?)
            }
        })
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TrialOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    /// Diagnostic override: replace the sampled multiplier of the linear
    /// family by this value (e.g. `a = 0`).
    pub force_a: Option<u64>,
}

/// Runs `f(i)` for `i in 0..count` on the requested number of threads,
/// returning results in index order.
pub(crate) fn run_indexed<T, F>(count: u64, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let job = || (0..count).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match threads {
        None => job(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::BadExperiment(format!("thread pool: {e}")))?
            .install(job),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub a: Option<u64>,
    pub b: Option<u64>,
    pub max_load: u64,
}

/// Max loads from `trials` independent draws of one family on one key set.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialBatch {
    pub family: FamilyConfig,
    pub spec: KeySetSpec,
    pub base_seed: u64,
    pub n: u64,
    pub records: Vec<TrialRecord>,
}

impl TrialBatch {
    pub fn trials(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn max_loads(&self) -> impl Iterator<Item = u64> + '_ {
        self.records.iter().map(|r| r.max_load)
    }

    pub fn mean(&self) -> Result<MeanEstimate> {
        MeanEstimate::from_samples(self.max_loads().map(|m| m as f64))
    }

    /// Empirical `Pr[M >= threshold]` with its Wilson interval.
    pub fn tail_at(&self, threshold: u64) -> ThresholdTail {
        let hits = self.max_loads().filter(|&m| m >= threshold).count() as u64;
        ThresholdTail::new(threshold, hits, self.trials())
    }

    /// Writes one `trial_index,a,b,M` row per trial. Absent seed fields are
    /// left empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trial_index", "a", "b", "M"])?;
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.trial_index.to_string(),
                opt(r.a),
                opt(r.b),
                r.max_load.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self, alphas: &[f64]) -> Result<TrialSummary> {
        Ok(TrialSummary {
            family: self.family,
            spec: self.spec.clone(),
            n: self.n,
            trials: self.trials(),
            base_seed: self.base_seed,
            mean: self.mean()?,
            tails: alphas
                .iter()
                .map(|&a| estimate_tail(self, a))
                .collect::<Result<_>>()?,
        })
    }
}

/// JSON summary of a batch.
#[derive(Clone, Debug, Serialize)]
pub struct TrialSummary {
    pub family: FamilyConfig,
    pub spec: KeySetSpec,
    pub n: u64,
    pub trials: u64,
    pub base_seed: u64,
    pub mean: MeanEstimate,
    pub tails: Vec<TailEstimate>,
}

/// Runs `trials` independent trials on the keys described by `spec`.
pub fn run_trials(
    family: &FamilyConfig,
    spec: &KeySetSpec,
    trials: u64,
    base_seed: u64,
    opts: &TrialOptions,
) -> Result<TrialBatch> {
    if spec.universe as u128 > family.universe() {
        return Err(Error::BadExperiment(format!(
            "key universe {} exceeds the {} universe {}",
            spec.universe,
            family.id(),
            family.universe()
        )));
    }
    let keys = spec.generate()?;
    run_trials_on_keys(family, spec.clone(), &keys, trials, base_seed, opts)
}

/// As [`run_trials`], with the keys already generated.
pub fn run_trials_on_keys(
    family: &FamilyConfig,
    spec: KeySetSpec,
    keys: &[u64],
    trials: u64,
    base_seed: u64,
    opts: &TrialOptions,
) -> Result<TrialBatch> {
    family.validate()?;
    if trials == 0 {
        return Err(Error::BadExperiment("need at least one trial".into()));
    }
    if keys.is_empty() {
        return Err(Error::EmptyKeySet);
    }
    ensure_distinct(keys)?;
    if let Some(&k) = keys.iter().find(|&&k| k as u128 >= family.universe()) {
        return Err(Error::KeyOutOfUniverse {
            key: k,
            universe: family.universe(),
        });
    }
    if let Some(a) = opts.force_a {
        match family {
            FamilyConfig::LinearModP { p, .. } if a < p.get() => {}
            _ => {
                return Err(Error::BadExperiment(format!(
                    "force_a = {a} only applies to the linear family with a < p"
                )))
            }
        }
    }

    let records = run_indexed(trials, opts.threads, |i| {
        let mut rng = trial_rng(base_seed, i);
        let mut h = family.sample(keys, &mut rng)?;
        if let (Some(a), HashFunction::Linear(lin)) = (opts.force_a, &h) {
            h = HashFunction::Linear(LinearModPParams::new(lin.p(), lin.m(), a, lin.b())?);
        }
        let mut scratch = Vec::new();
        let max_load = max_load_into(keys, &h, &mut scratch)?;
        let (a, b) = h.seed_fields();
        Ok(TrialRecord {
            trial_index: i,
            a,
            b,
            max_load,
        })
    })?;

    Ok(TrialBatch {
        family: *family,
        spec,
        base_seed,
        n: keys.len() as u64,
        records,
    })
}

/// `Pr[M >= threshold]` estimated from a batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTail {
    pub threshold: u64,
    pub hits: u64,
    pub trials: u64,
    #[serde(serialize_with = "ser_f64")]
    pub p_hat: f64,
    #[serde(serialize_with = "ser_f64_pair")]
    pub ci: [f64; 2],
}

impl ThresholdTail {
    fn new(threshold: u64, hits: u64, trials: u64) -> Self {
        let (lo, hi) = wilson_interval(hits, trials, Z_95);
        ThresholdTail {
            threshold,
            hits,
            trials,
            p_hat: hits as f64 / trials as f64,
            ci: [lo, hi],
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci[0] <= p && p <= self.ci[1]
    }
}

/// `Pr[M >= 4 alpha]` with a Wilson 95% interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    #[serde(serialize_with = "ser_f64")]
    pub alpha: f64,
    /// `ceil(4 alpha)`.
    pub threshold: u64,
    #[serde(serialize_with = "ser_f64")]
    pub p_hat: f64,
    #[serde(serialize_with = "ser_f64_pair")]
    pub ci: [f64; 2],
}

/// Estimates `Pr[M >= ceil(4 alpha)]`. `alpha` must be finite and at least 1;
/// values above `n / 4` are accepted and give `p_hat = 0` since `M <= n`.
pub fn estimate_tail(batch: &TrialBatch, alpha: f64) -> Result<TailEstimate> {
    if !alpha.is_finite() || alpha < 1.0 {
        return Err(Error::AlphaOutOfRange {
            alpha,
            reason: "must be a finite value >= 1".into(),
        });
    }
    let threshold = (4.0 * alpha).ceil() as u64;
    let t = batch.tail_at(threshold);
    Ok(TailEstimate {
        alpha,
        threshold,
        p_hat: t.p_hat,
        ci: t.ci,
    })
}

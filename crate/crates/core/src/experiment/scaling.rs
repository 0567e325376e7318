//! Sweeps of mean max load over a grid of `n`, with `m = n` in every row.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{fit_power_law, run_trials, FamilyConfig, PowerFit, TrialBatch, TrialOptions};
use crate::error::{Error, Result};
use crate::hashfn::{mix64, trial_seed};
use crate::keysets::{KeySetSpec, KeySetVariant};
use crate::modmath::next_prime_at_least;
use crate::report::{format_f64, ser_f64, ser_f64_pair};

/// A family whose table size is filled in per row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilyTemplate {
    /// Keys drawn from `[universe]`; `p` is the smallest prime `>= max(universe, n)`.
    LinearModP { universe: u64 },
    /// Keys drawn from `[2^r]`; `n` must be a power of two.
    MultiplyShift { r: u32 },
    FullyRandom { universe: u64 },
}

impl FamilyTemplate {
    /// The family at `m = n`, and the key universe to draw from.
    pub fn instantiate(&self, n: u64) -> Result<(FamilyConfig, u64)> {
        match *self {
            FamilyTemplate::LinearModP { universe } => {
                let p = next_prime_at_least(universe.max(n))?;
                Ok((FamilyConfig::LinearModP { p, m: n }, universe))
            }
            FamilyTemplate::MultiplyShift { r } => {
                if !n.is_power_of_two() || n < 2 {
                    return Err(Error::BadExperiment(format!(
                        "multiply-shift sweeps need n a power of two >= 2, got {n}"
                    )));
                }
                let family = FamilyConfig::MultiplyShift {
                    r,
                    l: n.trailing_zeros(),
                };
                family.validate()?;
                let universe = if r >= 64 { u64::MAX } else { 1 << r };
                Ok((family, universe))
            }
            FamilyTemplate::FullyRandom { universe } => {
                Ok((FamilyConfig::FullyRandom { m: n }, universe))
            }
        }
    }
}

/// A key-set shape whose size is filled in per row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "keyset", rename_all = "kebab-case")]
pub enum KeySetTemplate {
    /// `[0, n)`.
    Interval,
    /// Stride defaults to `(universe - 1) / n`.
    ArithmeticProgression { stride: Option<u64> },
    /// `n1 * n2 = n` with `n1` the largest divisor of `n` not above `sqrt(n)`;
    /// stride defaults to `(universe - n2) / n1`.
    GridSumset { stride: Option<u64> },
    /// Seed is mixed with `n`, so each row gets its own set.
    UniformRandom { seed: u64 },
}

impl KeySetTemplate {
    pub fn label(&self) -> &'static str {
        match self {
            KeySetTemplate::Interval => "interval",
            KeySetTemplate::ArithmeticProgression { .. } => "arithmetic-progression",
            KeySetTemplate::GridSumset { .. } => "grid-sumset",
            KeySetTemplate::UniformRandom { .. } => "uniform-random",
        }
    }

    pub fn instantiate(&self, n: u64, universe: u64) -> Result<KeySetSpec> {
        let variant = match *self {
            KeySetTemplate::Interval => KeySetVariant::Interval { start: 0, n },
            KeySetTemplate::ArithmeticProgression { stride } => KeySetVariant::ArithmeticProgression {
                start: 0,
                stride: stride.unwrap_or((universe - 1) / n).max(1),
                n,
            },
            KeySetTemplate::GridSumset { stride } => {
                let n1 = (1..=n)
                    .take_while(|d| d * d <= n)
                    .filter(|d| n % d == 0)
                    .last()
                    .unwrap_or(1);
                let n2 = n / n1;
                KeySetVariant::GridSumset {
                    n1,
                    stride: stride.unwrap_or(universe.saturating_sub(n2) / n1),
                    n2,
                }
            }
            KeySetTemplate::UniformRandom { seed } => KeySetVariant::UniformRandom {
                n,
                seed: mix64(seed ^ n),
            },
        };
        Ok(KeySetSpec::new(variant, universe))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: u64,
    pub m: u64,
    pub trials: u64,
    #[serde(serialize_with = "ser_f64")]
    pub mean_m: f64,
    #[serde(serialize_with = "ser_f64_pair")]
    pub ci: [f64; 2],
    /// `mean_m / (n ln n)^(1/3)`.
    #[serde(serialize_with = "ser_f64")]
    pub normalized: f64,
}

impl ScalingRow {
    pub fn new(n: u64, m: u64, trials: u64, mean_m: f64, ci: [f64; 2]) -> Self {
        ScalingRow {
            n,
            m,
            trials,
            mean_m,
            ci,
            normalized: mean_m / normalizer(n),
        }
    }
}

/// `(n ln n)^(1/3)`.
pub fn normalizer(n: u64) -> f64 {
    let n = n as f64;
    (n * n.ln()).cbrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub family: FamilyTemplate,
    pub keyset: KeySetTemplate,
    pub trials: u64,
    pub base_seed: u64,
    pub rows: Vec<ScalingRow>,
    pub fit: PowerFit,
    #[serde(skip)]
    pub batches: Vec<TrialBatch>,
}

impl ScalingReport {
    /// Fits `ln(mean_m)` against `ln(n)` over `rows`.
    pub fn fit_rows(rows: &[ScalingRow]) -> Result<PowerFit> {
        let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let ms: Vec<f64> = rows.iter().map(|r| r.mean_m).collect();
        fit_power_law(&ns, &ms)
    }

    /// `n,m,T,mean_M,ci_low,ci_high,normalized`.
    pub fn write_rows_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "m", "T", "mean_M", "ci_low", "ci_high", "normalized"])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.m.to_string(),
                r.trials.to_string(),
                format_f64(r.mean_m),
                format_f64(r.ci[0]),
                format_f64(r.ci[1]),
                format_f64(r.normalized),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Every trial of every row: `n,trial_index,a,b,M`.
    pub fn write_trials_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "trial_index", "a", "b", "M"])?;
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        for batch in &self.batches {
            for t in &batch.records {
                w.write_record([
                    batch.n.to_string(),
                    t.trial_index.to_string(),
                    opt(t.a),
                    opt(t.b),
                    t.max_load.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Rows with `mean_m = n^exponent` exactly, for checking the fit end to end.
pub fn synthetic_rows(n_grid: &[u64], exponent: f64) -> Vec<ScalingRow> {
    n_grid
        .iter()
        .map(|&n| {
            let v = (n as f64).powf(exponent);
            ScalingRow::new(n, n, 0, v, [v, v])
        })
        .collect()
}

/// Runs `trials` trials at each `n` in `n_grid` (with `m = n`) and fits the
/// growth exponent of the mean max load.
pub fn scaling_sweep(
    family: &FamilyTemplate,
    keyset: &KeySetTemplate,
    n_grid: &[u64],
    trials: u64,
    base_seed: u64,
    opts: &TrialOptions,
) -> Result<ScalingReport> {
    if n_grid.len() < 3 {
        return Err(Error::BadExperiment(format!(
            "a sweep needs at least 3 grid points, got {}",
            n_grid.len()
        )));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] < 2 {
        return Err(Error::BadExperiment(
            "n grid must be strictly ascending and start at n >= 2".into(),
        ));
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    let mut batches = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let (config, universe) = family.instantiate(n)?;
        let spec = keyset.instantiate(n, universe)?;
        let batch = run_trials(&config, &spec, trials, trial_seed(base_seed, n), opts)?;
        let mean = batch.mean()?;
        rows.push(ScalingRow::new(n, config.m(), trials, mean.mean, mean.ci));
        batches.push(batch);
    }
    let fit = ScalingReport::fit_rows(&rows)?;
    Ok(ScalingReport {
        family: *family,
        keyset: *keyset,
        trials,
        base_seed,
        rows,
        fit,
        batches,
    })
}

//! Instances of the close-pair counting lemma: hypothesis checks, the
//! decomposition bookkeeping, a generator and a seeded campaign.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::decompose::decompose_preimage;
use super::pairs::count_pairs_within;
use crate::error::{Error, Result};
use crate::experiment::run_indexed;
use crate::hashfn::trial_rng;
use crate::modmath::{coprime, inv_mod_coprime, mul_mod, primes_in_open_interval, IntervalZr, MAX_MODULUS};
use crate::report::ser_f64;

/// Retries for planting before a generator call gives up.
pub const PLANT_BUDGET: u32 = 100;

/// Largest `n` the generator will materialise.
const MAX_GENERATED_N: u64 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaInstance {
    pub r: u64,
    pub n: u64,
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "A")]
    pub a: Vec<u64>,
    #[serde(rename = "B")]
    pub b: Vec<u64>,
    /// `b -> [start, len]` of the interval `I_b`.
    pub intervals: BTreeMap<u64, [u64; 2]>,
}

impl LemmaInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// `max_norm` such that `norm <= max_norm  <=>  norm < r / (n M)`.
    fn close_limit(&self) -> u64 {
        let nm = self.n as u128 * self.m as u128;
        if nm == 0 {
            return self.r;
        }
        ((self.r as u128 - 1) / nm) as u64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PieceReport {
    pub start: u64,
    pub len: u64,
    /// `|A ∩ I_{b,j}|`.
    pub members: u64,
    /// Number of `b'` in `B` (including `b` itself) whose preimage meets this piece.
    pub delta: u64,
    /// `max(0, members - 1)`.
    pub tau: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub b: u64,
    pub iota: u64,
    pub piece_bound: u64,
    pub pieces: Vec<PieceReport>,
    pub sum_delta: u64,
    pub sum_tau: u64,
    /// `sum_delta < |B| + iota(b)`.
    pub delta_bound_holds: bool,
    /// `sum_tau >= 4M - iota(b)`.
    pub tau_bound_holds: bool,
    /// Every piece fits in `piece_bound`.
    pub sizes_hold: bool,
    /// `sum_j tau^2 / delta`.
    #[serde(serialize_with = "ser_f64")]
    pub weighted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaVerdict {
    pub hypotheses_hold: bool,
    /// Human-readable reasons the hypotheses fail.
    pub violations: Vec<String>,
    pub pair_count: u64,
    /// `M |B|`.
    pub required: u64,
    pub conclusion_holds: bool,
    /// Every decomposition satisfies its size, delta and tau bounds.
    pub bookkeeping_holds: bool,
    pub decompositions: Vec<DecompositionReport>,
    /// `sum_b sum_j tau^2 / delta`, a lower bound on `pair_count` when the
    /// hypotheses hold.
    #[serde(serialize_with = "ser_f64")]
    pub weighted_lower_bound: f64,
}

/// Checks the hypotheses of `inst`, counts its close pairs and reports the
/// per-`b` decomposition bookkeeping. Never fails: problems land in
/// `violations`.
pub fn check_lemma_instance(inst: &LemmaInstance) -> LemmaVerdict {
    let mut v = Vec::new();
    let (r, n, m) = (inst.r, inst.n, inst.m);
    let r_ok = (2..=MAX_MODULUS).contains(&r);
    if !r_ok {
        v.push(format!("modulus r = {r} out of range"));
    }
    if m.saturating_mul(4) > n || n > r {
        v.push(format!("need 4M <= n <= r, got M = {m}, n = {n}, r = {r}"));
    }

    let a_set: BTreeSet<u64> = inst.a.iter().copied().collect();
    if a_set.len() != inst.a.len() {
        v.push("A has repeated elements".into());
    }
    if inst.a.len() as u64 != n {
        v.push(format!("|A| = {} but n = {n}", inst.a.len()));
    }
    if let Some(x) = inst.a.iter().find(|&&x| x >= r) {
        v.push(format!("element {x} of A is not reduced mod r"));
    }

    let b_set: BTreeSet<u64> = inst.b.iter().copied().collect();
    if b_set.len() != inst.b.len() {
        v.push("B has repeated elements".into());
    }
    if inst.b.len() as u64 > m {
        v.push(format!("|B| = {} exceeds M = {m}", inst.b.len()));
    }
    for &b in &b_set {
        if b >= r {
            v.push(format!("b = {b} is not reduced mod r"));
        }
        if !(m < b && b < 2 * m) {
            v.push(format!("iota({b}) not in (M, 2M) = ({m}, {})", 2 * m));
        }
        if r_ok && !coprime(b, r) {
            v.push(format!("gcd({b}, r) != 1"));
        }
    }
    let bs: Vec<u64> = b_set.iter().copied().collect();
    for (i, &b) in bs.iter().enumerate() {
        for &c in &bs[i + 1..] {
            if !coprime(b, c) {
                v.push(format!("gcd({b}, {c}) != 1"));
            }
        }
    }
    if let Some(k) = inst.intervals.keys().find(|k| !b_set.contains(k)) {
        v.push(format!("interval given for {k}, which is not in B"));
    }

    // Intervals and their planted counts.
    let need_len = if n > 0 { r.div_ceil(n) } else { 0 };
    let mut usable: BTreeMap<u64, IntervalZr> = BTreeMap::new();
    for &b in &bs {
        let Some(&[start, len]) = inst.intervals.get(&b) else {
            v.push(format!("no interval given for b = {b}"));
            continue;
        };
        if len != need_len {
            v.push(format!("|I_{b}| = {len}, expected ceil(r / n) = {need_len}"));
        }
        let Ok(interval) = IntervalZr::new(r, start, len) else {
            v.push(format!("I_{b} = [{start}, +{len}) is not an interval of Z_r"));
            continue;
        };
        let hits = inst
            .a
            .iter()
            .filter(|&&x| x < r && interval.contains(mul_mod(b, x, r)))
            .count() as u64;
        if hits < 4 * m {
            v.push(format!("|I_{b} ∩ {b}A| = {hits} < 4M = {}", 4 * m));
        }
        if b < r && coprime(b, r) {
            usable.insert(b, interval);
        }
    }

    let pair_count = if r_ok && inst.a.iter().all(|&x| x < r) {
        count_pairs_within(&inst.a, r, inst.close_limit())
    } else {
        0
    };
    let required = m * inst.b.len() as u64;

    let decompositions: Vec<DecompositionReport> = usable
        .iter()
        .filter_map(|(&b, interval)| {
            let d = decompose_preimage(b, interval, n).ok()?;
            let pieces: Vec<PieceReport> = d
                .pieces
                .iter()
                .map(|p| {
                    let members = p.members(r).filter(|x| a_set.contains(x)).count() as u64;
                    let others = usable
                        .iter()
                        .filter(|(&c, other)| {
                            c != b && p.members(r).any(|x| other.contains(mul_mod(c, x, r)))
                        })
                        .count() as u64;
                    PieceReport {
                        start: p.start,
                        len: p.len,
                        members,
                        delta: 1 + others,
                        tau: members.saturating_sub(1),
                    }
                })
                .collect();
            let sum_delta: u64 = pieces.iter().map(|p| p.delta).sum();
            let sum_tau: u64 = pieces.iter().map(|p| p.tau).sum();
            let weighted = pieces
                .iter()
                .map(|p| (p.tau * p.tau) as f64 / p.delta as f64)
                .sum();
            Some(DecompositionReport {
                b,
                iota: b,
                piece_bound: d.piece_bound,
                sizes_hold: pieces.iter().all(|p| p.len <= d.piece_bound),
                delta_bound_holds: sum_delta < inst.b.len() as u64 + b,
                tau_bound_holds: sum_tau + b >= 4 * m,
                pieces,
                sum_delta,
                sum_tau,
                weighted,
            })
        })
        .collect();

    let bookkeeping_holds = decompositions.len() == bs.len()
        && decompositions
            .iter()
            .all(|d| d.sizes_hold && d.delta_bound_holds && d.tau_bound_holds);
    LemmaVerdict {
        hypotheses_hold: v.is_empty(),
        violations: v,
        pair_count,
        required,
        conclusion_holds: pair_count >= required,
        bookkeeping_holds,
        weighted_lower_bound: decompositions.iter().map(|d| d.weighted).sum(),
        decompositions,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Generated {
    Instance(LemmaInstance),
    Infeasible(String),
}

/// Builds an instance with `4M <= n <= r`: `B` is a random set of primes in
/// `(M, 2M)` coprime to `r`, and for each `b` a random interval `I_b` gets
/// `4M` planted elements of `bA`; `A` is then padded with uniform residues.
pub fn generate_lemma_instance<R: Rng + ?Sized>(r: u64, n: u64, m: u64, rng: &mut R) -> Result<Generated> {
    if !(2..=MAX_MODULUS).contains(&r) {
        return Err(Error::BadModulus(r));
    }
    if m == 0 || m.saturating_mul(4) > n || n > r {
        return Err(Error::BadParams(format!(
            "need 1 <= M and 4M <= n <= r, got M = {m}, n = {n}, r = {r}"
        )));
    }
    if n > MAX_GENERATED_N {
        return Err(Error::EnumerationGuard {
            required: n as u128,
            guard: MAX_GENERATED_N as u128,
        });
    }
    let candidates: Vec<u64> = primes_in_open_interval(m, 2 * m)
        .into_iter()
        .filter(|&q| q < r && coprime(q, r))
        .collect();
    if candidates.is_empty() {
        return Ok(Generated::Infeasible(format!(
            "no prime in ({m}, {}) is coprime to r = {r}",
            2 * m
        )));
    }
    let len = r.div_ceil(n);
    if len < 4 * m {
        return Ok(Generated::Infeasible(format!(
            "intervals of length ceil(r / n) = {len} cannot hold 4M = {} elements",
            4 * m
        )));
    }
    let cap = m.min(candidates.len() as u64).min(n / (4 * m));
    for _ in 0..PLANT_BUDGET {
        let k = rng.random_range(1..=cap) as usize;
        let mut b: Vec<u64> = index::sample(rng, candidates.len(), k)
            .into_iter()
            .map(|i| candidates[i])
            .collect();
        b.sort_unstable();
        let mut a = BTreeSet::new();
        let mut intervals = BTreeMap::new();
        for &q in &b {
            let start = rng.random_range(0..r);
            let inv = inv_mod_coprime(q, r)?;
            for off in index::sample(rng, len as usize, (4 * m) as usize) {
                let y = ((start as u128 + off as u128) % r as u128) as u64;
                a.insert(mul_mod(inv, y, r));
            }
            intervals.insert(q, [start, len]);
        }
        if a.len() as u64 > n {
            continue;
        }
        while (a.len() as u64) < n {
            a.insert(rng.random_range(0..r));
        }
        let inst = LemmaInstance {
            r,
            n,
            m,
            a: a.into_iter().collect(),
            b,
            intervals,
        };
        if check_lemma_instance(&inst).hypotheses_hold {
            return Ok(Generated::Instance(inst));
        }
    }
    Ok(Generated::Infeasible(format!(
        "planting failed {PLANT_BUDGET} times"
    )))
}

/// A violated instance together with the counts that condemn it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub r: u64,
    pub n: u64,
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "A")]
    pub a: Vec<u64>,
    #[serde(rename = "B")]
    pub b: Vec<u64>,
    pub intervals: BTreeMap<u64, [u64; 2]>,
    pub pair_count: u64,
    pub required: u64,
}

impl Counterexample {
    pub fn new(inst: &LemmaInstance, verdict: &LemmaVerdict) -> Self {
        Counterexample {
            r: inst.r,
            n: inst.n,
            m: inst.m,
            a: inst.a.clone(),
            b: inst.b.clone(),
            intervals: inst.intervals.clone(),
            pair_count: verdict.pair_count,
            required: verdict.required,
        }
    }

    pub fn instance(&self) -> LemmaInstance {
        LemmaInstance {
            r: self.r,
            n: self.n,
            m: self.m,
            a: self.a.clone(),
            b: self.b.clone(),
            intervals: self.intervals.clone(),
        }
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignConfig {
    /// Instances to check (generator misses do not count).
    pub instances: u64,
    pub r_max: u64,
    pub m_min: u64,
    pub m_max: u64,
    pub base_seed: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            instances: 1000,
            r_max: 10_000,
            m_min: 2,
            m_max: 8,
            base_seed: 0x1e44_a001,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CampaignReport {
    pub config: CampaignConfig,
    /// Generator calls made, in index order, up to the last one used.
    pub attempts: u64,
    pub infeasible: u64,
    pub checked: u64,
    /// Instances whose hypotheses hold but whose pair count falls short.
    pub violations: Vec<Counterexample>,
    /// Instances whose decomposition bounds fail.
    pub bookkeeping_failures: Vec<Counterexample>,
    /// Smallest `pair_count / required` seen.
    #[serde(serialize_with = "ser_f64")]
    pub min_ratio: f64,
}

impl CampaignReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.bookkeeping_failures.is_empty() && self.checked >= self.config.instances
    }
}

enum Outcome {
    Infeasible,
    Checked {
        inst: LemmaInstance,
        verdict: LemmaVerdict,
    },
}

/// Parameters for attempt `i`: `M` uniform in `[m_min, m_max]`, then `n` in
/// `[4M, r_max / (4M)]` and `r` in `[4Mn, r_max]`, so intervals can hold the
/// planted elements.
fn attempt(config: &CampaignConfig, i: u64) -> Result<Outcome> {
    let mut rng = trial_rng(config.base_seed, i);
    let m = rng.random_range(config.m_min..=config.m_max);
    let n = rng.random_range(4 * m..=config.r_max / (4 * m));
    let r = rng.random_range(4 * m * n..=config.r_max);
    Ok(match generate_lemma_instance(r, n, m, &mut rng)? {
        Generated::Infeasible(_) => Outcome::Infeasible,
        Generated::Instance(inst) => {
            let verdict = check_lemma_instance(&inst);
            Outcome::Checked { inst, verdict }
        }
    })
}

/// Generates and checks instances until `config.instances` have been checked.
/// Attempts run in parallel chunks; results are consumed in index order, so
/// the report does not depend on `threads`.
pub fn run_lemma_campaign(config: &CampaignConfig, threads: Option<usize>) -> Result<CampaignReport> {
    if config.m_min < 2 || config.m_min > config.m_max {
        return Err(Error::BadExperiment(format!(
            "need 2 <= m_min <= m_max, got [{}, {}]",
            config.m_min, config.m_max
        )));
    }
    if config.r_max < 16 * config.m_max * config.m_max || config.r_max > MAX_MODULUS {
        return Err(Error::BadExperiment(format!(
            "r_max = {} must lie in [16 m_max^2, 2^63 - 1]",
            config.r_max
        )));
    }
    const CHUNK: u64 = 512;
    let max_attempts = config.instances.saturating_mul(50).max(CHUNK);
    let mut report = CampaignReport {
        config: config.clone(),
        attempts: 0,
        infeasible: 0,
        checked: 0,
        violations: Vec::new(),
        bookkeeping_failures: Vec::new(),
        min_ratio: f64::INFINITY,
    };
    let mut next = 0;
    while report.checked < config.instances && next < max_attempts {
        let outcomes = run_indexed(CHUNK, threads, |k| attempt(config, next + k))?;
        next += CHUNK;
        for outcome in outcomes {
            if report.checked >= config.instances {
                break;
            }
            report.attempts += 1;
            match outcome {
                Outcome::Infeasible => report.infeasible += 1,
                Outcome::Checked { inst, verdict } => {
                    report.checked += 1;
                    if verdict.hypotheses_hold && !verdict.conclusion_holds {
                        report.violations.push(Counterexample::new(&inst, &verdict));
                    }
                    if !verdict.bookkeeping_holds {
                        report.bookkeeping_failures.push(Counterexample::new(&inst, &verdict));
                    }
                    if verdict.required > 0 {
                        let ratio = verdict.pair_count as f64 / verdict.required as f64;
                        report.min_ratio = report.min_ratio.min(ratio);
                    }
                }
            }
        }
    }
    Ok(report)
}

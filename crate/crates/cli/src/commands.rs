use std::fs;

use maxload_core::experiment::{
    exhaustive_expectation, exhaustive_expectation_nonzero_a, estimate_tail, run_trials, scaling_sweep,
    synthetic_rows, FamilyConfig, FamilyTemplate, KeySetTemplate, MeanEstimate, ScalingReport, TailEstimate,
    ThresholdTail, TrialOptions,
};
use maxload_core::hashfn::{linear_eval, multiply_shift_eval, LinearModPParams, MultiplyShiftParams};
use maxload_core::keysets::{write_keys, KeySetSpec, KeySetVariant};
use maxload_core::lemma_oracle::{check_lemma_instance, run_lemma_campaign, CampaignConfig, Counterexample, LemmaInstance};
use maxload_core::report::{format_f64, ser_f64};
use maxload_core::Prime64;
use serde::Serialize;

use crate::args::{
    EvalArgs, ExhaustiveArgs, FamilyArgs, FamilyKind, Format, GenkeysArgs, KeyArgs, KeysetKind, LemmaArgs,
    ScalingArgs, TrialArgs,
};
use crate::error::CliError;
use crate::output::{emit, write_text, Meta, Report};

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn need<T>(v: Option<T>, family: &str, flag: &str) -> Result<T> {
    v.ok_or_else(|| usage(format!("--family {family} needs --{flag}")))
}

fn reject<T>(v: Option<T>, family: &str, flag: &str) -> Result<()> {
    match v {
        Some(_) => Err(usage(format!("--{flag} does not apply to --family {family}"))),
        None => Ok(()),
    }
}

fn check_threads(threads: Option<usize>) -> Result<()> {
    match threads {
        Some(0) => Err(usage("--threads must be at least 1")),
        _ => Ok(()),
    }
}

fn family_config(args: &FamilyArgs) -> Result<FamilyConfig> {
    let config = match args.family {
        FamilyKind::Linear => {
            reject(args.r, "linear", "r")?;
            reject(args.l, "linear", "l")?;
            let p = need(args.p, "linear", "p")?;
            FamilyConfig::LinearModP {
                p: Prime64::new(p)?,
                m: need(args.m, "linear", "m")?,
            }
        }
        FamilyKind::Ms => {
            reject(args.p, "ms", "p")?;
            reject(args.m, "ms", "m (use --l; m = 2^l)")?;
            FamilyConfig::MultiplyShift {
                r: need(args.r, "ms", "r")?,
                l: need(args.l, "ms", "l")?,
            }
        }
        FamilyKind::Random => {
            reject(args.p, "random", "p")?;
            reject(args.r, "random", "r")?;
            reject(args.l, "random", "l")?;
            FamilyConfig::FullyRandom {
                m: need(args.m, "random", "m")?,
            }
        }
    };
    config.validate()?;
    Ok(config)
}

/// Resolves the key-set flags against a family universe, noting defaults.
fn key_spec(args: &KeyArgs, family_universe: u128, meta: &mut Meta) -> Result<KeySetSpec> {
    let cap = family_universe.min(u64::MAX as u128) as u64;
    let universe = match args.universe {
        Some(u) if u as u128 > family_universe => {
            return Err(usage(format!(
                "--universe {u} exceeds the family universe {family_universe}"
            )))
        }
        Some(0) => return Err(usage("--universe must be at least 1")),
        Some(u) => u,
        None => {
            meta.choice(format!("key universe defaults to the family universe {cap}"));
            cap
        }
    };
    if let Some(keys) = &args.keys {
        return Ok(KeySetSpec::new(KeySetVariant::Explicit { keys: keys.clone() }, universe));
    }
    if let Some(path) = &args.keys_file {
        return Ok(KeySetSpec::new(KeySetVariant::FromFile { path: path.clone() }, universe));
    }
    if args.keyset == KeysetKind::Grid {
        if let (Some(n1), Some(n2)) = (args.n1, args.n2) {
            if args.n.is_some_and(|n| Some(n) != n1.checked_mul(n2)) {
                return Err(usage("--n must equal n1 * n2 for a grid"));
            }
            let stride = match args.stride {
                Some(s) => s,
                None => {
                    let s = universe.saturating_sub(n2) / n1.max(1);
                    meta.choice(format!("grid stride defaults to (universe - n2) / n1 = {s}"));
                    s
                }
            };
            return Ok(KeySetSpec::new(KeySetVariant::GridSumset { n1, stride, n2 }, universe));
        }
    }
    let n = args
        .n
        .ok_or_else(|| usage("give --n (or --keys / --keys-file, or --n1 and --n2 for a grid)"))?;
    if n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let variant = match args.keyset {
        KeysetKind::Interval => KeySetVariant::Interval { start: args.start, n },
        KeysetKind::Ap => {
            let stride = match args.stride {
                Some(s) => s,
                None => {
                    let s = (universe.saturating_sub(args.start + 1) / n).max(1);
                    meta.choice(format!("progression stride defaults to (universe - start - 1) / n = {s}"));
                    s
                }
            };
            KeySetVariant::ArithmeticProgression {
                start: args.start,
                stride,
                n,
            }
        }
        KeysetKind::Grid => {
            let spec = KeySetTemplate::GridSumset { stride: args.stride }.instantiate(n, universe)?;
            if let KeySetVariant::GridSumset { n1, stride, n2 } = spec.variant {
                meta.choice(format!("grid shape {n1} x {n2} with stride {stride} derived from n"));
            }
            spec.variant
        }
        KeysetKind::Uniform => KeySetVariant::UniformRandom { n, seed: args.key_seed },
    };
    Ok(KeySetSpec::new(variant, universe))
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let bucket = match args.family {
        FamilyKind::Linear => {
            let p = Prime64::new(need(args.p, "linear", "p")?)?;
            let params = LinearModPParams::new(p, need(args.m, "linear", "m")?, args.a, args.b)?;
            linear_eval(&params, args.x)?
        }
        FamilyKind::Ms => {
            let params = MultiplyShiftParams::new(need(args.r, "ms", "r")?, need(args.l, "ms", "l")?, args.a)?;
            multiply_shift_eval(&params, args.x)?
        }
        FamilyKind::Random => {
            return Err(usage("eval needs a seeded family (linear or ms); random has no closed form"))
        }
    };
    write_text(&format!("{bucket}\n"), None)
}

fn trial_setup(args: &TrialArgs, command: &'static str) -> Result<(FamilyConfig, KeySetSpec, Meta, TrialOptions)> {
    check_threads(args.common.threads)?;
    let family = family_config(&args.family)?;
    let mut meta = Meta::new(command, args.common.threads).seed("base_seed", args.seed);
    if args.keys.keyset == KeysetKind::Uniform && args.keys.keys.is_none() && args.keys.keys_file.is_none() {
        meta = meta.seed("key_seed", args.keys.key_seed);
    }
    let spec = key_spec(&args.keys, family.universe(), &mut meta)?;
    let opts = TrialOptions {
        threads: args.common.threads,
        force_a: args.force_a,
    };
    Ok((family, spec, meta, opts))
}

pub fn maxload(args: &TrialArgs) -> Result<()> {
    let (family, spec, meta, opts) = trial_setup(args, "maxload")?;
    let batch = run_trials(&family, &spec, args.trials, args.seed, &opts)?;
    let report = match args.common.format {
        Format::Json => Report::json(&meta, args, &batch.summary(&args.alpha)?)?,
        Format::Csv => {
            let mut body = Vec::new();
            batch.write_csv(&mut body)?;
            Report::csv(&meta, args, body)?
        }
    };
    emit(&report, &args.common)
}

#[derive(Serialize)]
struct TailResult {
    n: u64,
    trials: u64,
    mean: MeanEstimate,
    tails: Vec<TailEstimate>,
    /// `Pr[M >= t]` for every `t` in `1..=n`.
    thresholds: Vec<ThresholdTail>,
}

pub fn tail(args: &TrialArgs) -> Result<()> {
    let (family, spec, meta, opts) = trial_setup(args, "tail")?;
    let batch = run_trials(&family, &spec, args.trials, args.seed, &opts)?;
    let tails = args
        .alpha
        .iter()
        .map(|&a| estimate_tail(&batch, a))
        .collect::<maxload_core::Result<Vec<_>>>()?;
    let report = match args.common.format {
        Format::Json => {
            let result = TailResult {
                n: batch.n,
                trials: batch.trials(),
                mean: batch.mean()?,
                tails,
                thresholds: (1..=batch.n).map(|t| batch.tail_at(t)).collect(),
            };
            Report::json(&meta, args, &result)?
        }
        Format::Csv => {
            let mut body = String::from("alpha,threshold,p_hat,ci_low,ci_high\n");
            for t in &tails {
                body += &format!(
                    "{},{},{},{},{}\n",
                    format_f64(t.alpha),
                    t.threshold,
                    format_f64(t.p_hat),
                    format_f64(t.ci[0]),
                    format_f64(t.ci[1])
                );
            }
            Report::csv(&meta, args, body.into_bytes())?
        }
    };
    emit(&report, &args.common)
}

pub fn scaling(args: &ScalingArgs) -> Result<()> {
    check_threads(args.common.threads)?;
    let family = match args.family {
        FamilyKind::Linear => FamilyTemplate::LinearModP { universe: args.universe },
        FamilyKind::Ms => FamilyTemplate::MultiplyShift { r: args.r },
        FamilyKind::Random => FamilyTemplate::FullyRandom { universe: args.universe },
    };
    let keyset = match args.keyset {
        KeysetKind::Interval => KeySetTemplate::Interval,
        KeysetKind::Ap => KeySetTemplate::ArithmeticProgression { stride: None },
        KeysetKind::Grid => KeySetTemplate::GridSumset { stride: None },
        KeysetKind::Uniform => KeySetTemplate::UniformRandom { seed: args.key_seed },
    };
    let mut meta = Meta::new("scaling", args.common.threads).seed("base_seed", args.seed);
    if args.keyset == KeysetKind::Uniform {
        meta = meta.seed("key_seed", args.key_seed);
    }
    meta.choice("row seed for n is derived from (seed, n); m = n in every row");
    let report = if args.synthetic_selftest {
        meta.choice(format!("synthetic rows mean = n^{}", format_f64(args.exponent)));
        let rows = synthetic_rows(&args.grid, args.exponent);
        let fit = ScalingReport::fit_rows(&rows)?;
        ScalingReport {
            family,
            keyset,
            trials: 0,
            base_seed: args.seed,
            rows,
            fit,
            batches: Vec::new(),
        }
    } else {
        let opts = TrialOptions {
            threads: args.common.threads,
            force_a: None,
        };
        scaling_sweep(&family, &keyset, &args.grid, args.trials, args.seed, &opts)?
    };
    if let Some(path) = &args.trials_csv {
        let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        report.write_trials_csv(file)?;
    }
    let out = match args.common.format {
        Format::Json => Report::json(&meta, args, &report)?,
        Format::Csv => {
            let mut body = Vec::new();
            report.write_rows_csv(&mut body)?;
            Report::csv(&meta, args, body)?
        }
    };
    emit(&out, &args.common)
}

#[derive(Serialize)]
struct ExhaustiveResult {
    p: u64,
    m: u64,
    n: u64,
    nonzero_a: bool,
    seeds: u64,
    mean_exact: String,
    #[serde(serialize_with = "ser_f64")]
    mean: f64,
    #[serde(serialize_with = "ser_f64")]
    variance: f64,
    distribution: Vec<MassRow>,
}

#[derive(Serialize)]
struct MassRow {
    max_load: u64,
    seeds: u64,
    #[serde(serialize_with = "ser_f64")]
    probability: f64,
}

pub fn exhaustive(args: &ExhaustiveArgs) -> Result<()> {
    check_threads(args.common.threads)?;
    let p = Prime64::new(args.p)?;
    let mut meta = Meta::new("exhaustive", args.common.threads);
    let spec = key_spec(&args.keys, args.p as u128, &mut meta)?;
    let keys = spec.generate()?;
    let threads = args.common.threads;
    let dist = if args.nonzero_a {
        exhaustive_expectation_nonzero_a(p, args.m, &keys, args.guard, threads)?
    } else {
        exhaustive_expectation(p, args.m, &keys, args.guard, threads)?
    };
    let summary = dist.summary();
    let rows: Vec<MassRow> = summary
        .distribution
        .iter()
        .map(|pt| MassRow {
            max_load: pt.max_load,
            seeds: pt.seeds,
            probability: pt.seeds as f64 / dist.seeds as f64,
        })
        .collect();
    let report = match args.common.format {
        Format::Json => {
            let result = ExhaustiveResult {
                p: dist.p,
                m: dist.m,
                n: dist.n,
                nonzero_a: args.nonzero_a,
                seeds: dist.seeds,
                mean_exact: summary.mean_exact.clone(),
                mean: summary.mean,
                variance: dist.variance(),
                distribution: rows,
            };
            Report::json(&meta, args, &result)?
        }
        Format::Csv => {
            let mut body = String::from("M,seeds,probability\n");
            for r in &rows {
                body += &format!("{},{},{}\n", r.max_load, r.seeds, format_f64(r.probability));
            }
            Report::csv(&meta, args, body.into_bytes())?
        }
    };
    emit(&report, &args.common)
}

fn dump(args: &LemmaArgs, name: &str, cx: &Counterexample) -> Result<()> {
    fs::create_dir_all(&args.dump_dir).map_err(|e| CliError::io(&args.dump_dir, e))?;
    let path = args.dump_dir.join(name);
    let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    cx.write_json(file)?;
    eprintln!("counterexample written to {}", path.display());
    Ok(())
}

pub fn lemma_check(args: &LemmaArgs) -> Result<()> {
    check_threads(args.common.threads)?;
    if let Some(path) = &args.instance {
        let inst = LemmaInstance::load(path)?;
        let verdict = check_lemma_instance(&inst);
        let meta = Meta::new("lemma-check", args.common.threads);
        let report = match args.common.format {
            Format::Json => Report::json(&meta, args, &verdict)?,
            Format::Csv => {
                let body = format!(
                    "hypotheses_hold,pair_count,required,conclusion_holds,bookkeeping_holds\n{},{},{},{},{}\n",
                    verdict.hypotheses_hold,
                    verdict.pair_count,
                    verdict.required,
                    verdict.conclusion_holds,
                    verdict.bookkeeping_holds
                );
                Report::csv(&meta, args, body.into_bytes())?
            }
        };
        emit(&report, &args.common)?;
        if !verdict.hypotheses_hold {
            eprintln!("hypotheses do not hold: {}", verdict.violations.join("; "));
        } else if !verdict.conclusion_holds {
            dump(args, "lemma-counterexample.json", &Counterexample::new(&inst, &verdict))?;
            return Err(CliError::Violation(format!(
                "{} close pairs, {} required",
                verdict.pair_count, verdict.required
            )));
        }
        return Ok(());
    }

    let config = CampaignConfig {
        instances: args.instances,
        r_max: args.r_max,
        m_min: args.m_min,
        m_max: args.m_max,
        base_seed: args.seed,
    };
    let campaign = run_lemma_campaign(&config, args.common.threads)?;
    let mut meta = Meta::new("lemma-check", args.common.threads).seed("base_seed", args.seed);
    meta.choice("instance parameters: M uniform in [m_min, m_max], n in [4M, r_max / 4M], r in [4Mn, r_max]");
    let report = match args.common.format {
        Format::Json => Report::json(&meta, args, &campaign)?,
        Format::Csv => {
            let body = format!(
                "checked,infeasible,attempts,violations,bookkeeping_failures,min_ratio\n{},{},{},{},{},{}\n",
                campaign.checked,
                campaign.infeasible,
                campaign.attempts,
                campaign.violations.len(),
                campaign.bookkeeping_failures.len(),
                format_f64(campaign.min_ratio)
            );
            Report::csv(&meta, args, body.into_bytes())?
        }
    };
    emit(&report, &args.common)?;
    for (k, cx) in campaign.violations.iter().enumerate() {
        dump(args, &format!("lemma-counterexample-{k}.json"), cx)?;
    }
    for (k, cx) in campaign.bookkeeping_failures.iter().enumerate() {
        dump(args, &format!("lemma-bookkeeping-{k}.json"), cx)?;
    }
    if !campaign.violations.is_empty() || !campaign.bookkeeping_failures.is_empty() {
        return Err(CliError::Violation(format!(
            "{} counterexamples and {} bookkeeping failures in {} instances",
            campaign.violations.len(),
            campaign.bookkeeping_failures.len(),
            campaign.checked
        )));
    }
    if campaign.checked < config.instances {
        eprintln!(
            "warning: only {} of {} instances could be generated",
            campaign.checked, config.instances
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct KeyList<'a> {
    n: usize,
    keys: &'a [u64],
}

pub fn genkeys(args: &GenkeysArgs) -> Result<()> {
    let mut meta = Meta::new("genkeys", None);
    if args.keys.keyset == KeysetKind::Uniform {
        meta = meta.seed("key_seed", args.keys.key_seed);
    }
    let spec = key_spec(&args.keys, u64::MAX as u128, &mut meta)?;
    let keys = spec.generate()?;
    let report = match args.format {
        Format::Json => Report::json(&meta, args, &KeyList { n: keys.len(), keys: &keys })?,
        Format::Csv => {
            let mut body = Vec::new();
            write_keys(&keys, &mut body)?;
            Report::csv(&meta, args, body)?
        }
    };
    write_text(&report.text, args.output.as_deref())
}

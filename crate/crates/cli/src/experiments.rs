//! Reproducible Monte Carlo runs of the order-based recovery.
//!
//! Trial `i` of a run with master seed `s` is driven entirely by
//! `derive_seed(s, i)`, so records do not depend on how trials are spread
//! over threads.

use std::time::Instant;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use order2phi::census::{format_ratio, SuccessProfile};
use order2phi::modulus::RNG_ALGORITHM;
use order2phi::recovery::RecoveryOutcome;
use order2phi::{
    construct_semiprime, exact_success_probability, generate_semiprime, recover_phi_from_order,
    sample_order, OrderSample, Semiprime,
};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of item `index` under `master`: SplitMix64 output number `index + 1`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModulusMode {
    Generate,
    Construct,
}

pub fn make_modulus(mode: ModulusMode, bits: u32, seed: u64) -> order2phi::Result<Semiprime> {
    match mode {
        ModulusMode::Generate => generate_semiprime(bits, seed),
        ModulusMode::Construct => construct_semiprime(bits, seed),
    }
}

#[derive(Debug, Clone)]
pub struct MonteCarloConfig {
    pub bits: u32,
    pub trials: u64,
    pub seed: u64,
    pub mode: ModulusMode,
    /// Reuse the modulus built from the master seed for every trial.
    pub fixed: bool,
    pub parallelism: usize,
    /// Compute the exact per-modulus success probability from the census.
    pub exact: bool,
    /// Include p, q and the group structure in records.
    pub disclose: bool,
    /// Record wall time; makes output run-dependent.
    pub timings: bool,
}

impl MonteCarloConfig {
    pub fn new(bits: u32, trials: u64, seed: u64) -> Self {
        MonteCarloConfig {
            bits,
            trials,
            seed,
            mode: ModulusMode::Generate,
            fixed: false,
            parallelism: 1,
            exact: true,
            disclose: false,
            timings: false,
        }
    }

    pub fn experiment_id(&self) -> String {
        format!(
            "montecarlo-{}-{}b-{}t-s{}{}",
            match self.mode {
                ModulusMode::Generate => "gen",
                ModulusMode::Construct => "con",
            },
            self.bits,
            self.trials,
            self.seed,
            if self.fixed { "-fixed" } else { "" }
        )
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum ModulusDescriptor {
    Public {
        #[serde(with = "order2phi::dec::display")]
        bits: u32,
        #[serde(with = "order2phi::dec")]
        n: BigUint,
    },
    Disclosed(Box<Semiprime>),
}

/// One trial: modulus, oracle output, and the recovery outcome.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub experiment_id: String,
    #[serde(with = "order2phi::dec::display")]
    pub seed: u64,
    #[serde(with = "order2phi::dec::display")]
    pub trial: u64,
    #[serde(with = "order2phi::dec::display")]
    pub trial_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulus: Option<ModulusDescriptor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OrderSample>,
    #[serde(with = "order2phi::dec::display")]
    pub lucky_factor_events: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<RecoveryOutcome>,
    /// Success that does not match the hidden totient. Must never happen.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub unsound: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_probability: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", with = "order2phi::dec::option_display")]
    pub wall_time_ns: Option<u64>,
}

impl ExperimentRecord {
    pub fn succeeded(&self) -> bool {
        self.outcome.as_ref().is_some_and(RecoveryOutcome::is_success)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub experiment_id: String,
    pub rng: &'static str,
    #[serde(with = "order2phi::dec::display")]
    pub seed: u64,
    pub trials: u64,
    pub successes: u64,
    pub failures: u64,
    pub lucky_factor_events: u64,
    pub trial_errors: u64,
    pub unsound_successes: u64,
    pub empirical_rate: f64,
    /// Exact success probability of the fixed modulus, `"num/den"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_probability: Option<String>,
    /// Mean of the per-trial exact success probabilities.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_rate: Option<f64>,
    /// `(successes - sum p_i) / sqrt(sum p_i (1 - p_i))`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_recover_ns: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct MonteCarloRun {
    pub records: Vec<ExperimentRecord>,
    pub summary: RunSummary,
}

impl MonteCarloRun {
    /// JSON Lines: one record per trial, then the summary.
    pub fn to_jsonl(&self, include_records: bool) -> String {
        let mut out = String::new();
        if include_records {
            for r in &self.records {
                out.push_str(&serde_json::to_string(r).expect("record serializes"));
                out.push('\n');
            }
        }
        out.push_str(&serde_json::to_string(&self.summary).expect("summary serializes"));
        out.push('\n');
        out
    }
}

struct Trial {
    record: ExperimentRecord,
    probability: Option<Ratio<BigUint>>,
}

fn exact_profile(s: &Semiprime) -> Option<SuccessProfile> {
    exact_success_probability(s).ok()
}

fn run_trial(
    cfg: &MonteCarloConfig,
    fixed: Option<&(Semiprime, Option<SuccessProfile>)>,
    trial: u64,
) -> Trial {
    let trial_seed = derive_seed(cfg.seed, trial);
    let mut record = ExperimentRecord {
        experiment_id: cfg.experiment_id(),
        seed: cfg.seed,
        trial,
        trial_seed,
        modulus: None,
        oracle: None,
        lucky_factor_events: 0,
        outcome: None,
        unsound: false,
        exact_probability: None,
        error: None,
        wall_time_ns: None,
    };
    let owned;
    let (s, profile) = match fixed {
        Some((s, profile)) => (s, profile.as_ref().map(|p| p.probability.clone())),
        None => match make_modulus(cfg.mode, cfg.bits, trial_seed) {
            Ok(s) => {
                owned = s;
                let probability = cfg
                    .exact
                    .then(|| exact_profile(&owned))
                    .flatten()
                    .map(|p| p.probability);
                (&owned, probability)
            }
            Err(e) => {
                record.error = Some(e.to_string());
                return Trial {
                    record,
                    probability: None,
                };
            }
        },
    };
    record.modulus = Some(if cfg.disclose {
        ModulusDescriptor::Disclosed(Box::new(s.clone()))
    } else {
        ModulusDescriptor::Public {
            bits: s.bits(),
            n: s.n().clone(),
        }
    });
    if fixed.is_none() {
        record.exact_probability = profile.as_ref().map(format_ratio);
    }

    let mut rng = ChaCha20Rng::seed_from_u64(trial_seed);
    rng.set_stream(1);
    let draw = sample_order(s, &mut rng);
    record.lucky_factor_events = draw.lucky_factors.len() as u64;

    let start = Instant::now();
    let outcome = recover_phi_from_order(s.n(), &draw.sample.order);
    let elapsed = start.elapsed();
    if cfg.timings {
        record.wall_time_ns = Some(elapsed.as_nanos() as u64);
    }
    record.unsound = outcome.phi().is_some_and(|phi| phi != s.phi());
    record.oracle = Some(draw.sample);
    record.outcome = Some(outcome);
    Trial {
        record,
        probability: profile,
    }
}

pub fn run_montecarlo(cfg: &MonteCarloConfig) -> order2phi::Result<MonteCarloRun> {
    let fixed = if cfg.fixed {
        let s = make_modulus(cfg.mode, cfg.bits, cfg.seed)?;
        let profile = cfg.exact.then(|| exact_profile(&s)).flatten();
        Some((s, profile))
    } else {
        None
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism.max(1))
        .build()
        .map_err(|e| order2phi::Error::Resource(e.to_string()))?;
    let trials: Vec<Trial> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| run_trial(cfg, fixed.as_ref(), i))
            .collect()
    });
    let fixed_probability = fixed.as_ref().and_then(|(_, p)| p.as_ref()).map(|p| &p.probability);
    Ok(summarize(cfg, fixed_probability, trials))
}

fn summarize(
    cfg: &MonteCarloConfig,
    fixed_probability: Option<&Ratio<BigUint>>,
    trials: Vec<Trial>,
) -> MonteCarloRun {
    let mut successes = 0u64;
    let mut failures = 0u64;
    let mut lucky = 0u64;
    let mut errors = 0u64;
    let mut unsound = 0u64;
    let mut completed = 0u64;
    let mut expected_successes = 0f64;
    let mut variance = 0f64;
    let mut have_all_probabilities = true;
    let mut timings = Vec::new();
    let mut records = Vec::with_capacity(trials.len());

    for t in trials {
        let r = &t.record;
        lucky += r.lucky_factor_events;
        unsound += u64::from(r.unsound);
        if r.error.is_some() {
            errors += 1;
        } else {
            completed += 1;
            if r.succeeded() {
                successes += 1;
            } else {
                failures += 1;
            }
            match &t.probability {
                Some(p) => {
                    let pf = p.to_f64().unwrap_or(0.0);
                    variance += pf * (1.0 - pf);
                    expected_successes += pf;
                }
                None => have_all_probabilities = false,
            }
        }
        if let Some(ns) = r.wall_time_ns {
            timings.push(ns);
        }
        records.push(t.record);
    }

    let (expected_rate, z_score) = if have_all_probabilities && completed > 0 {
        let diff = successes as f64 - expected_successes;
        let z = if variance > 0.0 {
            Some(diff / variance.sqrt())
        } else if diff == 0.0 {
            Some(0.0)
        } else {
            None
        };
        (Some(expected_successes / completed as f64), z)
    } else {
        (None, None)
    };
    let exact_probability = fixed_probability.filter(|_| have_all_probabilities).map(format_ratio);

    timings.sort_unstable();
    let summary = RunSummary {
        experiment_id: cfg.experiment_id(),
        rng: RNG_ALGORITHM,
        seed: cfg.seed,
        trials: cfg.trials,
        successes,
        failures,
        lucky_factor_events: lucky,
        trial_errors: errors,
        unsound_successes: unsound,
        empirical_rate: if completed == 0 { 0.0 } else { successes as f64 / completed as f64 },
        exact_probability,
        expected_rate,
        z_score,
        median_recover_ns: (!timings.is_empty()).then(|| timings[timings.len() / 2]),
    };
    MonteCarloRun { records, summary }
}

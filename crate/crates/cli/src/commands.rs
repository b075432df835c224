use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use order2phi::census::{brute_force_census, success_profile_from_table, BRUTE_FORCE_CENSUS_MAX};
use order2phi::dec::parse_decimal;
use order2phi::{
    census_from_formula, factor_from_gcd, factor_integer, factor_with_cofactor_boost, phi_from_ed,
    phi_from_large_divisor, recover_phi_from_order, verify_multiplicativity, Error, Method,
    RecoveryOutcome, Semiprime,
};
use serde::Serialize;

use crate::exit;
use crate::experiments::{derive_seed, make_modulus, run_montecarlo, ModulusMode, MonteCarloConfig};

#[derive(Debug, Parser)]
#[command(name = "order2phi", version, about = "Recover phi(N) of an RSA modulus from the order of a random unit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit semiprimes as JSON Lines.
    Gen(GenArgs),
    /// Run one recovery method on public inputs.
    Recover(RecoverArgs),
    /// Oracle + recovery trials with a summary.
    Montecarlo(MonteCarloArgs),
    /// Order census and exact success probability of one modulus.
    Census(CensusArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Bit length of each prime.
    #[arg(long)]
    pub bits: u32,
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    #[arg(long, env = "ORDER2PHI_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModulusMode::Generate)]
    pub mode: ModulusMode,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Order,
    Divisor,
    Gcd,
    Ed,
    Boost,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Order => Method::Order,
            MethodArg::Divisor => Method::Divisor,
            MethodArg::Gcd => Method::Gcd,
            MethodArg::Ed => Method::Ed,
            MethodArg::Boost => Method::Boost,
        }
    }
}

fn decimal(raw: &str) -> Result<BigUint, String> {
    parse_decimal(raw)
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Public modulus.
    #[arg(long, value_parser = decimal)]
    pub n: BigUint,
    /// Order of a unit (method `order`).
    #[arg(long, value_parser = decimal)]
    pub x: Option<BigUint>,
    /// Divisor D (methods `divisor`, `gcd`, `boost`).
    #[arg(long = "divisor", value_parser = decimal)]
    pub divisor: Option<BigUint>,
    /// Public exponent (method `ed`).
    #[arg(long, value_parser = decimal)]
    pub e: Option<BigUint>,
    /// Private exponent (method `ed`).
    #[arg(long, value_parser = decimal)]
    pub d: Option<BigUint>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    #[arg(long)]
    pub bits: u32,
    #[arg(long)]
    pub trials: u64,
    #[arg(long, env = "ORDER2PHI_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModulusMode::Generate)]
    pub mode: ModulusMode,
    /// One modulus (from the master seed) for all trials.
    #[arg(long)]
    pub fixed: bool,
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,
    /// Skip the exact census probability.
    #[arg(long)]
    pub no_exact: bool,
    /// Put p, q and group structure in each record.
    #[arg(long)]
    pub disclose: bool,
    /// Record recovery wall time (output is then not reproducible).
    #[arg(long)]
    pub timings: bool,
    /// Print only the summary line.
    #[arg(long)]
    pub summary_only: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CensusArgs {
    #[arg(long, value_parser = decimal, conflicts_with_all = ["p", "q"], required_unless_present_all = ["p", "q"])]
    pub n: Option<BigUint>,
    #[arg(long, value_parser = decimal, requires = "q")]
    pub p: Option<BigUint>,
    #[arg(long, value_parser = decimal, requires = "p")]
    pub q: Option<BigUint>,
    /// Cross-check the formula against brute force and multiplicativity.
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub common: Common,
}

/// A command's text output and exit code.
#[derive(Debug)]
pub struct Reply {
    pub output: String,
    pub code: u8,
}

#[derive(Debug)]
pub struct Failure {
    pub message: String,
    pub code: u8,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            message: message.into(),
            code: exit::USAGE,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Resource(_) => exit::INTERNAL,
            _ => exit::USAGE,
        };
        Failure {
            message: e.to_string(),
            code,
        }
    }
}

fn json_line<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(v).expect("serializable");
    s.push('\n');
    s
}

pub fn run(cli: Cli) -> Result<Reply, Failure> {
    let (reply, out) = match cli.command {
        Command::Gen(a) => (gen(&a)?, a.common.out),
        Command::Recover(a) => (recover(&a)?, a.common.out),
        Command::Montecarlo(a) => (montecarlo(&a)?, a.common.out),
        Command::Census(a) => (census(&a)?, a.common.out),
    };
    if let Some(path) = out {
        File::create(&path)
            .and_then(|mut f| f.write_all(reply.output.as_bytes()))
            .map_err(|e| Failure {
                message: format!("writing {}: {e}", path.display()),
                code: exit::INTERNAL,
            })?;
        return Ok(Reply {
            output: String::new(),
            code: reply.code,
        });
    }
    Ok(reply)
}

pub fn gen(a: &GenArgs) -> Result<Reply, Failure> {
    if a.count == 0 {
        return Err(Failure::usage("--count must be at least 1"));
    }
    let mut output = String::new();
    for i in 0..a.count {
        let s = make_modulus(a.mode, a.bits, derive_seed(a.seed, i))?;
        output.push_str(&json_line(&s));
    }
    Ok(Reply {
        output,
        code: exit::SUCCESS,
    })
}

fn required<'a>(v: &'a Option<BigUint>, flag: &str, method: &str) -> Result<&'a BigUint, Failure> {
    v.as_ref()
        .ok_or_else(|| Failure::usage(format!("--method {method} requires --{flag}")))
}

pub fn recover_outcome(a: &RecoverArgs) -> Result<RecoveryOutcome, Failure> {
    let method = Method::from(a.method);
    let name = method.name();
    Ok(match method {
        Method::Order => recover_phi_from_order(&a.n, required(&a.x, "x", name)?),
        Method::Divisor => phi_from_large_divisor(&a.n, required(&a.divisor, "divisor", name)?),
        Method::Gcd => factor_from_gcd(&a.n, required(&a.divisor, "divisor", name)?),
        Method::Boost => factor_with_cofactor_boost(&a.n, required(&a.divisor, "divisor", name)?),
        Method::Ed => phi_from_ed(&a.n, required(&a.e, "e", name)?, required(&a.d, "d", name)?),
    })
}

pub fn recover(a: &RecoverArgs) -> Result<Reply, Failure> {
    let outcome = recover_outcome(a)?;
    Ok(Reply {
        code: if outcome.is_success() {
            exit::SUCCESS
        } else {
            exit::VERIFIED_FAILURE
        },
        output: json_line(&outcome),
    })
}

pub fn montecarlo(a: &MonteCarloArgs) -> Result<Reply, Failure> {
    if a.trials == 0 {
        return Err(Failure::usage("--trials must be at least 1"));
    }
    if a.parallelism == 0 {
        return Err(Failure::usage("--parallelism must be at least 1"));
    }
    // Reject an unusable bit size before spawning trials.
    make_modulus(a.mode, a.bits, a.seed)?;
    let cfg = MonteCarloConfig {
        bits: a.bits,
        trials: a.trials,
        seed: a.seed,
        mode: a.mode,
        fixed: a.fixed,
        parallelism: a.parallelism,
        exact: !a.no_exact,
        disclose: a.disclose,
        timings: a.timings,
    };
    let run = run_montecarlo(&cfg)?;
    Ok(Reply {
        output: run.to_jsonl(!a.summary_only),
        code: exit::SUCCESS,
    })
}

#[derive(Serialize)]
struct CensusReport<'a> {
    census: &'a order2phi::CensusTable,
    success: &'a order2phi::SuccessProfile,
    #[serde(skip_serializing_if = "Option::is_none")]
    check: Option<CheckReport>,
}

#[derive(Serialize)]
struct CheckReport {
    brute_force_match: bool,
    mismatched_orders: Vec<String>,
    multiplicative_pairs_checked: u64,
    multiplicativity_failures: usize,
}

fn census_modulus(a: &CensusArgs) -> Result<Semiprime, Failure> {
    if let (Some(p), Some(q)) = (&a.p, &a.q) {
        return Ok(Semiprime::from_primes(p, q)?);
    }
    let n = a.n.as_ref().expect("clap enforces --n or --p/--q");
    let f = factor_integer(n)?;
    match f.factors() {
        [(p, 1), (q, 1)] if p.to_u32() != Some(2) => Ok(Semiprime::from_primes(p, q)?),
        _ => Err(Failure::usage(format!("{n} is not a product of two distinct odd primes"))),
    }
}

pub fn census(a: &CensusArgs) -> Result<Reply, Failure> {
    let s = census_modulus(a)?;
    let table = census_from_formula(&s)?;
    let profile = success_profile_from_table(s.n(), &table)?;
    let mut code = exit::SUCCESS;
    let check = if a.check {
        if s.n() > &BigUint::from(BRUTE_FORCE_CENSUS_MAX) {
            return Err(Failure {
                message: format!("--check needs N <= {BRUTE_FORCE_CENSUS_MAX}"),
                code: exit::INTERNAL,
            });
        }
        let brute = brute_force_census(s.n())?;
        let keys: std::collections::BTreeSet<_> = brute.entries.keys().chain(table.entries.keys()).collect();
        let mismatched: Vec<String> = keys
            .into_iter()
            .filter(|x| brute.get(x) != table.get(x))
            .map(|x| x.to_string())
            .collect();
        let mult = verify_multiplicativity(&s)?;
        let ok = mismatched.is_empty() && brute.phi == table.phi && mult.passed();
        if !ok {
            code = exit::INTERNAL;
        }
        Some(CheckReport {
            brute_force_match: mismatched.is_empty() && brute.phi == table.phi,
            mismatched_orders: mismatched,
            multiplicative_pairs_checked: mult.pairs_checked,
            multiplicativity_failures: mult.failures.len(),
        })
    } else {
        None
    };
    Ok(Reply {
        output: json_line(&CensusReport {
            census: &table,
            success: &profile,
            check,
        }),
        code,
    })
}

pub fn write_stdout(s: &str) -> io::Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(s.as_bytes())?;
    out.flush()
}

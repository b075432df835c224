//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p order2phi-cli --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_integer::Integer;
use num_traits::{One, Zero};
use order2phi::arith::{gcd, mod_inverse};
use order2phi::modulus::is_prime_u64;
use order2phi::{
    brute_force_census, census_from_formula, construct_semiprime, count_order_formula,
    exact_success_probability, factor_from_gcd, factor_with_cofactor_boost, generate_semiprime,
    phi_from_ed, recover_phi_from_order, sample_order, Natural, RecoveryOutcome, Semiprime,
};
use order2phi_cli::experiments::{derive_seed, run_montecarlo, MonteCarloConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn n(v: u64) -> Natural {
    Natural::from(v)
}

/// Recovery calls made and successes that did not match the hidden totient.
#[derive(Default)]
struct Tally {
    calls: u64,
    unsound: u64,
}

impl Tally {
    fn record(&mut self, outcome: &RecoveryOutcome, true_phi: &Natural, n: &Natural) {
        self.calls += 1;
        if let Some(phi) = outcome.phi() {
            let (p, q) = outcome.factors().unwrap();
            if phi != true_phi || &(p * q) != n {
                self.unsound += 1;
            }
        }
    }
}

type Check = fn(&mut Tally) -> Result<String, String>;

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let elapsed = start.elapsed();
    if elapsed > limit {
        return Err(format!("took {elapsed:.1?}, limit {limit:?}"));
    }
    Ok(())
}

fn semiprimes_up_to(limit: u64) -> Vec<Semiprime> {
    let primes: Vec<u64> = (3..=limit / 3).filter(|&v| is_prime_u64(v)).collect();
    let mut out = Vec::new();
    for (i, &p) in primes.iter().enumerate() {
        for &q in &primes[i + 1..] {
            if p * q > limit {
                break;
            }
            out.push(Semiprime::from_primes(&n(p), &n(q)).unwrap());
        }
    }
    out
}

fn c1_census_oracle(_: &mut Tally) -> Result<String, String> {
    let start = Instant::now();
    let corpus = semiprimes_up_to(10_000);
    let mut divisors = 0usize;
    for s in &corpus {
        let brute = brute_force_census(s.n()).map_err(|e| e.to_string())?;
        for x in s.lambda_factored().divisors(1 << 16).unwrap() {
            divisors += 1;
            let formula = count_order_formula(x.value(), s).map_err(|e| e.to_string())?;
            if formula != brute.get(x.value()) {
                return Err(format!("N={} x={} formula {} brute {}", s.n(), x.value(), formula, brute.get(x.value())));
            }
        }
        // Brute force must not see orders outside lambda's divisors.
        if brute.entries.keys().any(|x| !s.lambda().is_multiple_of(x)) {
            return Err(format!("N={}: brute-force order not dividing lambda", s.n()));
        }
    }
    within(Duration::from_secs(120), start)?;
    Ok(format!("{} semiprimes, {divisors} divisors, {:.1?}", corpus.len(), start.elapsed()))
}

fn c2_partition(_: &mut Tally) -> Result<String, String> {
    let start = Instant::now();
    for i in 0..200u64 {
        let bits = 9 + (i % 8) as u32;
        let s = generate_semiprime(bits, derive_seed(0xC2, i)).map_err(|e| e.to_string())?;
        let table = census_from_formula(&s).map_err(|e| e.to_string())?;
        if table.total() != *s.phi() {
            return Err(format!("N={}: sum {} != phi {}", s.n(), table.total(), s.phi()));
        }
    }
    within(Duration::from_secs(60), start)?;
    Ok(format!("200 semiprimes, primes 9..16 bits, {:.1?}", start.elapsed()))
}

fn c3_fixture_143(tally: &mut Tally) -> Result<String, String> {
    let s = Semiprime::from_primes(&n(11), &n(13)).unwrap();
    let expected: Vec<(u64, u64)> = vec![
        (1, 1), (2, 3), (3, 2), (4, 4), (5, 4), (6, 6), (10, 12), (12, 8), (15, 8), (20, 16), (30, 24), (60, 32),
    ];
    let expected: std::collections::BTreeMap<Natural, Natural> =
        expected.into_iter().map(|(k, v)| (n(k), n(v))).collect();
    let formula = census_from_formula(&s).unwrap();
    let brute = brute_force_census(s.n()).unwrap();
    if formula.entries != expected || brute.entries != expected {
        return Err("census table differs from fixture".into());
    }
    for x in formula.entries.keys() {
        tally.record(&recover_phi_from_order(s.n(), x), s.phi(), s.n());
    }
    let profile = exact_success_probability(&s).unwrap();
    if profile.succeeding_orders != vec![n(20), n(30), n(60)] {
        return Err(format!("succeeding orders {:?}", profile.succeeding_orders));
    }
    if profile.success_count != n(72) || profile.phi != n(120) {
        return Err(format!("success {}/{}", profile.success_count, profile.phi));
    }
    Ok("table, succeeding orders {20,30,60}, probability 72/120".into())
}

fn c4_montecarlo_143(tally: &mut Tally) -> Result<String, String> {
    let start = Instant::now();
    let mut cfg = MonteCarloConfig::new(4, 100_000, 3);
    cfg.fixed = true;
    let first = run_montecarlo(&cfg).map_err(|e| e.to_string())?;
    cfg.parallelism = 4;
    let second = run_montecarlo(&cfg).map_err(|e| e.to_string())?;
    let s = &first.summary;
    tally.calls += 2 * s.trials;
    tally.unsound += s.unsound_successes + second.summary.unsound_successes;
    if first.to_jsonl(true) != second.to_jsonl(true) {
        return Err("same seed produced different output".into());
    }
    let trials = (s.successes + s.failures) as f64;
    let sigma = (0.6 * 0.4 / trials).sqrt();
    let deviation = (s.empirical_rate - 0.6).abs();
    if deviation > 3.0 * sigma {
        return Err(format!("rate {} deviates {deviation:.5} > 3 sigma {:.5}", s.empirical_rate, 3.0 * sigma));
    }
    within(Duration::from_secs(60), start)?;
    Ok(format!(
        "rate {:.5} vs 0.6 (sigma {sigma:.5}, z {:.2}), byte-identical reruns, {:.1?}",
        s.empirical_rate,
        s.z_score.unwrap_or(f64::NAN),
        start.elapsed()
    ))
}

fn c5_divisibility(_: &mut Tally) -> Result<String, String> {
    let mut samples = 0u64;
    for i in 0..2500u64 {
        let bits = 4 + (i % 13) as u32; // primes up to 16 bits, N < 2^32
        let seed = derive_seed(0xC5, i);
        let s = generate_semiprime(bits, seed).map_err(|e| e.to_string())?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        for _ in 0..4 {
            let x = sample_order(&s, &mut rng).sample.order;
            let d = &x * gcd(&x, &(s.n() - 1u32));
            samples += 1;
            if !(s.phi() % &d).is_zero() {
                return Err(format!("N={} x={x}: x(x,N-1) does not divide phi", s.n()));
            }
        }
    }
    Ok(format!("{samples} sampled orders, all divide phi"))
}

fn failure_rate(bits: u32, trials: u64, seed: u64, exact: bool, tally: &mut Tally) -> Result<(u64, u64, Option<f64>), String> {
    let mut cfg = MonteCarloConfig::new(bits, trials, seed);
    cfg.parallelism = 4;
    cfg.exact = exact;
    let run = run_montecarlo(&cfg).map_err(|e| e.to_string())?;
    let s = run.summary;
    tally.calls += s.successes + s.failures;
    tally.unsound += s.unsound_successes;
    if s.trial_errors > 0 {
        return Err(format!("{} trial errors at {bits} bits", s.trial_errors));
    }
    Ok((s.failures, s.successes + s.failures, s.expected_rate))
}

fn c6_end_to_end(tally: &mut Tally) -> Result<String, String> {
    let (fails, total, exact) = failure_rate(24, 1000, 0xC6, true, tally)?;
    let rate = 1.0 - fails as f64 / total as f64;
    if rate < 0.995 {
        return Err(format!("24-bit success rate {rate}"));
    }
    let trend_trials = 2000;
    let mut rates = Vec::new();
    for bits in [16u32, 20, 24, 28] {
        let (f, t, _) = failure_rate(bits, trend_trials, 0xC60 + bits as u64, false, tally)?;
        rates.push((bits, f, t));
    }
    for w in rates.windows(2) {
        let (b0, f0, t0) = w[0];
        let (b1, f1, t1) = w[1];
        let (r0, r1) = (f0 as f64 / t0 as f64, f1 as f64 / t1 as f64);
        let pooled = (f0 + f1) as f64 / (t0 + t1) as f64;
        let sigma = (pooled * (1.0 - pooled) * (1.0 / t0 as f64 + 1.0 / t1 as f64)).sqrt();
        if r1 > r0 + 3.0 * sigma {
            return Err(format!("failure rate rose from {r0} ({b0} bits) to {r1} ({b1} bits)"));
        }
    }
    let trend: Vec<String> = rates.iter().map(|(b, f, t)| format!("{b}b:{f}/{t}")).collect();
    Ok(format!(
        "24-bit success {rate:.4} (census-predicted {:.6}), failures {}",
        exact.unwrap_or(f64::NAN),
        trend.join(" ")
    ))
}

fn gcd_instance(rng: &mut ChaCha20Rng) -> (Natural, Natural, Natural) {
    loop {
        let g = 2 * rng.gen_range(1u64 << 8..1u64 << 20);
        let rp = rng.gen_range(1..g / 2);
        let rq = rng.gen_range(1..g / 2);
        if rp == rq || rp.gcd(&rq) != 1 {
            continue;
        }
        let (p, q) = (1 + rp * g, 1 + rq * g);
        if is_prime_u64(p) && is_prime_u64(q) {
            let (p, q) = (n(p.min(q)), n(p.max(q)));
            return (p, q, n(g));
        }
    }
}

fn c7_secondary(tally: &mut Tally) -> Result<String, String> {
    // (e, d) recovery.
    let mut ed_cases = 0;
    let mut i = 0u64;
    while ed_cases < 100 {
        let bits = 8 + (i % 25) as u32;
        let s = generate_semiprime(bits, derive_seed(0xC7, i)).unwrap();
        i += 1;
        let e = [3u64, 5, 7]
            .into_iter()
            .map(n)
            .find(|e| n(9) * e * e < n(2) * s.n() && gcd(e, s.phi()).is_one());
        let Some(e) = e else { continue };
        let d = mod_inverse(&e, s.phi()).unwrap();
        let o = phi_from_ed(s.n(), &e, &d);
        tally.record(&o, s.phi(), s.n());
        if o.phi() != Some(s.phi()) {
            return Err(format!("ed recovery failed on N={} e={e}", s.n()));
        }
        ed_cases += 1;
    }

    // gcd(p-1, q-1) recovery with p + q < D^2.
    let mut rng = ChaCha20Rng::seed_from_u64(0xC7C7);
    let mut gcd_cases = 0;
    while gcd_cases < 100 {
        let (p, q, _) = gcd_instance(&mut rng);
        let d = gcd(&(&p - 1u32), &(&q - 1u32));
        if &p + &q >= &d * &d {
            continue;
        }
        let nn = &p * &q;
        let phi = (&p - 1u32) * (&q - 1u32);
        let o = factor_from_gcd(&nn, &d);
        tally.record(&o, &phi, &nn);
        if o.factors() != Some((&p, &q)) {
            return Err(format!("gcd recovery failed on N={nn} D={d}"));
        }
        gcd_cases += 1;
    }

    // Cofactor boost on every divisor of lambda meeting D_j0 F^2 > p + q - 2.
    let mut boost_cases = 0;
    for j in 0..150u64 {
        let bits = 6 + (j % 15) as u32;
        let s = generate_semiprime(bits, derive_seed(0xB0, j)).unwrap();
        let sum_minus_2 = s.p() + s.q() - 2u32;
        for dv in s.lambda_factored().divisors(1 << 14).unwrap() {
            let o = factor_with_cofactor_boost(s.n(), dv.value());
            tally.record(&o, s.phi(), s.n());
            let d_j0 = o.trace.d_j0.clone().unwrap();
            let f = o.trace.f.clone().unwrap();
            if d_j0 * &f * &f > sum_minus_2 {
                boost_cases += 1;
                if o.phi() != Some(s.phi()) {
                    return Err(format!("boost failed on N={} D={}", s.n(), dv.value()));
                }
            }
        }
    }
    Ok(format!("ed {ed_cases}/100, gcd {gcd_cases}/100, boost {boost_cases}/{boost_cases} under hypotheses"))
}

fn c9_performance(tally: &mut Tally) -> Result<String, String> {
    // Two 1024-bit primes whose product has exactly 2048 bits.
    let s = (0..)
        .map(|i| construct_semiprime(1024, derive_seed(0xC9, i)).expect("1024-bit construction"))
        .find(|s| s.n().bits() == 2048)
        .unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(0xC9);
    let x = sample_order(&s, &mut rng).sample.order;
    let mut times = Vec::with_capacity(100);
    for _ in 0..100 {
        let start = Instant::now();
        let o = recover_phi_from_order(s.n(), &x);
        times.push(start.elapsed());
        tally.record(&o, s.phi(), s.n());
        if !o.is_success() {
            return Err("2048-bit recovery failed".into());
        }
    }
    times.sort();
    let median = times[50];
    if median >= Duration::from_millis(50) {
        return Err(format!("median {median:?} >= 50ms"));
    }
    Ok(format!("{}-bit N, median {median:?}, max {:?} over 100 calls", s.n().bits(), times[99]))
}

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("C1 census formula == brute force, all N <= 10^4", c1_census_oracle),
        ("C2 partition identity, 200 semiprimes", c2_partition),
        ("C3 fixture N = 143", c3_fixture_143),
        ("C4 Monte Carlo vs exact on N = 143", c4_montecarlo_143),
        ("C5 x(x,N-1) divides phi", c5_divisibility),
        ("C6 end-to-end attack", c6_end_to_end),
        ("C7 secondary recoveries under hypotheses", c7_secondary),
        ("C9 2048-bit recovery speed", c9_performance),
    ];
    let mut tally = Tally::default();
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| check(&mut tally)))
            .unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("PASS  {name}: {detail} [{:.1?}]", start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{:.1?}]", start.elapsed());
            }
        }
    }
    let sound = tally.unsound == 0 && tally.calls >= 100_000;
    println!(
        "{}  C8 soundness: {} unsound successes over {} recovery calls",
        if sound { "PASS" } else { "FAIL" },
        tally.unsound,
        tally.calls
    );
    if !sound {
        failed += 1;
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

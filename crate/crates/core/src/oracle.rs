//! Classical stand-in for an exact order-finding oracle.
//!
//! The oracle knows the modulus' group structure and returns the exact order
//! of a uniformly random unit. Sampling uniformly over units is the same as
//! sampling uniformly over pairs `(a, ord(a))`, since each unit has one order.

use num_bigint::RandBigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{gcd, Natural};
use crate::error::{domain, resource, Error, Result};
use crate::modulus::Semiprime;

/// Largest modulus [`brute_force_order`] accepts.
pub const BRUTE_FORCE_ORDER_MAX: u64 = 10_000_000;

/// A unit `a` and its exact multiplicative order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderSample {
    #[serde(with = "crate::dec")]
    pub a: Natural,
    #[serde(with = "crate::dec")]
    pub order: Natural,
}

/// One oracle call, including the non-units drawn (and discarded) on the way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleDraw {
    pub sample: OrderSample,
    /// `gcd(a, N)` for every rejected candidate; each is `p` or `q`.
    pub lucky_factors: Vec<Natural>,
}

fn unit_check(a: &Natural, n: &Natural) -> Result<()> {
    let g = gcd(a, n);
    if !g.is_one() {
        return Err(Error::NotAUnit { factor: g });
    }
    Ok(())
}

/// Exact order of `a` modulo `N`, dividing down from `lambda(N)` one prime
/// at a time.
pub fn multiplicative_order(a: &Natural, s: &Semiprime) -> Result<Natural> {
    let n = s.n();
    let a = a % n;
    unit_check(&a, n)?;
    let mut e = s.lambda().clone();
    for (prime, k) in s.lambda_factored().factors() {
        for _ in 0..*k {
            let reduced = &e / prime;
            if a.modpow(&reduced, n).is_one() {
                e = reduced;
            } else {
                break;
            }
        }
    }
    Ok(e)
}

/// Draws `a` uniformly from `[1, N-1]`, rejecting non-units, and returns its
/// exact order.
pub fn sample_order<R: Rng + ?Sized>(s: &Semiprime, rng: &mut R) -> OracleDraw {
    let mut lucky_factors = Vec::new();
    loop {
        match sample_unit_or_factor(s, rng) {
            Ok(sample) => {
                return OracleDraw {
                    sample,
                    lucky_factors,
                }
            }
            Err(Error::NotAUnit { factor }) => lucky_factors.push(factor),
            Err(e) => unreachable!("unexpected oracle error: {e}"),
        }
    }
}

/// A single draw without resampling; a non-unit yields `NotAUnit` carrying
/// the shared factor.
pub fn sample_unit_or_factor<R: Rng + ?Sized>(s: &Semiprime, rng: &mut R) -> Result<OrderSample> {
    let a = rng.gen_biguint_range(&Natural::one(), s.n());
    let order = multiplicative_order(&a, s)?;
    Ok(OrderSample { a, order })
}

/// Smallest `k >= 1` with `a^k = 1 (mod N)`, by repeated multiplication.
pub fn brute_force_order(a: &Natural, n: &Natural) -> Result<Natural> {
    let n = n
        .to_u64()
        .filter(|&v| v <= BRUTE_FORCE_ORDER_MAX)
        .ok_or_else(|| resource(format!("modulus exceeds brute-force ceiling {BRUTE_FORCE_ORDER_MAX}")))?;
    let a = (a % n).to_u64().expect("reduced below a u64 modulus");
    brute_force_order_u64(a, n).map(Natural::from)
}

pub(crate) fn brute_force_order_u64(a: u64, n: u64) -> Result<u64> {
    if n < 2 {
        return Err(domain("modulus must be at least 2"));
    }
    let a = a % n;
    if a.gcd(&n) != 1 {
        return Err(Error::NotAUnit {
            factor: Natural::from(a.gcd(&n)),
        });
    }
    let mut x = a;
    let mut k = 1u64;
    while x != 1 {
        x = x * a % n;
        k += 1;
    }
    Ok(k)
}

/// Checks the order-sample invariants against the hidden structure.
pub fn is_valid_sample(sample: &OrderSample, s: &Semiprime) -> bool {
    let n = s.n();
    let a = &sample.a;
    if a.is_zero() || a >= n || !gcd(a, n).is_one() || sample.order.is_zero() {
        return false;
    }
    if !s.lambda().is_multiple_of(&sample.order) || !a.modpow(&sample.order, n).is_one() {
        return false;
    }
    let order_f = s
        .lambda_factored()
        .factor_divisor(&sample.order)
        .expect("order divides lambda");
    let minimal = order_f
        .primes()
        .all(|l| !a.modpow(&(&sample.order / l), n).is_one());
    minimal
}

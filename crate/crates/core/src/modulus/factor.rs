//! Integers with known prime factorization, and desk-scale factoring.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::prime::{is_probable_prime, mul_mod, small_primes};
use crate::arith::Natural;
use crate::error::{domain, resource, Result};

/// Largest input [`factor_integer`] will attempt.
pub const FACTOR_MAX_BITS: u64 = 80;

/// Iteration budget for one Pollard-rho attempt on a single cofactor.
const RHO_ITERATIONS: u64 = 1 << 26;
const RHO_ATTEMPTS: u64 = 16;

/// A positive integer with its full prime factorization.
///
/// Primes are strictly increasing and every exponent is positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FactoredInteger {
    value: Natural,
    factors: Vec<(Natural, u32)>,
}

impl FactoredInteger {
    pub fn one() -> Self {
        FactoredInteger {
            value: Natural::one(),
            factors: Vec::new(),
        }
    }

    /// Builds from prime powers, merging repeated primes. Primality is
    /// trusted; use [`FactoredInteger::try_from_factors`] for untrusted input.
    pub(crate) fn from_prime_powers<I>(powers: I) -> Self
    where
        I: IntoIterator<Item = (Natural, u32)>,
    {
        let mut map: BTreeMap<Natural, u32> = BTreeMap::new();
        for (p, e) in powers {
            if e > 0 {
                *map.entry(p).or_default() += e;
            }
        }
        Self::from_map(map)
    }

    fn from_map(map: BTreeMap<Natural, u32>) -> Self {
        let mut value = Natural::one();
        for (p, &e) in &map {
            value *= p.pow(e);
        }
        FactoredInteger {
            value,
            factors: map.into_iter().collect(),
        }
    }

    /// Builds from prime powers, certifying each prime.
    pub fn try_from_factors<I>(powers: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Natural, u32)>,
    {
        let powers: Vec<_> = powers.into_iter().collect();
        for (p, e) in &powers {
            if *e == 0 {
                return Err(domain(format!("zero exponent for {p}")));
            }
            if !is_probable_prime(p) {
                return Err(domain(format!("{p} is not prime")));
            }
        }
        Ok(Self::from_prime_powers(powers))
    }

    pub fn value(&self) -> &Natural {
        &self.value
    }

    pub fn factors(&self) -> &[(Natural, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = &Natural> + '_ {
        self.factors.iter().map(|(p, _)| p)
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn exponent_of(&self, prime: &Natural) -> u32 {
        self.factors
            .binary_search_by(|(p, _)| p.cmp(prime))
            .map(|i| self.factors[i].1)
            .unwrap_or(0)
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn euler_phi(&self) -> Natural {
        self.factors.iter().fold(Natural::one(), |acc, (p, e)| {
            acc * p.pow(e - 1) * (p - 1u32)
        })
    }

    /// Number of divisors, `prod (e_i + 1)`.
    pub fn divisor_count(&self) -> Natural {
        self.factors
            .iter()
            .fold(Natural::one(), |acc, &(_, e)| acc * (e + 1))
    }

    fn combine(&self, other: &Self, pick: impl Fn(u32, u32) -> u32) -> Self {
        let mut map: BTreeMap<Natural, u32> = BTreeMap::new();
        for (p, _) in self.factors.iter().chain(other.factors.iter()) {
            let e = pick(self.exponent_of(p), other.exponent_of(p));
            if e > 0 {
                map.insert(p.clone(), e);
            }
        }
        Self::from_map(map)
    }

    /// Least common multiple.
    pub fn lcm(&self, other: &Self) -> Self {
        self.combine(other, u32::max)
    }

    /// Greatest common divisor.
    pub fn gcd(&self, other: &Self) -> Self {
        self.combine(other, u32::min)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a + b)
    }

    /// `self / other`, or `None` when `other` does not divide `self`.
    pub fn checked_div(&self, other: &Self) -> Option<Self> {
        let mut map = BTreeMap::new();
        for (p, e) in &self.factors {
            let f = other.exponent_of(p);
            if f > *e {
                return None;
            }
            if e - f > 0 {
                map.insert(p.clone(), e - f);
            }
        }
        if other.factors.iter().any(|(p, _)| self.exponent_of(p) == 0) {
            return None;
        }
        Some(Self::from_map(map))
    }

    /// Factorization of a divisor `d` of `self`, using only the known primes.
    pub fn factor_divisor(&self, d: &Natural) -> Option<Self> {
        if d.is_zero() {
            return None;
        }
        let mut rest = d.clone();
        let mut map = BTreeMap::new();
        for (p, e) in &self.factors {
            let mut k = 0;
            while k < *e && (&rest % p).is_zero() {
                rest /= p;
                k += 1;
            }
            if k > 0 {
                map.insert(p.clone(), k);
            }
        }
        rest.is_one().then(|| Self::from_map(map))
    }

    /// All positive divisors in increasing order; errors if there are more
    /// than `budget`.
    pub fn divisors(&self, budget: usize) -> Result<Vec<FactoredInteger>> {
        let count = self.divisor_count();
        if count > Natural::from(budget) {
            return Err(resource(format!(
                "{count} divisors exceeds enumeration budget {budget}"
            )));
        }
        let mut out = vec![Vec::<(Natural, u32)>::new()];
        for (p, e) in &self.factors {
            let mut next = Vec::with_capacity(out.len() * (*e as usize + 1));
            for base in &out {
                for k in 0..=*e {
                    let mut powers = base.clone();
                    if k > 0 {
                        powers.push((p.clone(), k));
                    }
                    next.push(powers);
                }
            }
            out = next;
        }
        let mut divisors: Vec<_> = out.into_iter().map(Self::from_prime_powers).collect();
        divisors.sort_by(|a, b| a.value.cmp(&b.value));
        Ok(divisors)
    }
}

/// Serialized as a list of `{prime, exponent}` decimal-string pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct PrimePower {
    #[serde(with = "crate::dec")]
    pub prime: Natural,
    #[serde(with = "crate::dec::display")]
    pub exponent: u32,
}

impl FactoredInteger {
    pub fn to_prime_powers(&self) -> Vec<PrimePower> {
        self.factors
            .iter()
            .map(|(p, e)| PrimePower {
                prime: p.clone(),
                exponent: *e,
            })
            .collect()
    }
}

/// Complete factorization of `n` by trial division and Pollard-Brent rho.
///
/// Inputs above [`FACTOR_MAX_BITS`] bits are refused with a resource error.
pub fn factor_integer(n: &Natural) -> Result<FactoredInteger> {
    if n.is_zero() {
        return Err(domain("cannot factor 0"));
    }
    if n.bits() > FACTOR_MAX_BITS {
        return Err(resource(format!(
            "{}-bit input exceeds the {FACTOR_MAX_BITS}-bit factoring ceiling",
            n.bits()
        )));
    }
    let mut found: Vec<(Natural, u32)> = Vec::new();
    let mut rest = n.clone();
    for &p in small_primes() {
        if rest.is_one() {
            break;
        }
        let mut e = 0;
        while (&rest % p).is_zero() {
            rest /= p;
            e += 1;
        }
        if e > 0 {
            found.push((Natural::from(p), e));
        }
    }

    let mut pending = vec![rest];
    while let Some(m) = pending.pop() {
        if m.is_one() {
            continue;
        }
        if is_probable_prime(&m) {
            found.push((m, 1));
            continue;
        }
        let d = match m.to_u64() {
            Some(small) => rho_u64(small).map(Natural::from),
            None => rho_big(&m),
        }
        .ok_or_else(|| resource(format!("Pollard rho budget exhausted on {m}")))?;
        pending.push(&m / &d);
        pending.push(d);
    }
    Ok(FactoredInteger::from_prime_powers(found))
}

fn rho_u64(n: u64) -> Option<u64> {
    if n.is_multiple_of(2) {
        return Some(2);
    }
    for c in 1..=RHO_ATTEMPTS {
        if let Some(d) = brent_u64(n, c) {
            if d != n {
                return Some(d);
            }
        }
    }
    None
}

fn brent_u64(n: u64, c: u64) -> Option<u64> {
    let f = |x: u64| (mul_mod(x, x, n) + c) % n;
    let batch = 128;
    let (mut y, mut r, mut q, mut g) = (2u64, 1u64, 1u64, 1u64);
    let (mut x, mut ys) = (0u64, 0u64);
    let mut steps = 0u64;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            for _ in 0..batch.min(r - k) {
                y = f(y);
                q = mul_mod(q, x.abs_diff(y), n);
            }
            g = q.gcd(&n);
            k += batch;
        }
        steps += r;
        if steps > RHO_ITERATIONS {
            return None;
        }
        r *= 2;
    }
    if g == n {
        loop {
            ys = f(ys);
            g = x.abs_diff(ys).gcd(&n);
            if g > 1 {
                break;
            }
        }
    }
    (g != n).then_some(g)
}

fn rho_big(n: &BigUint) -> Option<BigUint> {
    if n.is_even() {
        return Some(BigUint::from(2u32));
    }
    for c in 1..=RHO_ATTEMPTS {
        if let Some(d) = brent_big(n, &BigUint::from(c)) {
            return Some(d);
        }
    }
    None
}

fn brent_big(n: &BigUint, c: &BigUint) -> Option<BigUint> {
    let f = |x: &BigUint| (x * x + c) % n;
    let diff = |a: &BigUint, b: &BigUint| if a > b { a - b } else { b - a };
    let batch = 128u64;
    let mut y = BigUint::from(2u32);
    let mut r = 1u64;
    let mut q = BigUint::one();
    let mut g = BigUint::one();
    let mut x = BigUint::zero();
    let mut ys = BigUint::zero();
    let mut steps = 0u64;
    while g.is_one() {
        x = y.clone();
        for _ in 0..r {
            y = f(&y);
        }
        let mut k = 0;
        while k < r && g.is_one() {
            ys = y.clone();
            for _ in 0..batch.min(r - k) {
                y = f(&y);
                q = q * diff(&x, &y) % n;
            }
            g = q.gcd(n);
            k += batch;
        }
        steps += r;
        if steps > RHO_ITERATIONS {
            return None;
        }
        r *= 2;
    }
    if g == *n {
        loop {
            ys = f(&ys);
            g = diff(&x, &ys).gcd(n);
            if !g.is_one() {
                break;
            }
        }
    }
    (g != *n).then_some(g)
}

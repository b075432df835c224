//! Exact census of element orders in `(Z/NZ)*` for `N = pq`.
//!
//! For `x | lambda(N)` with `g = (x, N-1)`:
//!
//! ```text
//! N(x) = phi(x) * sum_{d | g, d squarefree, (d, x/g) = 1} g / d
//! ```
//!
//! which is the order-count formula with its `mu^2(d)/d` sum scaled by `g`
//! so that everything stays in integers.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::arith::{gcd, Natural};
use crate::error::{domain, resource, Result};
use crate::modulus::{FactoredInteger, Semiprime};
use crate::recovery::recover_phi_from_order;

/// Largest modulus [`brute_force_census`] accepts.
pub const BRUTE_FORCE_CENSUS_MAX: u64 = 1_000_000;

/// Divisor-enumeration budget for census tables and success profiles.
pub const DIVISOR_BUDGET: usize = 1 << 18;

/// Möbius function of a factored integer.
pub fn moebius(n: &FactoredInteger) -> i8 {
    if !n.is_squarefree() {
        0
    } else if n.factors().len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `x` together with `g = (x, N-1)` and `x / g`, all factored.
struct OrderParts {
    x: FactoredInteger,
    g: FactoredInteger,
    cofactor: Natural,
}

fn order_parts(x: &Natural, s: &Semiprime) -> Result<OrderParts> {
    let xf = s
        .lambda_factored()
        .factor_divisor(x)
        .ok_or_else(|| domain(format!("{x} does not divide lambda(N) = {}", s.lambda())))?;
    let g = gcd(x, &(s.n() - 1u32));
    let gf = xf.factor_divisor(&g).expect("gcd divides x");
    Ok(OrderParts {
        cofactor: x / &g,
        x: xf,
        g: gf,
    })
}

/// Number of units of order exactly `x`, by the squarefree-divisor sum.
pub fn count_order_formula(x: &Natural, s: &Semiprime) -> Result<Natural> {
    let parts = order_parts(x, s)?;
    let g = parts.g.value();
    let sum = parts
        .g
        .divisors(DIVISOR_BUDGET)?
        .into_iter()
        .filter(|d| moebius(d) != 0 && gcd(d.value(), &parts.cofactor).is_one())
        .fold(Natural::zero(), |acc, d| acc + g / d.value());
    Ok(parts.x.euler_phi() * sum)
}

/// Same count through the product form
/// `phi(x) * g * prod_{l | g, l not dividing x/g} (1 + 1/l)`.
pub fn count_order_product_form(x: &Natural, s: &Semiprime) -> Result<Natural> {
    let parts = order_parts(x, s)?;
    let mut numerator = parts.g.value().clone();
    for l in parts.g.primes() {
        if !parts.cofactor.is_multiple_of(l) {
            numerator = numerator / l * (l + 1u32);
        }
    }
    Ok(parts.x.euler_phi() * numerator)
}

/// `x -> N(x)` over the divisors of `lambda(N)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusTable {
    pub n: Natural,
    pub phi: Natural,
    pub entries: BTreeMap<Natural, Natural>,
}

impl CensusTable {
    pub fn total(&self) -> Natural {
        self.entries.values().sum()
    }

    pub fn get(&self, x: &Natural) -> Natural {
        self.entries.get(x).cloned().unwrap_or_default()
    }
}

impl Serialize for CensusTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        struct Entries<'a>(&'a BTreeMap<Natural, Natural>);
        impl Serialize for Entries<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let mut map = s.serialize_map(Some(self.0.len()))?;
                for (k, v) in self.0 {
                    map.serialize_entry(&k.to_string(), &v.to_string())?;
                }
                map.end()
            }
        }
        let mut map = s.serialize_map(Some(3))?;
        map.serialize_entry("n", &self.n.to_string())?;
        map.serialize_entry("phi", &self.phi.to_string())?;
        map.serialize_entry("entries", &Entries(&self.entries))?;
        map.end()
    }
}

/// Census of every divisor of `lambda(N)` by the formula.
pub fn census_from_formula(s: &Semiprime) -> Result<CensusTable> {
    let mut entries = BTreeMap::new();
    for x in s.lambda_factored().divisors(DIVISOR_BUDGET)? {
        let count = count_order_formula(x.value(), s)?;
        entries.insert(x.value().clone(), count);
    }
    Ok(CensusTable {
        n: s.n().clone(),
        phi: s.phi().clone(),
        entries,
    })
}

/// Census by walking every unit's powers.
///
/// Each unvisited unit `a` is powered up to `a^k = 1`; its powers `a^j` get
/// order `k / (j, k)`. Uses nothing but `N`.
pub fn brute_force_census(n: &Natural) -> Result<CensusTable> {
    let modulus = n
        .to_u64()
        .filter(|&v| v <= BRUTE_FORCE_CENSUS_MAX)
        .ok_or_else(|| resource(format!("modulus exceeds brute-force ceiling {BRUTE_FORCE_CENSUS_MAX}")))?;
    if modulus < 2 {
        return Err(domain("modulus must be at least 2"));
    }
    let size = modulus as usize;
    let mut order = vec![0u64; size];
    let mut powers = Vec::new();
    let mut units = 0u64;
    for a in 1..modulus {
        if a.gcd(&modulus) != 1 {
            continue;
        }
        units += 1;
        if order[a as usize] != 0 {
            continue;
        }
        powers.clear();
        let mut y = a;
        loop {
            powers.push(y);
            if y == 1 {
                break;
            }
            y = y * a % modulus;
        }
        let k = powers.len() as u64;
        for (j, &y) in powers.iter().enumerate() {
            let slot = &mut order[y as usize];
            if *slot == 0 {
                let e = j as u64 + 1;
                *slot = k / e.gcd(&k);
            }
        }
    }
    let mut tally: BTreeMap<u64, u64> = BTreeMap::new();
    for &o in order.iter().filter(|&&o| o != 0) {
        *tally.entry(o).or_default() += 1;
    }
    Ok(CensusTable {
        n: n.clone(),
        phi: Natural::from(units),
        entries: tally
            .into_iter()
            .map(|(k, v)| (Natural::from(k), Natural::from(v)))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultiplicativityReport {
    pub pairs_checked: u64,
    /// Coprime pairs `(x1, x2)` with `N(x1 x2) != N(x1) N(x2)`.
    pub failures: Vec<(String, String)>,
}

impl MultiplicativityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `N(x1 x2) = N(x1) N(x2)` for every coprime pair of divisors of
/// `lambda(N)` with `x1 <= x2`.
pub fn verify_multiplicativity(s: &Semiprime) -> Result<MultiplicativityReport> {
    let table = census_from_formula(s)?;
    let keys: Vec<&Natural> = table.entries.keys().collect();
    let mut report = MultiplicativityReport {
        pairs_checked: 0,
        failures: Vec::new(),
    };
    for (i, x1) in keys.iter().enumerate() {
        for x2 in &keys[i..] {
            if !gcd(x1, x2).is_one() {
                continue;
            }
            report.pairs_checked += 1;
            let product = *x1 * *x2;
            if table.get(&product) != table.get(x1) * table.get(x2) {
                report.failures.push((x1.to_string(), x2.to_string()));
            }
        }
    }
    Ok(report)
}

/// Exact probability that one oracle call leads the order-based recovery to
/// succeed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuccessProfile {
    pub success_count: Natural,
    pub phi: Natural,
    pub succeeding_orders: Vec<Natural>,
    pub probability: Ratio<Natural>,
}

impl Serialize for SuccessProfile {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(4))?;
        map.serialize_entry("success_count", &self.success_count.to_string())?;
        map.serialize_entry("phi", &self.phi.to_string())?;
        let orders: Vec<String> = self.succeeding_orders.iter().map(|x| x.to_string()).collect();
        map.serialize_entry("succeeding_orders", &orders)?;
        map.serialize_entry("probability", &format_ratio(&self.probability))?;
        map.end()
    }
}

/// `"num/den"` in lowest terms.
pub fn format_ratio(r: &Ratio<Natural>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Runs the order-based recovery on every divisor of `lambda(N)` and weighs
/// each success by `N(x) / phi(N)`.
pub fn exact_success_probability(s: &Semiprime) -> Result<SuccessProfile> {
    let table = census_from_formula(s)?;
    success_profile_from_table(s.n(), &table)
}

pub fn success_profile_from_table(n: &Natural, table: &CensusTable) -> Result<SuccessProfile> {
    if table.phi.is_zero() {
        return Err(domain("empty census"));
    }
    let mut success_count = Natural::zero();
    let mut succeeding_orders = Vec::new();
    for (x, count) in &table.entries {
        if recover_phi_from_order(n, x).is_success() {
            success_count += count;
            succeeding_orders.push(x.clone());
        }
    }
    Ok(SuccessProfile {
        probability: Ratio::new(success_count.clone(), table.phi.clone()),
        success_count,
        phi: table.phi.clone(),
        succeeding_orders,
    })
}

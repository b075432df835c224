//! RSA-style semiprimes with known unit-group structure.
//!
//! Two sources: [`generate_semiprime`] draws uniform primes of a given bit
//! length and factors `p-1`, `q-1`; [`construct_semiprime`] builds primes
//! `p = 2*prod(r_i) + 1` from random small primes so that `p-1` is factored
//! by construction and large bit sizes stay usable.

mod factor;
mod prime;

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

pub use factor::{factor_integer, FactoredInteger, PrimePower, FACTOR_MAX_BITS};
pub use prime::{is_prime_u64, is_probable_prime, MILLER_RABIN_ROUNDS};

use crate::arith::Natural;
use crate::error::{domain, resource, Result};

/// PRNG behind every seeded routine in this crate.
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.3, seed_from_u64)";

pub const GENERATE_MIN_BITS: u32 = 3;
/// Keeps `p-1` inside the factoring ceiling with a wide margin.
pub const GENERATE_MAX_BITS: u32 = 64;
pub const CONSTRUCT_MIN_BITS: u32 = 16;

const CONSTRUCT_REBUILDS: usize = 64;
const CONSTRUCT_TRIALS_PER_BUILD: usize = 200_000;

/// `N = p*q` with `p < q` distinct primes and factored `p-1`, `q-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Semiprime {
    n: Natural,
    p: Natural,
    q: Natural,
    p_minus_1: FactoredInteger,
    q_minus_1: FactoredInteger,
    phi: Natural,
    lambda: FactoredInteger,
    bits: u32,
    seed: Option<u64>,
}

impl Semiprime {
    fn assemble(
        p: Natural,
        q: Natural,
        p_minus_1: FactoredInteger,
        q_minus_1: FactoredInteger,
        seed: Option<u64>,
    ) -> Result<Self> {
        let (p, q, p_minus_1, q_minus_1) = if p < q {
            (p, q, p_minus_1, q_minus_1)
        } else {
            (q, p, q_minus_1, p_minus_1)
        };
        if p == q {
            return Err(domain("p and q must be distinct"));
        }
        if p.is_even() || p < Natural::from(3u32) {
            return Err(domain("p and q must be odd primes"));
        }
        if p_minus_1.value() + 1u32 != p || q_minus_1.value() + 1u32 != q {
            return Err(domain("recorded factorization does not match p-1 / q-1"));
        }
        let lambda = p_minus_1.lcm(&q_minus_1);
        Ok(Semiprime {
            n: &p * &q,
            phi: p_minus_1.value() * q_minus_1.value(),
            bits: q.bits() as u32,
            p,
            q,
            p_minus_1,
            q_minus_1,
            lambda,
            seed,
        })
    }

    /// From two distinct odd primes; factors `p-1` and `q-1`.
    pub fn from_primes(p: &Natural, q: &Natural) -> Result<Self> {
        for r in [p, q] {
            if !is_probable_prime(r) {
                return Err(domain(format!("{r} is not prime")));
            }
        }
        let pm1 = factor_integer(&(p - 1u32))?;
        let qm1 = factor_integer(&(q - 1u32))?;
        Self::assemble(p.clone(), q.clone(), pm1, qm1, None)
    }

    pub fn n(&self) -> &Natural {
        &self.n
    }
    pub fn p(&self) -> &Natural {
        &self.p
    }
    pub fn q(&self) -> &Natural {
        &self.q
    }
    pub fn p_minus_1(&self) -> &FactoredInteger {
        &self.p_minus_1
    }
    pub fn q_minus_1(&self) -> &FactoredInteger {
        &self.q_minus_1
    }
    pub fn phi(&self) -> &Natural {
        &self.phi
    }
    /// Carmichael `lambda(N) = [p-1, q-1]`.
    pub fn lambda(&self) -> &Natural {
        self.lambda.value()
    }
    pub fn lambda_factored(&self) -> &FactoredInteger {
        &self.lambda
    }
    /// Bit length of `q`; equals that of `p` for same-length moduli.
    pub fn bits(&self) -> u32 {
        self.bits
    }
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
    pub fn same_length(&self) -> bool {
        self.p.bits() == self.q.bits()
    }

    pub fn common_structure(&self) -> CommonStructure {
        common_structure(self)
    }
}

#[derive(Serialize, Deserialize)]
struct SemiprimeRecord {
    #[serde(with = "crate::dec")]
    n: Natural,
    #[serde(with = "crate::dec")]
    p: Natural,
    #[serde(with = "crate::dec")]
    q: Natural,
    p1_factors: Vec<PrimePower>,
    q1_factors: Vec<PrimePower>,
    #[serde(with = "crate::dec")]
    phi: Natural,
    #[serde(with = "crate::dec")]
    lambda: Natural,
    #[serde(with = "crate::dec::display")]
    bits: u32,
    #[serde(with = "crate::dec::option_display")]
    seed: Option<u64>,
}

impl Serialize for Semiprime {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SemiprimeRecord {
            n: self.n.clone(),
            p: self.p.clone(),
            q: self.q.clone(),
            p1_factors: self.p_minus_1.to_prime_powers(),
            q1_factors: self.q_minus_1.to_prime_powers(),
            phi: self.phi.clone(),
            lambda: self.lambda().clone(),
            bits: self.bits,
            seed: self.seed,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Semiprime {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rec = SemiprimeRecord::deserialize(d)?;
        let to_factored = |pp: Vec<PrimePower>| {
            FactoredInteger::try_from_factors(pp.into_iter().map(|f| (f.prime, f.exponent)))
        };
        let pm1 = to_factored(rec.p1_factors).map_err(D::Error::custom)?;
        let qm1 = to_factored(rec.q1_factors).map_err(D::Error::custom)?;
        if !is_probable_prime(&rec.p) || !is_probable_prime(&rec.q) {
            return Err(D::Error::custom("p and q must be prime"));
        }
        let s = Semiprime::assemble(rec.p, rec.q, pm1, qm1, rec.seed).map_err(D::Error::custom)?;
        if s.n != rec.n || s.phi != rec.phi || *s.lambda() != rec.lambda || s.bits != rec.bits {
            return Err(D::Error::custom("inconsistent semiprime record"));
        }
        Ok(s)
    }
}

/// One prime dividing both `p-1` and `q-1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommonPrime {
    #[serde(with = "crate::dec")]
    pub prime: Natural,
    /// Exponent in `p-1`.
    pub a: u32,
    /// Exponent in `q-1`.
    pub b: u32,
}

impl CommonPrime {
    pub fn min(&self) -> u32 {
        self.a.min(self.b)
    }
    pub fn max(&self) -> u32 {
        self.a.max(self.b)
    }
}

/// `p-1 = prod(p_i^a_i) * P`, `q-1 = prod(p_i^b_i) * Q`, where the `p_i`
/// are exactly the primes dividing `gcd(p-1, q-1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommonStructure {
    pub common: Vec<CommonPrime>,
    pub p_part: FactoredInteger,
    pub q_part: FactoredInteger,
}

impl CommonStructure {
    /// `gcd(p-1, q-1) = prod p_i^m_i`.
    pub fn gcd_value(&self) -> Natural {
        self.common
            .iter()
            .fold(Natural::one(), |acc, c| acc * c.prime.pow(c.min()))
    }

    /// `lambda(N) = prod p_i^M_i * P * Q`.
    pub fn lambda_value(&self) -> Natural {
        self.common
            .iter()
            .fold(Natural::one(), |acc, c| acc * c.prime.pow(c.max()))
            * self.p_part.value()
            * self.q_part.value()
    }

    pub fn is_common_prime(&self, prime: &Natural) -> bool {
        self.common.iter().any(|c| &c.prime == prime)
    }
}

impl Serialize for FactoredInteger {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_prime_powers().serialize(s)
    }
}

pub fn common_structure(s: &Semiprime) -> CommonStructure {
    let pf = s.p_minus_1();
    let qf = s.q_minus_1();
    let common: Vec<CommonPrime> = pf
        .factors()
        .iter()
        .filter_map(|(prime, a)| {
            let b = qf.exponent_of(prime);
            (b > 0).then(|| CommonPrime {
                prime: prime.clone(),
                a: *a,
                b,
            })
        })
        .collect();
    let only = |f: &FactoredInteger| {
        FactoredInteger::from_prime_powers(
            f.factors()
                .iter()
                .filter(|(prime, _)| !common.iter().any(|c| &c.prime == prime))
                .cloned(),
        )
    };
    CommonStructure {
        p_part: only(pf),
        q_part: only(qf),
        common,
    }
}

fn check_generate_bits(bits: u32) -> Result<()> {
    if !(GENERATE_MIN_BITS..=GENERATE_MAX_BITS).contains(&bits) {
        return Err(domain(format!(
            "generate mode needs {GENERATE_MIN_BITS} <= bits <= {GENERATE_MAX_BITS}, got {bits}"
        )));
    }
    Ok(())
}

/// Uniform prime with exactly `bits` bits, by rejection over odd candidates.
fn random_prime_u64(bits: u32, rng: &mut impl Rng) -> u64 {
    let lo = 1u64 << (bits - 2);
    let hi = if bits == 64 { u64::MAX >> 1 } else { (1u64 << (bits - 1)) - 1 };
    loop {
        let candidate = 2 * rng.gen_range(lo..=hi) + 1;
        if is_prime_u64(candidate) {
            return candidate;
        }
    }
}

/// Two distinct uniformly random `bits`-bit primes, deterministic in `seed`.
pub fn generate_semiprime(bits: u32, seed: u64) -> Result<Semiprime> {
    check_generate_bits(bits)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let p = random_prime_u64(bits, &mut rng);
    let q = loop {
        let q = random_prime_u64(bits, &mut rng);
        if q != p {
            break q;
        }
    };
    let (p, q) = (Natural::from(p), Natural::from(q));
    let pm1 = factor_integer(&(&p - 1u32))?;
    let qm1 = factor_integer(&(&q - 1u32))?;
    Semiprime::assemble(p, q, pm1, qm1, Some(seed))
}

/// A `bits`-bit prime `p` with `p-1` factored by construction.
fn construct_prime(bits: u32, rng: &mut ChaCha20Rng) -> Result<(Natural, FactoredInteger)> {
    let last_bits = (bits / 2).clamp(6, 40);
    let small_bits = (bits / 4).clamp(3, 24);
    let top = u64::from(bits - 1);
    let low_bound = BigUint::one() << top;
    let high_bound = (BigUint::one() << (top + 1)) - 2u32;

    for _ in 0..CONSTRUCT_REBUILDS {
        let mut powers: BTreeMap<u64, u32> = BTreeMap::from([(2, 1)]);
        let mut m = Natural::from(2u32);
        while m.bits() + u64::from(last_bits) <= top {
            let r = random_prime_u64(rng.gen_range(2..=small_bits), rng);
            *powers.entry(r).or_default() += 1;
            m *= r;
        }
        // p - 1 = m * r must land in [2^(bits-1), 2^bits - 2].
        let r_lo = Integer::div_ceil(&low_bound, &m).to_u64().expect("r fits u64");
        let r_hi = (&high_bound / &m).to_u64().expect("r fits u64");
        if r_lo > r_hi {
            continue;
        }
        for _ in 0..CONSTRUCT_TRIALS_PER_BUILD {
            let r = rng.gen_range(r_lo..=r_hi);
            if !is_prime_u64(r) {
                continue;
            }
            let candidate = &m * r + 1u32;
            if is_probable_prime(&candidate) {
                let mut powers = powers.clone();
                *powers.entry(r).or_default() += 1;
                let factored = FactoredInteger::from_prime_powers(
                    powers.into_iter().map(|(p, e)| (Natural::from(p), e)),
                );
                debug_assert_eq!(factored.value() + 1u32, candidate);
                return Ok((candidate, factored));
            }
        }
    }
    Err(resource(format!("could not construct a {bits}-bit prime within the retry budget")))
}

/// Same-length semiprime whose `p-1`, `q-1` factorizations are known by
/// construction; works at any size from [`CONSTRUCT_MIN_BITS`] upward.
pub fn construct_semiprime(bits: u32, seed: u64) -> Result<Semiprime> {
    if bits < CONSTRUCT_MIN_BITS {
        return Err(domain(format!(
            "construct mode needs bits >= {CONSTRUCT_MIN_BITS}, got {bits}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (p, pm1) = construct_prime(bits, &mut rng)?;
    let (q, qm1) = loop {
        let (q, qm1) = construct_prime(bits, &mut rng)?;
        if q != p {
            break (q, qm1);
        }
    };
    Semiprime::assemble(p, q, pm1, qm1, Some(seed))
}

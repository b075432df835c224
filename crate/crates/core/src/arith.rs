//! Arbitrary-precision integer primitives.
//!
//! Every division here is floor division on non-negative operands.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{domain, Error, Result};

/// Unbounded non-negative integer.
pub type Natural = BigUint;

/// Greatest common divisor, with `gcd(0, 0) = 0`.
pub fn gcd(a: &Natural, b: &Natural) -> Natural {
    a.gcd(b)
}

/// Least common multiple via `ab = [a,b](a,b)`.
pub fn lcm(a: &Natural, b: &Natural) -> Result<Natural> {
    if a.is_zero() && b.is_zero() {
        return Err(domain("lcm(0, 0) is undefined"));
    }
    let g = gcd(a, b);
    Ok(a / &g * b)
}

pub fn mod_pow(base: &Natural, exp: &Natural, modulus: &Natural) -> Result<Natural> {
    if *modulus < Natural::from(2u32) {
        return Err(domain("modulus must be at least 2"));
    }
    Ok(base.modpow(exp, modulus))
}

/// The unique `1 <= d < m` with `a*d = 1 (mod m)`.
pub fn mod_inverse(a: &Natural, m: &Natural) -> Result<Natural> {
    if *m < Natural::from(2u32) {
        return Err(domain("modulus must be at least 2"));
    }
    let a_int = BigInt::from(a % m);
    let m_int = BigInt::from(m.clone());
    let ext = a_int.extended_gcd(&m_int);
    if !ext.gcd.is_one() {
        return Err(Error::NotInvertible {
            a: a.clone(),
            modulus: m.clone(),
        });
    }
    let x = ext.x.mod_floor(&m_int);
    Ok(x.to_biguint().expect("mod_floor by a positive modulus is non-negative"))
}

/// `floor(sqrt(n))` by integer Newton iteration, and whether it is exact.
pub fn integer_sqrt(n: &Natural) -> (Natural, bool) {
    if n.is_zero() {
        return (Natural::zero(), true);
    }
    // Start above the root: 2^ceil(bits/2) > sqrt(n).
    let mut x = Natural::one() << n.bits().div_ceil(2);
    loop {
        let y = (&x + n / &x) >> 1u32;
        if y >= x {
            break;
        }
        x = y;
    }
    let exact = &x * &x == *n;
    (x, exact)
}

/// Roots `p <= q` of `t^2 - B t + N = 0`, required to be a nontrivial
/// factorization of `N`.
pub fn solve_quadratic_factors(b: &Natural, n: &Natural) -> Result<(Natural, Natural)> {
    let b_sq = b * b;
    let four_n = n << 2u32;
    if b_sq < four_n {
        return Err(Error::NoSolution("negative discriminant".into()));
    }
    let disc = b_sq - four_n;
    let (root, exact) = integer_sqrt(&disc);
    if !exact {
        return Err(Error::NoSolution("discriminant is not a perfect square".into()));
    }
    if b < &root || (b - &root).is_odd() {
        return Err(Error::NoSolution("roots are not integral".into()));
    }
    let p = (b - &root) >> 1u32;
    let q = (b + &root) >> 1u32;
    if p < Natural::from(2u32) {
        return Err(Error::NoSolution("trivial factorization".into()));
    }
    if &p * &q != *n {
        return Err(Error::NoSolution("root product differs from N".into()));
    }
    Ok((p, q))
}

//! Recover `phi(N)` of an RSA modulus `N = pq` from the multiplicative order
//! of a random unit, and factor `N` with it.
//!
//! The order-based recovery is four integer operations: `w = (x, N-1)`,
//! `D = x*w`, `X = floor((N+1)/D)`, `phi = X*D`. The rest of the crate
//! supplies what is needed to test that claim exactly: semiprimes with known
//! group structure, an exact order oracle, the order census `N(x)` with a
//! brute-force check, and the other totient-recovery routines that share
//! the same verification step.

pub mod arith;
pub mod census;
pub mod dec;
mod error;
pub mod modulus;
pub mod oracle;
pub mod recovery;

pub use arith::Natural;
pub use census::{
    brute_force_census, census_from_formula, count_order_formula, exact_success_probability,
    moebius, verify_multiplicativity, CensusTable, SuccessProfile,
};
pub use error::{Error, Result};
pub use modulus::{
    common_structure, construct_semiprime, factor_integer, generate_semiprime, CommonStructure,
    FactoredInteger, Semiprime,
};
pub use oracle::{brute_force_order, multiplicative_order, sample_order, OrderSample};
pub use recovery::{
    dj_fixpoint, factor_from_gcd, factor_from_phi, factor_with_cofactor_boost, phi_from_ed,
    phi_from_large_divisor, recover_phi_from_order, Method, RecoveryOutcome, Status,
};

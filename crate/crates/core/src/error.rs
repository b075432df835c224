use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{a} is not invertible modulo {modulus}")]
    NotInvertible { a: BigUint, modulus: BigUint },

    #[error("no integral factorization: {0}")]
    NoSolution(String),

    /// The sampled element shares the factor `factor` with the modulus.
    #[error("not a unit: gcd with modulus is {factor}")]
    NotAUnit { factor: BigUint },

    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn resource(msg: impl Into<String>) -> Error {
    Error::Resource(msg.into())
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("work estimate {required} exceeds budget {budget}")]
    Budget { required: u128, budget: u128 },

    #[error("grid of size {got} is too small, need at least {need}")]
    GridTooSmall { got: usize, need: usize },

    #[error("input is not 1-bounded: |f({x})| = {value}")]
    Unbounded { x: i64, value: f64 },

    #[error("character does not annihilate the commutator subgroup")]
    BadCharacter,

    #[error("invalid major-arc witness: {0}")]
    BadWitness(String),

    #[error("measured error {measured} exceeds target {target}")]
    Accuracy { measured: f64, target: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

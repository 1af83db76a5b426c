use thiserror::Error;

use crate::quantum::GateKind;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("gate {gate:?} acts on {expected} qubit(s), got {got}")]
    ArityMismatch {
        gate: GateKind,
        expected: usize,
        got: usize,
    },

    #[error("qubit {index} out of range for a {n}-qubit register")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("qubit {0} was already measured or traced out")]
    QubitUnavailable(usize),

    #[error("success probability is zero; the process never succeeds")]
    NeverSucceeds,

    #[error("output fidelity undefined: success probability is zero")]
    UndefinedFidelity,

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid chain configuration: {0}")]
    InvalidChain(String),

    #[error("genome out of bounds: {0}")]
    OutOfBounds(String),

    #[error("no sign change of the target function in [{lo}, {hi}] km")]
    NoRoot { lo: f64, hi: f64 },

    #[error("memory overflow at node {node}: {used} of {capacity} slots in use")]
    MemoryOverflow {
        node: usize,
        used: usize,
        capacity: usize,
    },

    #[error("simulation stalled at t = {time} s with no pending events")]
    Stalled { time: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("{p} is not a probability in [0, 1]"),
        })
    }
}

pub(crate) fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("{x} must be positive"),
        })
    }
}

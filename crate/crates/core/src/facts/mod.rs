//! Observer registry, event log, and the two relative-fact semantics.
//!
//! A [`Ledger`] owns the god's-eye pure state of one trial. Interactions
//! create reciprocal relative facts from a Born draw over the declared
//! bases; read-outs either reveal a stored fact (cross-perspective mode) or
//! draw independently (orthodox mode).

mod bases;
mod ledger;
mod types;

pub use bases::BasisLibrary;
pub use ledger::{Ledger, LedgerConfig};
pub use types::{
    Coupling, EnvironmentEvent, FactId, FactKey, InteractionEvent, InteractionSpec, LedgerEvent, Mode, Observer,
    ObserverId, ReadoutEvent, ReadoutKind, ReadoutOutcome, RelativeFact, RetireEvent, SchmidtSummary, SharedFact,
    StateSnapshot,
};

use crate::quantum::QuantumError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LedgerError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("state capacity exceeded: dimension {dim} > {cap}")]
    CapacityExceeded { dim: usize, cap: usize },
    #[error("unknown observer {0}")]
    UnknownObserver(ObserverId),
    #[error("observer {0} has been retired")]
    Retired(ObserverId),
    #[error("observers {0} and {1} share subsystems")]
    OverlappingObservers(ObserverId, ObserverId),
    #[error("declared bases are not a Schmidt basis of the coupled state (cross-term amplitude {defect:e})")]
    BasisNotSchmidt { defect: f64 },
    #[error("operation requires {expected:?} mode")]
    WrongMode { expected: Mode },
    #[error("{holder} holds no live fact about {target}")]
    NoLiveFact { holder: ObserverId, target: ObserverId },
    #[error("no basis `{label}` of dimension {dim}")]
    UnknownBasis { label: String, dim: usize },
    #[error("invalid interaction spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, LedgerError>;

#[cfg(test)]
mod tests;

use std::collections::BTreeMap;

use super::{LedgerError, Result};
use crate::quantum::BasisSpec;

/// Named bases, keyed by (label, dimension). `z` and `x` exist for every
/// dimension, `y` for qubits; anything else must be registered.
#[derive(Debug, Clone, Default)]
pub struct BasisLibrary {
    custom: BTreeMap<(String, usize), BasisSpec>,
}

impl BasisLibrary {
    pub fn register(&mut self, basis: BasisSpec) {
        self.custom.insert((basis.label().to_string(), basis.dim()), basis);
    }

    pub fn get(&self, label: &str, dim: usize) -> Result<BasisSpec> {
        if let Some(b) = self.custom.get(&(label.to_string(), dim)) {
            return Ok(b.clone());
        }
        match label {
            "z" => Ok(BasisSpec::computational(dim)),
            "x" => Ok(BasisSpec::fourier(dim)),
            "y" if dim == 2 => Ok(BasisSpec::qubit_y()),
            _ => Err(LedgerError::UnknownBasis { label: label.to_string(), dim }),
        }
    }
}

//! Dense linear algebra for small multipartite pure states.
//!
//! Amplitudes are stored row-major over the ordered factor list: the first
//! factor is the most significant digit of the flat index. Every operation is
//! a pure function of its inputs; the only stateful object is the random
//! stream handed to [`born_sample`].

mod basis;
mod born;
mod density;
mod schmidt;
mod state;

pub use basis::BasisSpec;
pub use born::born_sample;
pub use density::{dephase, reduced_density, DensityMatrix};
pub(crate) use schmidt::max_cross_amplitude;
pub use schmidt::{is_schmidt_basis, rotate_degenerate_block, schmidt_decompose, Bipartition, SchmidtDecomposition};
pub use state::{
    apply_unitary, basis_weights, controlled_shift, make_product_state, matricize, pointer_interaction, PureState,
    SubsystemId, SubsystemLabel,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;

/// Largest total Hilbert-space dimension a tracked state may reach.
pub const MAX_TOTAL_DIM: usize = 4096;

/// Numerical tolerances shared by the whole simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Tolerances {
    pub norm_tol: f64,
    pub recon_tol: f64,
    pub degen_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { norm_tol: 1e-10, recon_tol: 1e-10, degen_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantumError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("matrix is not orthogonal (deviation {0:e})")]
    NotOrthogonal(f64),
    #[error("unknown subsystem {0}")]
    UnknownSubsystem(SubsystemId),
    #[error("duplicate subsystem {0}")]
    DuplicateSubsystem(SubsystemId),
    #[error("bad bipartition: {0}")]
    BadBipartition(String),
    #[error("degeneracy class {index} out of range ({count} classes)")]
    ClassOutOfRange { index: usize, count: usize },
    #[error("dephasing strength {0} outside [0, 1]")]
    LambdaOutOfRange(f64),
    #[error("bad dimension {0}")]
    BadDimension(usize),
    #[error("total dimension {dim} exceeds cap {cap}")]
    CapacityExceeded { dim: usize, cap: usize },
    #[error("basis is not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),
}

pub type Result<T> = std::result::Result<T, QuantumError>;

/// Max-abs deviation of `m` from the identity.
pub(crate) fn identity_deviation(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((m[(r, c)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    u.is_square() && identity_deviation(&(u.adjoint() * u)) <= tol
}

/// Von Neumann entropy in bits of a list of eigenvalues.
pub fn entropy_bits(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&p| p > 1e-14)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|a| a.norm()).fold(0.0, f64::max)
}

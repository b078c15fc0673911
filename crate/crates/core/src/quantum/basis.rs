use super::{identity_deviation, CMatrix, QuantumError, Result, C64};

/// A labelled orthonormal basis; basis vectors are the matrix columns.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    label: String,
    vectors: CMatrix,
}

impl BasisSpec {
    pub fn new(label: impl Into<String>, vectors: CMatrix, norm_tol: f64) -> Result<Self> {
        if !vectors.is_square() {
            return Err(QuantumError::DimensionMismatch { expected: vectors.nrows(), found: vectors.ncols() });
        }
        if vectors.nrows() < 2 {
            return Err(QuantumError::BadDimension(vectors.nrows()));
        }
        let dev = identity_deviation(&(vectors.adjoint() * &vectors));
        if dev > norm_tol {
            return Err(QuantumError::NotOrthonormal(dev));
        }
        Ok(BasisSpec { label: label.into(), vectors })
    }

    /// Builds from column vectors.
    pub fn from_vectors(label: impl Into<String>, vectors: &[Vec<C64>], norm_tol: f64) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(QuantumError::DimensionMismatch { expected: dim, found: vectors.len() });
        }
        let m = CMatrix::from_fn(dim, vectors.len(), |r, c| vectors[c][r]);
        Self::new(label, m, norm_tol)
    }

    /// Computational basis, labelled `z`.
    pub fn computational(dim: usize) -> Self {
        BasisSpec { label: "z".into(), vectors: CMatrix::identity(dim, dim) }
    }

    /// Discrete Fourier basis, labelled `x`; for a qubit these are |±⟩.
    pub fn fourier(dim: usize) -> Self {
        let norm = 1.0 / (dim as f64).sqrt();
        let vectors = CMatrix::from_fn(dim, dim, |r, c| {
            let phase = 2.0 * std::f64::consts::PI * (r * c) as f64 / dim as f64;
            C64::from_polar(norm, phase)
        });
        BasisSpec { label: "x".into(), vectors: snap(vectors) }
    }

    /// Qubit σ_y eigenbasis, labelled `y`.
    pub fn qubit_y() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let vectors = CMatrix::from_row_slice(2, 2, &[C64::new(h, 0.0), C64::new(h, 0.0), C64::new(0.0, h), C64::new(0.0, -h)]);
        BasisSpec { label: "y".into(), vectors }
    }

    /// Real qubit basis {cos θ|0⟩ + sin θ|1⟩, −sin θ|0⟩ + cos θ|1⟩}.
    pub fn qubit_rotation(label: impl Into<String>, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let vectors = CMatrix::from_row_slice(2, 2, &[C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)]);
        BasisSpec { label: label.into(), vectors }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i).iter().copied().collect()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

// Rounds away the ~1e-17 residue that trig leaves on exact zeros.
fn snap(mut m: CMatrix) -> CMatrix {
    for v in m.iter_mut() {
        if v.re.abs() < 1e-15 {
            v.re = 0.0;
        }
        if v.im.abs() < 1e-15 {
            v.im = 0.0;
        }
    }
    m
}

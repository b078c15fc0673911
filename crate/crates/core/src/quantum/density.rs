use nalgebra::SymmetricEigen;

use super::{entropy_bits, matricize, BasisSpec, CMatrix, PureState, QuantumError, Result, SubsystemId, SubsystemLabel, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub factors: Vec<SubsystemLabel>,
    pub matrix: CMatrix,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    /// Eigenpairs (value, vector) in descending order of value.
    pub fn eigenpairs(&self) -> Vec<(f64, nalgebra::DVector<C64>)> {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut pairs: Vec<(f64, nalgebra::DVector<C64>)> = eig
            .eigenvalues
            .iter()
            .zip(eig.eigenvectors.column_iter())
            .map(|(&v, col)| (v, col.into_owned()))
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        pairs
    }

    pub fn entropy_bits(&self) -> f64 {
        entropy_bits(&self.eigenvalues())
    }

    /// Hermitian, unit trace and positive semidefinite within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let herm = super::max_abs(&(&self.matrix - self.matrix.adjoint())) <= tol;
        let trace = (self.trace() - C64::new(1.0, 0.0)).norm() <= tol;
        herm && trace && self.eigenvalues().iter().all(|&e| e >= -tol)
    }

    /// Matrix elements in the given basis: B† ρ B.
    pub fn in_basis(&self, basis: &BasisSpec) -> CMatrix {
        basis.matrix().adjoint() * &self.matrix * basis.matrix()
    }

    /// Probabilities of the basis vectors.
    pub fn populations(&self, basis: &BasisSpec) -> Vec<f64> {
        let m = self.in_basis(basis);
        (0..m.nrows()).map(|i| m[(i, i)].re.max(0.0)).collect()
    }
}

/// Partial trace over every factor not in `keep`. The kept factors appear in
/// state order.
pub fn reduced_density(state: &PureState, keep: &[SubsystemId]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(QuantumError::BadBipartition("nothing to keep".into()));
    }
    for id in keep {
        if !state.contains(*id) {
            return Err(QuantumError::UnknownSubsystem(*id));
        }
    }
    let ordered: Vec<SubsystemLabel> = state.factors().iter().copied().filter(|f| keep.contains(&f.id)).collect();
    let ids: Vec<SubsystemId> = ordered.iter().map(|f| f.id).collect();
    let m = matricize(state, &ids)?;
    Ok(DensityMatrix { factors: ordered, matrix: &m * m.adjoint() })
}

/// Dephasing channel in the pointer basis: off-diagonal elements are scaled
/// by (1 − λ).
pub fn dephase(rho: &DensityMatrix, pointer: &BasisSpec, lambda: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&lambda) || lambda.is_nan() {
        return Err(QuantumError::LambdaOutOfRange(lambda));
    }
    if pointer.dim() != rho.dim() {
        return Err(QuantumError::DimensionMismatch { expected: rho.dim(), found: pointer.dim() });
    }
    let mut m = rho.in_basis(pointer);
    let keep = 1.0 - lambda;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if r != c {
                m[(r, c)] *= keep;
            }
        }
    }
    let b = pointer.matrix();
    Ok(DensityMatrix { factors: rho.factors.clone(), matrix: b * m * b.adjoint() })
}

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{is_unitary, BasisSpec, CMatrix, QuantumError, Result, C64, MAX_TOTAL_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubsystemId(pub u32);

impl fmt::Display for SubsystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubsystemLabel {
    pub id: SubsystemId,
    pub dim: usize,
}

impl SubsystemLabel {
    pub fn new(id: u32, dim: usize) -> Self {
        SubsystemLabel { id: SubsystemId(id), dim }
    }
}

/// Amplitude vector over an ordered list of labelled factors.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    factors: Vec<SubsystemLabel>,
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Validates shape, factor labels and normalization.
    pub fn new(factors: Vec<SubsystemLabel>, amplitudes: Vec<C64>, norm_tol: f64) -> Result<Self> {
        check_factors(&factors)?;
        let total = total_dim(&factors);
        if amplitudes.len() != total {
            return Err(QuantumError::DimensionMismatch { expected: total, found: amplitudes.len() });
        }
        let state = PureState { factors, amplitudes };
        let n = state.norm_sqr();
        if (n - 1.0).abs() > norm_tol {
            return Err(QuantumError::NotNormalized(n));
        }
        Ok(state)
    }

    /// The unique state with no factors (a single unit amplitude).
    pub fn empty() -> Self {
        PureState { factors: Vec::new(), amplitudes: vec![C64::new(1.0, 0.0)] }
    }

    pub(crate) fn from_parts_unchecked(factors: Vec<SubsystemLabel>, amplitudes: Vec<C64>) -> Self {
        debug_assert_eq!(total_dim(&factors), amplitudes.len());
        PureState { factors, amplitudes }
    }

    pub fn factors(&self) -> &[SubsystemLabel] {
        &self.factors
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn position(&self, id: SubsystemId) -> Option<usize> {
        self.factors.iter().position(|f| f.id == id)
    }

    pub fn label(&self, id: SubsystemId) -> Option<SubsystemLabel> {
        self.factors.iter().copied().find(|f| f.id == id)
    }

    pub fn contains(&self, id: SubsystemId) -> bool {
        self.position(id).is_some()
    }

    /// Appends a fresh factor in the given local state.
    pub fn tensor_with(&self, label: SubsystemLabel, local: &[C64]) -> Result<PureState> {
        if local.len() != label.dim {
            return Err(QuantumError::DimensionMismatch { expected: label.dim, found: local.len() });
        }
        let mut factors = self.factors.clone();
        factors.push(label);
        check_factors(&factors)?;
        let mut amplitudes = Vec::with_capacity(self.amplitudes.len() * local.len());
        for a in &self.amplitudes {
            for b in local {
                amplitudes.push(a * b);
            }
        }
        Ok(PureState { factors, amplitudes })
    }

    /// Euclidean distance to another state with the same factor order.
    pub fn distance(&self, other: &PureState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// |<self|other>|, with both states in the same factor order.
    pub fn overlap(&self, other: &PureState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .norm()
    }

    /// Reorders factors to `order`, permuting amplitudes accordingly.
    pub fn permuted(&self, order: &[SubsystemId]) -> Result<PureState> {
        if order.len() != self.factors.len() {
            return Err(QuantumError::DimensionMismatch { expected: self.factors.len(), found: order.len() });
        }
        let m = matricize(self, order)?;
        let factors = order.iter().map(|&id| self.label(id).unwrap()).collect();
        Ok(PureState { factors, amplitudes: m.column(0).iter().copied().collect() })
    }
}

pub(crate) fn total_dim(factors: &[SubsystemLabel]) -> usize {
    factors.iter().map(|f| f.dim).product()
}

fn check_factors(factors: &[SubsystemLabel]) -> Result<()> {
    let mut total: usize = 1;
    for (i, f) in factors.iter().enumerate() {
        if f.dim < 2 {
            return Err(QuantumError::BadDimension(f.dim));
        }
        if factors[..i].iter().any(|g| g.id == f.id) {
            return Err(QuantumError::DuplicateSubsystem(f.id));
        }
        total = total.saturating_mul(f.dim);
        if total > MAX_TOTAL_DIM {
            return Err(QuantumError::CapacityExceeded { dim: total, cap: MAX_TOTAL_DIM });
        }
    }
    Ok(())
}

/// Tensor product of normalized local states, in the given factor order.
pub fn make_product_state(local_states: &[(SubsystemLabel, Vec<C64>)], norm_tol: f64) -> Result<PureState> {
    let mut state = PureState::empty();
    for (label, vector) in local_states {
        if vector.len() != label.dim {
            return Err(QuantumError::DimensionMismatch { expected: label.dim, found: vector.len() });
        }
        let n: f64 = vector.iter().map(|a| a.norm_sqr()).sum();
        if (n - 1.0).abs() > norm_tol {
            return Err(QuantumError::NotNormalized(n));
        }
        state = state.tensor_with(*label, vector)?;
    }
    Ok(state)
}

/// Reshapes the amplitudes into a matrix whose rows run over the `rows`
/// factors (in the given order) and whose columns run over the remaining
/// factors (in state order).
pub fn matricize(state: &PureState, rows: &[SubsystemId]) -> Result<CMatrix> {
    let (row_pos, col_pos) = split_positions(state, rows)?;
    let dims: Vec<usize> = state.factors.iter().map(|f| f.dim).collect();
    let nrows: usize = row_pos.iter().map(|&p| dims[p]).product();
    let ncols: usize = col_pos.iter().map(|&p| dims[p]).product();
    let row_stride = place_strides(&dims, &row_pos);
    let col_stride = place_strides(&dims, &col_pos);

    let mut m = CMatrix::zeros(nrows, ncols);
    let mut digits = vec![0usize; dims.len()];
    for amp in state.amplitudes.iter() {
        let r: usize = row_stride.iter().map(|&(p, s)| digits[p] * s).sum();
        let c: usize = col_stride.iter().map(|&(p, s)| digits[p] * s).sum();
        m[(r, c)] = *amp;
        increment(&mut digits, &dims);
    }
    Ok(m)
}

/// Inverse of [`matricize`]: rebuilds amplitudes in `factors` order.
pub(crate) fn dematricize(factors: &[SubsystemLabel], rows: &[SubsystemId], m: &CMatrix) -> PureState {
    let template = PureState::from_parts_unchecked(factors.to_vec(), vec![C64::new(0.0, 0.0); total_dim(factors)]);
    let (row_pos, col_pos) = split_positions(&template, rows).expect("rows validated by caller");
    let dims: Vec<usize> = factors.iter().map(|f| f.dim).collect();
    let row_stride = place_strides(&dims, &row_pos);
    let col_stride = place_strides(&dims, &col_pos);
    let mut amplitudes = Vec::with_capacity(template.amplitudes.len());
    let mut digits = vec![0usize; dims.len()];
    for _ in 0..template.amplitudes.len() {
        let r: usize = row_stride.iter().map(|&(p, s)| digits[p] * s).sum();
        let c: usize = col_stride.iter().map(|&(p, s)| digits[p] * s).sum();
        amplitudes.push(m[(r, c)]);
        increment(&mut digits, &dims);
    }
    PureState::from_parts_unchecked(factors.to_vec(), amplitudes)
}

fn split_positions(state: &PureState, rows: &[SubsystemId]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut row_pos = Vec::with_capacity(rows.len());
    for (i, &id) in rows.iter().enumerate() {
        if rows[..i].contains(&id) {
            return Err(QuantumError::DuplicateSubsystem(id));
        }
        row_pos.push(state.position(id).ok_or(QuantumError::UnknownSubsystem(id))?);
    }
    let col_pos = (0..state.factors.len()).filter(|p| !row_pos.contains(p)).collect();
    Ok((row_pos, col_pos))
}

/// (factor position, stride) pairs for a row-major index over `positions`.
fn place_strides(dims: &[usize], positions: &[usize]) -> Vec<(usize, usize)> {
    let mut out = vec![(0, 0); positions.len()];
    let mut stride = 1;
    for (k, &p) in positions.iter().enumerate().rev() {
        out[k] = (p, stride);
        stride *= dims[p];
    }
    out
}

fn increment(digits: &mut [usize], dims: &[usize]) {
    for k in (0..digits.len()).rev() {
        digits[k] += 1;
        if digits[k] < dims[k] {
            return;
        }
        digits[k] = 0;
    }
}

/// Applies `u` to the listed factors (in the listed order); other factors are
/// untouched.
pub fn apply_unitary(state: &PureState, u: &CMatrix, targets: &[SubsystemId], norm_tol: f64) -> Result<PureState> {
    let m = matricize(state, targets)?;
    if u.nrows() != m.nrows() || u.ncols() != m.nrows() {
        return Err(QuantumError::DimensionMismatch { expected: m.nrows(), found: u.nrows() });
    }
    if !is_unitary(u, norm_tol) {
        let dev = super::identity_deviation(&(u.adjoint() * u));
        return Err(QuantumError::NotUnitary(dev));
    }
    Ok(dematricize(&state.factors, targets, &(u * m)))
}

/// Weight of each basis pair: `W[i][j] = || (<u_i| ⊗ <v_j| ⊗ 1) ψ ||²`, where
/// `u` runs over `x_basis` on the `x` factors and `v` over `y_basis` on the
/// `y` factors. For a state on exactly `x ∪ y` these are the squared
/// magnitudes of the basis-pair amplitudes.
pub fn basis_weights(
    state: &PureState,
    x: &[SubsystemId],
    y: &[SubsystemId],
    x_basis: &BasisSpec,
    y_basis: &BasisSpec,
) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<SubsystemId> = x.iter().chain(y).copied().collect();
    let m = matricize(state, &rows)?;
    let dx = dims_of(state, x)?;
    let dy = dims_of(state, y)?;
    if x_basis.dim() != dx {
        return Err(QuantumError::DimensionMismatch { expected: dx, found: x_basis.dim() });
    }
    if y_basis.dim() != dy {
        return Err(QuantumError::DimensionMismatch { expected: dy, found: y_basis.dim() });
    }
    let change = x_basis.matrix().adjoint().kronecker(&y_basis.matrix().adjoint());
    let t = change * m;
    let mut w = vec![vec![0.0; dy]; dx];
    for (i, row) in w.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = t.row(i * dy + j).iter().map(|a| a.norm_sqr()).sum();
        }
    }
    Ok(w)
}

pub(crate) fn dims_of(state: &PureState, ids: &[SubsystemId]) -> Result<usize> {
    ids.iter()
        .map(|&id| state.label(id).map(|l| l.dim).ok_or(QuantumError::UnknownSubsystem(id)))
        .product()
}

/// Permutation unitary on (control ⊗ target) mapping |i⟩|j⟩ → |i⟩|(i+j) mod d_t⟩.
/// Requires `control_dim <= target_dim` so that a ready |0⟩ target copies the
/// control index faithfully.
pub fn controlled_shift(control_dim: usize, target_dim: usize) -> Result<CMatrix> {
    if control_dim < 2 {
        return Err(QuantumError::BadDimension(control_dim));
    }
    if target_dim < control_dim {
        return Err(QuantumError::DimensionMismatch { expected: control_dim, found: target_dim });
    }
    let n = control_dim * target_dim;
    let mut u = CMatrix::zeros(n, n);
    for i in 0..control_dim {
        for j in 0..target_dim {
            let from = i * target_dim + j;
            let to = i * target_dim + (i + j) % target_dim;
            u[(to, from)] = C64::new(1.0, 0.0);
        }
    }
    Ok(u)
}

/// Measurement-type coupling copying a basis index into a ready pointer:
/// |i⟩⊗|0⟩ → |i⟩⊗|i⟩. Dimension 2 gives CNOT.
pub fn pointer_interaction(dim: usize) -> Result<CMatrix> {
    controlled_shift(dim, dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn qubit(id: u32) -> SubsystemLabel {
        SubsystemLabel::new(id, 2)
    }

    #[test]
    fn product_of_zeros() {
        let s = make_product_state(&[(qubit(0), vec![c(1.0), c(0.0)]), (qubit(1), vec![c(1.0), c(0.0)])], 1e-10)
            .unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0), c(0.0), c(0.0), c(0.0)]);
    }

    #[test]
    fn product_plus_zero() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = make_product_state(&[(qubit(0), vec![c(h), c(h)]), (qubit(1), vec![c(1.0), c(0.0)])], 1e-10).unwrap();
        let expect = [h, 0.0, h, 0.0];
        for (a, e) in s.amplitudes().iter().zip(expect) {
            assert!(close(a.re, e, 1e-15) && a.im == 0.0);
        }
    }

    #[test]
    fn product_rejects_bad_input() {
        assert!(matches!(
            make_product_state(&[(qubit(0), vec![c(1.0)])], 1e-10),
            Err(QuantumError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            make_product_state(&[(qubit(0), vec![c(1.0), c(1.0)])], 1e-10),
            Err(QuantumError::NotNormalized(_))
        ));
    }

    #[test]
    fn cap_is_enforced() {
        let mut s = PureState::empty();
        for i in 0..12 {
            s = s.tensor_with(qubit(i), &[c(1.0), c(0.0)]).unwrap();
        }
        assert_eq!(s.dim(), 4096);
        assert!(matches!(
            s.tensor_with(qubit(12), &[c(1.0), c(0.0)]),
            Err(QuantumError::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn cnot_makes_bell() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = make_product_state(&[(qubit(0), vec![c(h), c(h)]), (qubit(1), vec![c(1.0), c(0.0)])], 1e-10).unwrap();
        let out = apply_unitary(&s, &pointer_interaction(2).unwrap(), &[SubsystemId(0), SubsystemId(1)], 1e-10).unwrap();
        let expect = [h, 0.0, 0.0, h];
        for (a, e) in out.amplitudes().iter().zip(expect) {
            assert!(close(a.re, e, 1e-15));
        }
    }

    #[test]
    fn reversed_targets_use_reversed_roles() {
        // control on factor 1, target factor 0: |0⟩|1⟩ → |1⟩|1⟩
        let s = make_product_state(&[(qubit(0), vec![c(1.0), c(0.0)]), (qubit(1), vec![c(0.0), c(1.0)])], 1e-10)
            .unwrap();
        let out = apply_unitary(&s, &pointer_interaction(2).unwrap(), &[SubsystemId(1), SubsystemId(0)], 1e-10).unwrap();
        assert!(close(out.amplitudes()[3].re, 1.0, 1e-15));
    }

    #[test]
    fn apply_unitary_errors() {
        let s = make_product_state(&[(qubit(0), vec![c(1.0), c(0.0)])], 1e-10).unwrap();
        let not_u = CMatrix::from_element(2, 2, c(1.0));
        assert!(matches!(apply_unitary(&s, &not_u, &[SubsystemId(0)], 1e-10), Err(QuantumError::NotUnitary(_))));
        let id = CMatrix::identity(2, 2);
        assert!(matches!(
            apply_unitary(&s, &id, &[SubsystemId(7)], 1e-10),
            Err(QuantumError::UnknownSubsystem(SubsystemId(7)))
        ));
    }

    #[test]
    fn pointer_interaction_copies() {
        assert!(matches!(pointer_interaction(1), Err(QuantumError::BadDimension(1))));
        let s = make_product_state(&[(qubit(0), vec![c(0.0), c(1.0)]), (qubit(1), vec![c(1.0), c(0.0)])], 1e-10)
            .unwrap();
        let out = apply_unitary(&s, &pointer_interaction(2).unwrap(), &[SubsystemId(0), SubsystemId(1)], 1e-10).unwrap();
        assert!(close(out.amplitudes()[3].re, 1.0, 1e-15));
    }

    #[test]
    fn matricize_round_trip() {
        let factors = vec![qubit(0), SubsystemLabel::new(1, 3), qubit(2)];
        let amps: Vec<C64> = (0..12).map(|k| C64::new(k as f64, -(k as f64))).collect();
        let s = PureState::from_parts_unchecked(factors.clone(), amps);
        let rows = [SubsystemId(2), SubsystemId(0)];
        let m = matricize(&s, &rows).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (4, 3));
        // index (q0=1, q1=2, q2=1) = 1*6 + 2*2 + 1 = 11 → row (q2=1,q0=1)=3, col 2
        assert_eq!(m[(3, 2)], C64::new(11.0, -11.0));
        let back = dematricize(&factors, &rows, &m);
        assert_eq!(back, s);
    }
}

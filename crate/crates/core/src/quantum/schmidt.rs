use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::state::{dematricize, dims_of};
use super::{basis_weights, matricize, BasisSpec, CMatrix, PureState, QuantumError, Result, SubsystemId, SubsystemLabel, C64};

/// A split of a state's factors into two disjoint, covering sides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    pub left: Vec<SubsystemId>,
    pub right: Vec<SubsystemId>,
}

impl Bipartition {
    pub fn new(left: impl IntoIterator<Item = SubsystemId>, right: impl IntoIterator<Item = SubsystemId>) -> Self {
        Bipartition { left: left.into_iter().collect(), right: right.into_iter().collect() }
    }

    /// `left` against every other factor of `state`.
    pub fn against_rest(state: &PureState, left: &[SubsystemId]) -> Self {
        let right = state.factors().iter().map(|f| f.id).filter(|id| !left.contains(id)).collect();
        Bipartition { left: left.to_vec(), right }
    }

    /// Checks the cut against `state` and returns both sides in state order.
    fn ordered(&self, state: &PureState) -> Result<(Vec<SubsystemId>, Vec<SubsystemId>)> {
        for id in self.left.iter().chain(&self.right) {
            if !state.contains(*id) {
                return Err(QuantumError::BadBipartition(format!("{id} is not a factor of the state")));
            }
        }
        if self.left.iter().any(|id| self.right.contains(id)) {
            return Err(QuantumError::BadBipartition("sides overlap".into()));
        }
        if self.left.is_empty() || self.right.is_empty() {
            return Err(QuantumError::BadBipartition("empty side".into()));
        }
        let mut left = Vec::new();
        let mut right = Vec::new();
        for f in state.factors() {
            if self.left.contains(&f.id) {
                left.push(f.id);
            } else if self.right.contains(&f.id) {
                right.push(f.id);
            } else {
                return Err(QuantumError::BadBipartition(format!("{} is on neither side", f.id)));
            }
        }
        if left.len() != self.left.len() || right.len() != self.right.len() {
            return Err(QuantumError::BadBipartition("repeated subsystem".into()));
        }
        Ok((left, right))
    }
}

/// ψ = Σᵢ cᵢ |uᵢ⟩ ⊗ |vᵢ⟩ across one bipartition.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDecomposition {
    factors: Vec<SubsystemLabel>,
    pub left: Vec<SubsystemId>,
    pub right: Vec<SubsystemId>,
    /// Descending, all above the degeneracy tolerance.
    pub coefficients: Vec<f64>,
    /// Columns are the left Schmidt vectors.
    pub left_basis: CMatrix,
    /// Columns are the right Schmidt vectors.
    pub right_basis: CMatrix,
    /// Groups of coefficient indices equal within the degeneracy tolerance.
    pub degeneracy_classes: Vec<Vec<usize>>,
}

impl SchmidtDecomposition {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c * c).collect()
    }

    /// Rebuilds Σ cᵢ uᵢ ⊗ vᵢ in the source state's factor order.
    pub fn reconstruct(&self) -> PureState {
        let mut m = CMatrix::zeros(self.left_basis.nrows(), self.right_basis.nrows());
        for (i, &c) in self.coefficients.iter().enumerate() {
            m += self.left_basis.column(i) * self.right_basis.column(i).transpose() * C64::new(c, 0.0);
        }
        dematricize(&self.factors, &self.left, &m)
    }

    pub fn largest_class(&self) -> usize {
        self.degeneracy_classes.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// SVD-based Schmidt decomposition. Coefficients below `degen_tol` are
/// dropped; each left vector's largest entry is made real-positive.
pub fn schmidt_decompose(state: &PureState, cut: &Bipartition, degen_tol: f64) -> Result<SchmidtDecomposition> {
    let (left, right) = cut.ordered(state)?;
    let m = matricize(state, &left)?;
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    order.retain(|&k| svd.singular_values[k] > degen_tol);

    let dl = u.nrows();
    let dr = v_t.ncols();
    let r = order.len();
    let mut left_basis = CMatrix::zeros(dl, r);
    let mut right_basis = CMatrix::zeros(dr, r);
    let mut coefficients = Vec::with_capacity(r);
    for (i, &k) in order.iter().enumerate() {
        left_basis.set_column(i, &u.column(k));
        right_basis.set_column(i, &v_t.row(k).transpose());
        coefficients.push(svd.singular_values[k]);
    }
    fix_phases(&mut left_basis, &mut right_basis);

    Ok(SchmidtDecomposition {
        factors: state.factors().to_vec(),
        left,
        right,
        degeneracy_classes: degeneracy_classes(&coefficients, degen_tol),
        coefficients,
        left_basis,
        right_basis,
    })
}

fn fix_phases(left: &mut CMatrix, right: &mut CMatrix) {
    for i in 0..left.ncols() {
        let col = left.column(i);
        let max = col.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let Some(pivot) = col.iter().find(|a| a.norm() >= max - 1e-12) else { continue };
        let phase = pivot / pivot.norm();
        for a in left.column_mut(i).iter_mut() {
            *a *= phase.conj();
        }
        for a in right.column_mut(i).iter_mut() {
            *a *= phase;
        }
    }
}

/// Greedy grouping of a descending sequence: each class holds values within
/// `tol` of its first element, so every pair in a class is within `tol`.
fn degeneracy_classes(coefficients: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, &c) in coefficients.iter().enumerate() {
        match classes.last_mut() {
            Some(class) if coefficients[class[0]] - c <= tol => class.push(i),
            _ => classes.push(vec![i]),
        }
    }
    classes
}

/// True iff every cross term ⟨uᵢ⊗vⱼ|ψ⟩ with i ≠ j has magnitude ≤ `tol`.
pub fn is_schmidt_basis(state: &PureState, cut: &Bipartition, left: &BasisSpec, right: &BasisSpec, tol: f64) -> Result<bool> {
    let (l, r) = cut.ordered(state)?;
    let dl = dims_of(state, &l)?;
    let dr = dims_of(state, &r)?;
    if left.dim() != dl {
        return Err(QuantumError::DimensionMismatch { expected: dl, found: left.dim() });
    }
    if right.dim() != dr {
        return Err(QuantumError::DimensionMismatch { expected: dr, found: right.dim() });
    }
    let w = basis_weights(state, &l, &r, left, right)?;
    Ok(max_cross_amplitude(&w) <= tol)
}

/// Largest off-diagonal entry of a basis-pair weight table, as an amplitude.
pub(crate) fn max_cross_amplitude(w: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in w.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if i != j {
                worst = worst.max(x.sqrt());
            }
        }
    }
    worst
}

/// Rotates the Schmidt vectors of one degeneracy class by a real orthogonal
/// matrix: U ← U·R, V ← V·R, which leaves Σ cᵢ uᵢ vᵢᵀ unchanged.
pub fn rotate_degenerate_block(
    sd: &SchmidtDecomposition,
    class_index: usize,
    rotation: &DMatrix<f64>,
    norm_tol: f64,
) -> Result<SchmidtDecomposition> {
    let class = sd
        .degeneracy_classes
        .get(class_index)
        .ok_or(QuantumError::ClassOutOfRange { index: class_index, count: sd.degeneracy_classes.len() })?;
    let k = class.len();
    if rotation.nrows() != k || rotation.ncols() != k {
        return Err(QuantumError::DimensionMismatch { expected: k, found: rotation.nrows() });
    }
    let rtr = rotation.transpose() * rotation;
    let dev = (rtr - DMatrix::<f64>::identity(k, k)).abs().max();
    if dev > norm_tol {
        return Err(QuantumError::NotOrthogonal(dev));
    }
    let r = rotation.map(|x| C64::new(x, 0.0));
    let mut out = sd.clone();
    for (side_in, side_out) in [(&sd.left_basis, &mut out.left_basis), (&sd.right_basis, &mut out.right_basis)] {
        for (a, &dst) in class.iter().enumerate() {
            let mut col = nalgebra::DVector::<C64>::zeros(side_in.nrows());
            for (b, &src) in class.iter().enumerate() {
                col += side_in.column(src) * r[(b, a)];
            }
            side_out.set_column(dst, &col);
        }
    }
    fix_phases(&mut out.left_basis, &mut out.right_basis);
    Ok(out)
}

impl SchmidtDecomposition {
    /// Completes the Schmidt vectors of each side to a full orthonormal basis
    /// (Gram–Schmidt against the standard basis), for use with
    /// [`is_schmidt_basis`].
    pub fn completed_bases(&self, label: &str) -> (BasisSpec, BasisSpec) {
        (complete(&self.left_basis, label), complete(&self.right_basis, label))
    }
}

fn complete(partial: &CMatrix, label: &str) -> BasisSpec {
    let d = partial.nrows();
    let mut cols: Vec<nalgebra::DVector<C64>> = partial.column_iter().map(|c| c.into_owned()).collect();
    for e in 0..d {
        if cols.len() == d {
            break;
        }
        let mut v = nalgebra::DVector::<C64>::zeros(d);
        v[e] = C64::new(1.0, 0.0);
        for c in &cols {
            let proj = c.dotc(&v);
            v -= c * proj;
        }
        let n = v.norm();
        if n > 1e-6 {
            cols.push(v / C64::new(n, 0.0));
        }
    }
    let m = CMatrix::from_columns(&cols);
    BasisSpec::new(label, m, 1e-8).expect("Gram-Schmidt output is orthonormal")
}

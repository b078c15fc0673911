use std::fmt;

use serde::{Deserialize, Serialize};

use crate::quantum::{CMatrix, PureState, SchmidtDecomposition, SubsystemId, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cpl,
    Orthodox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObserverId(pub u32);

impl fmt::Display for ObserverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "o{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FactId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Observer {
    pub id: ObserverId,
    /// Sorted subsystem ids.
    pub members: Vec<SubsystemId>,
    pub dim: usize,
    /// Label of the basis the environment monitors this observer in.
    pub pointer: String,
    pub retired: bool,
}

/// One relative fact in an observer's ledger: relative to `holder`, the
/// variable named by `basis` of `target` has value `value`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RelativeFact {
    pub id: FactId,
    pub holder: ObserverId,
    pub target: ObserverId,
    pub basis: String,
    pub value: usize,
    /// Basis of the holder's own variables that stores the fact.
    pub holder_basis: String,
    /// Observer this fact was read from, for facts acquired by read-out.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub via: Option<ObserverId>,
    pub event_id: u64,
    pub live: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub destroyed_by: Option<u64>,
}

impl RelativeFact {
    pub fn key(&self) -> FactKey {
        FactKey { target: self.target, basis: self.basis.clone() }
    }

    pub fn shared(&self) -> SharedFact {
        SharedFact { target: self.target, basis: self.basis.clone(), value: self.value }
    }
}

/// (target, basis): the variable a fact is about.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FactKey {
    pub target: ObserverId,
    pub basis: String,
}

/// (target, basis, value): a fact's content, independent of its holder.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SharedFact {
    pub target: ObserverId,
    pub basis: String,
    pub value: usize,
}

impl SharedFact {
    pub fn new(target: ObserverId, basis: impl Into<String>, value: usize) -> Self {
        SharedFact { target, basis: basis.into(), value }
    }

    pub fn key(&self) -> FactKey {
        FactKey { target: self.target, basis: self.basis.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Coupling {
    /// Copies the observed system's index (in its declared basis) into the
    /// observer's declared basis.
    Pointer,
    Identity,
    /// Explicit unitary on (x members ⊗ y members), rows of [re, im] pairs.
    Matrix(Vec<Vec<[f64; 2]>>),
}

impl Coupling {
    pub fn matrix(&self) -> Option<CMatrix> {
        match self {
            Coupling::Matrix(rows) => {
                let n = rows.len();
                Some(CMatrix::from_fn(n, n, |r, c| rows[r].get(c).map_or(C64::new(f64::NAN, 0.0), |p| C64::new(p[0], p[1]))))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InteractionSpec {
    pub coupling: Coupling,
    /// Basis on the observer side `x`; labels the facts `y` holds about `x`.
    pub basis_x: String,
    /// Basis on the observed side `y`; labels the facts `x` holds about `y`.
    pub basis_y: String,
    #[serde(default)]
    pub dephase_lambda: f64,
    /// Environment pointer basis for `y`; defaults to the observer's own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pointer: Option<String>,
}

impl InteractionSpec {
    pub fn pointer(basis: &str) -> Self {
        InteractionSpec {
            coupling: Coupling::Pointer,
            basis_x: basis.to_string(),
            basis_y: basis.to_string(),
            dephase_lambda: 0.0,
            pointer: None,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.dephase_lambda = lambda;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SchmidtSummary {
    pub left: Vec<SubsystemId>,
    pub right: Vec<SubsystemId>,
    pub coefficients: Vec<f64>,
    pub degeneracy_classes: Vec<Vec<usize>>,
}

impl From<&SchmidtDecomposition> for SchmidtSummary {
    fn from(sd: &SchmidtDecomposition) -> Self {
        SchmidtSummary {
            left: sd.left.clone(),
            right: sd.right.clone(),
            coefficients: sd.coefficients.clone(),
            degeneracy_classes: sd.degeneracy_classes.clone(),
        }
    }
}

/// Amplitudes as [re, im] pairs, row-major over `factors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub factors: Vec<(SubsystemId, usize)>,
    pub amplitudes: Vec<[f64; 2]>,
}

impl From<&PureState> for StateSnapshot {
    fn from(s: &PureState) -> Self {
        StateSnapshot {
            factors: s.factors().iter().map(|f| (f.id, f.dim)).collect(),
            amplitudes: s.amplitudes().iter().map(|a| [a.re, a.im]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InteractionEvent {
    pub event_id: u64,
    pub time: u64,
    pub x: ObserverId,
    pub y: ObserverId,
    pub spec: InteractionSpec,
    /// Decomposition across x | everything else.
    pub schmidt: SchmidtSummary,
    /// Born weights over the declared basis pairs (i, i).
    pub weights: Vec<f64>,
    pub sampled_index: usize,
    pub environment_hit: bool,
    pub created_facts: Vec<FactId>,
    pub destroyed_facts: Vec<FactId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSnapshot>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReadoutKind {
    Cpl,
    Orthodox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReadoutEvent {
    pub event_id: u64,
    pub time: u64,
    pub kind: ReadoutKind,
    pub reader: ObserverId,
    pub holder: ObserverId,
    pub target: ObserverId,
    pub basis: String,
    pub outcome: usize,
    /// Cross-perspective mode: whether the holder's stored fact was in the
    /// requested basis.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matched: Option<bool>,
    /// Orthodox mode: the reader already held this fact and nothing coupled.
    pub replayed: bool,
    /// Set when comparing this outcome with the holder's facts is only
    /// meaningful as outside analysis.
    pub analysis_only: bool,
    pub reader_fact: FactId,
    /// The holder's live fact about the target after the event.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holder_fact: Option<FactId>,
    pub created_facts: Vec<FactId>,
    pub destroyed_facts: Vec<FactId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EnvironmentEvent {
    pub event_id: u64,
    pub time: u64,
    pub system: ObserverId,
    pub pointer: String,
    pub lambda: f64,
    pub hit: bool,
    pub destroyed_facts: Vec<FactId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RetireEvent {
    pub event_id: u64,
    pub time: u64,
    pub observer: ObserverId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum LedgerEvent {
    Interaction(InteractionEvent),
    Readout(ReadoutEvent),
    Environment(EnvironmentEvent),
    Retire(RetireEvent),
}

impl LedgerEvent {
    pub fn event_id(&self) -> u64 {
        match self {
            LedgerEvent::Interaction(e) => e.event_id,
            LedgerEvent::Readout(e) => e.event_id,
            LedgerEvent::Environment(e) => e.event_id,
            LedgerEvent::Retire(e) => e.event_id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadoutOutcome {
    pub outcome: usize,
    /// Always `true` in orthodox mode (there is nothing to match against).
    pub matched: bool,
    pub event_id: u64,
}

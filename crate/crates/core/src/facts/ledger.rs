use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::types::*;
use super::{BasisLibrary, LedgerError, Result};
use crate::quantum::{
    apply_unitary, basis_weights, born_sample, matricize, max_cross_amplitude, schmidt_decompose, BasisSpec,
    Bipartition, CMatrix, DensityMatrix, PureState, QuantumError, SubsystemId, SubsystemLabel, Tolerances, C64,
    MAX_TOTAL_DIM,
};

/// States are embedded in events only up to this many amplitudes (6 qubits).
const EMBED_MAX_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LedgerConfig {
    pub tolerances: Tolerances,
    /// Attach the post-event state to each event (small states only).
    pub embed_states: bool,
}

#[derive(Debug, Clone)]
struct Subsystem {
    dim: usize,
    /// Local state until the subsystem first takes part in a coupling.
    init: Vec<C64>,
    retired: bool,
}

/// One trial's bookkeeping: the god's-eye pure state, the observers, every
/// relative fact ever created and the append-only event log.
///
/// Fresh systems stay outside the tracked state until they first couple, so
/// registering is cheap. Retired systems and environment records are folded
/// into a single purifying factor, which keeps long experiments under the
/// dimension cap.
#[derive(Debug, Clone)]
pub struct Ledger {
    mode: Mode,
    config: LedgerConfig,
    bases: BasisLibrary,
    state: PureState,
    subsystems: BTreeMap<SubsystemId, Subsystem>,
    /// Registered, not retired, not yet in `state`.
    pending: BTreeSet<SubsystemId>,
    observers: Vec<Observer>,
    facts: Vec<RelativeFact>,
    /// Live fact ids per holder, in creation order.
    live: BTreeMap<ObserverId, Vec<FactId>>,
    events: Vec<LedgerEvent>,
    next_subsystem: u32,
    next_event: u64,
}

impl Ledger {
    pub fn new(mode: Mode, config: LedgerConfig) -> Self {
        Ledger {
            mode,
            config,
            bases: BasisLibrary::default(),
            state: PureState::empty(),
            subsystems: BTreeMap::new(),
            pending: BTreeSet::new(),
            observers: Vec::new(),
            facts: Vec::new(),
            live: BTreeMap::new(),
            events: Vec::new(),
            next_subsystem: 0,
            next_event: 0,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn config(&self) -> &LedgerConfig {
        &self.config
    }

    /// The tracked state. Registered systems that have not coupled yet are
    /// not part of it.
    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn observers(&self) -> &[Observer] {
        &self.observers
    }

    pub fn observer(&self, id: ObserverId) -> Result<&Observer> {
        self.observers.get(id.0 as usize).ok_or(LedgerError::UnknownObserver(id))
    }

    pub fn facts(&self) -> &[RelativeFact] {
        &self.facts
    }

    pub fn fact(&self, id: FactId) -> Option<&RelativeFact> {
        self.facts.get(id.0 as usize)
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    pub fn register_basis(&mut self, basis: BasisSpec) {
        self.bases.register(basis);
    }

    pub fn basis(&self, label: &str, dim: usize) -> Result<BasisSpec> {
        self.bases.get(label, dim)
    }

    /// Dimension the state would have if every live system were tracked.
    pub fn active_dim(&self) -> usize {
        self.pending.iter().fold(self.state.dim(), |acc, id| acc.saturating_mul(self.subsystems[id].dim))
    }

    /// A fresh micro-observer in |0⟩ with pointer basis `z`.
    pub fn register_system(&mut self, dim: usize) -> Result<ObserverId> {
        if dim < 2 {
            return Err(QuantumError::BadDimension(dim).into());
        }
        let mut init = vec![C64::new(0.0, 0.0); dim];
        init[0] = C64::new(1.0, 0.0);
        self.add_system(init)
    }

    /// A fresh micro-observer in the given normalized local state.
    pub fn register_prepared(&mut self, local: Vec<C64>) -> Result<ObserverId> {
        if local.len() < 2 {
            return Err(QuantumError::BadDimension(local.len()).into());
        }
        let n: f64 = local.iter().map(|a| a.norm_sqr()).sum();
        if (n - 1.0).abs() > self.config.tolerances.norm_tol {
            return Err(QuantumError::NotNormalized(n).into());
        }
        self.add_system(local)
    }

    fn add_system(&mut self, init: Vec<C64>) -> Result<ObserverId> {
        let dim = init.len();
        let total = self.active_dim().saturating_mul(dim);
        if total > MAX_TOTAL_DIM {
            return Err(LedgerError::CapacityExceeded { dim: total, cap: MAX_TOTAL_DIM });
        }
        let sid = self.fresh_subsystem_id();
        self.subsystems.insert(sid, Subsystem { dim, init, retired: false });
        self.pending.insert(sid);
        Ok(self.push_observer(vec![sid], dim))
    }

    /// An observer made of the union of existing observers' subsystems.
    pub fn register_group(&mut self, parts: &[ObserverId]) -> Result<ObserverId> {
        let mut members = BTreeSet::new();
        for &p in parts {
            members.extend(self.active(p)?.members.iter().copied());
        }
        if members.len() < 2 {
            return Err(LedgerError::InvalidSpec("a group needs at least two subsystems".into()));
        }
        let members: Vec<SubsystemId> = members.into_iter().collect();
        if let Some(o) = self.observers.iter().find(|o| o.members == members) {
            return Err(LedgerError::OverlappingObservers(o.id, o.id));
        }
        let dim = members.iter().map(|m| self.subsystems[m].dim).product();
        Ok(self.push_observer(members, dim))
    }

    fn push_observer(&mut self, members: Vec<SubsystemId>, dim: usize) -> ObserverId {
        let id = ObserverId(self.observers.len() as u32);
        self.observers.push(Observer { id, members, dim, pointer: "z".into(), retired: false });
        id
    }

    fn fresh_subsystem_id(&mut self) -> SubsystemId {
        let id = SubsystemId(self.next_subsystem);
        self.next_subsystem += 1;
        id
    }

    /// Sets the basis the environment monitors `id` in.
    pub fn set_pointer(&mut self, id: ObserverId, label: &str) -> Result<()> {
        let dim = self.active(id)?.dim;
        self.bases.get(label, dim)?;
        self.observers[id.0 as usize].pointer = label.to_string();
        Ok(())
    }

    /// Applies a unitary to the listed observers (in order) as state
    /// preparation: no event, no facts.
    pub fn prepare(&mut self, targets: &[ObserverId], u: &CMatrix) -> Result<()> {
        let mut st = self.state.clone();
        let mut ids = Vec::new();
        for &t in targets {
            let o = self.active(t)?;
            if o.members.iter().any(|m| ids.contains(m)) {
                return Err(LedgerError::OverlappingObservers(t, t));
            }
            ids.extend(o.members.iter().copied());
            st = self.materialize(st, t)?;
        }
        st = apply_unitary(&st, u, &ids, self.config.tolerances.norm_tol)?;
        self.commit_state(st);
        Ok(())
    }

    /// Reduced state of one observer, with its subsystems in member order.
    pub fn marginal(&self, id: ObserverId) -> Result<DensityMatrix> {
        let o = self.active(id)?;
        let labels: Vec<SubsystemLabel> =
            o.members.iter().map(|m| SubsystemLabel { id: *m, dim: self.subsystems[m].dim }).collect();
        if let [m] = o.members.as_slice() {
            if !self.state.contains(*m) {
                let v = nalgebra::DVector::from_column_slice(&self.subsystems[m].init);
                return Ok(DensityMatrix { factors: labels, matrix: &v * v.adjoint() });
            }
        }
        let st = self.materialize(self.state.clone(), id)?;
        let m = matricize(&st, &o.members)?;
        Ok(DensityMatrix { factors: labels, matrix: &m * m.adjoint() })
    }

    /// The holder's live fact about `target`, if any.
    pub fn live_fact(&self, holder: ObserverId, target: ObserverId) -> Option<&RelativeFact> {
        self.live_facts(holder).rev().find(|f| f.target == target)
    }

    /// The holder's live facts in creation order.
    pub fn live_facts(&self, holder: ObserverId) -> impl DoubleEndedIterator<Item = &RelativeFact> {
        self.live.get(&holder).into_iter().flatten().map(|id| &self.facts[id.0 as usize])
    }

    /// Facts held by `id`, ordered by creating event.
    pub fn facts_of(&self, id: ObserverId, live_only: bool) -> Result<Vec<&RelativeFact>> {
        self.observer(id)?;
        let mut out: Vec<&RelativeFact> =
            self.facts.iter().filter(|f| f.holder == id && (f.live || !live_only)).collect();
        out.sort_by_key(|f| (f.event_id, f.id));
        Ok(out)
    }

    /// Couples `x` (observer side) to `y` (observed side) and creates the
    /// reciprocal pair of relative facts from one Born draw over the declared
    /// basis pairs. Atomic: on any error the ledger is unchanged, although
    /// random numbers may have been consumed.
    pub fn interact<R: Rng + ?Sized>(
        &mut self,
        x: ObserverId,
        y: ObserverId,
        spec: &InteractionSpec,
        rng: &mut R,
    ) -> Result<&InteractionEvent> {
        let tol = self.config.tolerances;
        let xo = self.active(x)?.clone();
        let yo = self.active(y)?.clone();
        if x == y || xo.members.iter().any(|m| yo.members.contains(m)) {
            return Err(LedgerError::OverlappingObservers(x, y));
        }
        if !(0.0..=1.0).contains(&spec.dephase_lambda) {
            return Err(QuantumError::LambdaOutOfRange(spec.dephase_lambda).into());
        }
        let bx = self.bases.get(&spec.basis_x, xo.dim)?;
        let by = self.bases.get(&spec.basis_y, yo.dim)?;
        let pointer_label = spec.pointer.clone().unwrap_or_else(|| yo.pointer.clone());
        let pointer = self.bases.get(&pointer_label, yo.dim)?;

        let mut st = self.materialize(self.state.clone(), x)?;
        st = self.materialize(st, y)?;
        let targets: Vec<SubsystemId> = xo.members.iter().chain(&yo.members).copied().collect();
        match &spec.coupling {
            Coupling::Identity => {}
            Coupling::Pointer => {
                if xo.dim < yo.dim {
                    return Err(LedgerError::InvalidSpec(format!(
                        "pointer coupling needs observer dimension {} >= observed dimension {}",
                        xo.dim, yo.dim
                    )));
                }
                st = apply_unitary(&st, &copy_unitary(bx.matrix(), by.matrix()), &targets, tol.norm_tol)?;
            }
            Coupling::Matrix(rows) => {
                let n = xo.dim * yo.dim;
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(LedgerError::InvalidSpec(format!("coupling matrix must be {n}x{n}")));
                }
                st = apply_unitary(&st, &spec.coupling.matrix().expect("matrix coupling"), &targets, tol.norm_tol)?;
            }
        }
        let hit = spec.dephase_lambda > 0.0 && rng.random::<f64>() < spec.dephase_lambda;
        if hit {
            st = self.environment_copy(st, &yo.members, &pointer)?;
        }

        let w = basis_weights(&st, &xo.members, &yo.members, &bx, &by)?;
        let defect = max_cross_amplitude(&w);
        if defect > tol.norm_tol {
            return Err(LedgerError::BasisNotSchmidt { defect });
        }
        let diag: Vec<f64> = (0..xo.dim.min(yo.dim)).map(|i| w[i][i]).collect();
        let total: f64 = diag.iter().sum();
        let weights: Vec<f64> = diag.iter().map(|p| p / total).collect();
        let index = born_sample(&weights, tol.norm_tol, rng)?;
        let sd = schmidt_decompose(&st, &Bipartition::against_rest(&st, &xo.members), tol.degen_tol)?;

        let event_id = self.next_event;
        self.commit_state(st);
        let mut destroyed = Vec::new();
        if hit {
            destroyed.extend(self.destroy(event_id, &[y], |f| f.holder_basis != pointer_label));
        }
        destroyed.extend(self.destroy(event_id, &[x, y], |f| {
            (f.holder == x && (f.target == y || f.holder_basis != spec.basis_x))
                || (f.holder == y && (f.target == x || f.holder_basis != spec.basis_y))
        }));
        let created = vec![
            self.create(x, y, &spec.basis_y, index, &spec.basis_x, None, event_id),
            self.create(y, x, &spec.basis_x, index, &spec.basis_y, None, event_id),
        ];
        let event = InteractionEvent {
            event_id,
            time: event_id,
            x,
            y,
            spec: spec.clone(),
            schmidt: SchmidtSummary::from(&sd),
            weights,
            sampled_index: index,
            environment_hit: hit,
            created_facts: created,
            destroyed_facts: destroyed,
            state: self.snapshot(),
        };
        self.push_event(LedgerEvent::Interaction(event));
        match self.events.last() {
            Some(LedgerEvent::Interaction(e)) => Ok(e),
            _ => unreachable!("interaction event just pushed"),
        }
    }

    /// Cross-perspective read-out: `bob` measures the variable of `alice`
    /// that stores her fact about `target`, in basis `basis`.
    ///
    /// On a basis match the stored value is revealed. Otherwise the outcome is
    /// drawn from alice's marginal in the requested basis, her old fact is
    /// destroyed and replaced by one in the requested basis.
    pub fn cpl_readout<R: Rng + ?Sized>(
        &mut self,
        bob: ObserverId,
        alice: ObserverId,
        target: ObserverId,
        basis: &str,
        rng: &mut R,
    ) -> Result<ReadoutOutcome> {
        if self.mode != Mode::Cpl {
            return Err(LedgerError::WrongMode { expected: Mode::Cpl });
        }
        let (bo, ao) = self.reader_pair(bob, alice)?;
        self.observer(target)?;
        let held = self.live_fact(alice, target).cloned().ok_or(LedgerError::NoLiveFact { holder: alice, target })?;
        if bo.dim < ao.dim {
            return Err(LedgerError::InvalidSpec(format!(
                "reader dimension {} is smaller than holder dimension {}",
                bo.dim, ao.dim
            )));
        }
        let matched = held.basis == basis;
        let alice_label = if matched { held.holder_basis.clone() } else { basis.to_string() };
        let alice_basis = self.bases.get(&alice_label, ao.dim)?;
        let bob_basis = self.bases.get(basis, bo.dim)?;
        let outcome = if matched {
            held.value
        } else {
            let pops = self.marginal(alice)?.populations(&alice_basis);
            let total: f64 = pops.iter().sum();
            let pops: Vec<f64> = pops.iter().map(|p| p / total).collect();
            born_sample(&pops, self.config.tolerances.norm_tol, rng)?
        };

        let mut st = self.materialize(self.state.clone(), bob)?;
        st = self.materialize(st, alice)?;
        let targets: Vec<SubsystemId> = bo.members.iter().chain(&ao.members).copied().collect();
        st = apply_unitary(
            &st,
            &copy_unitary(bob_basis.matrix(), alice_basis.matrix()),
            &targets,
            self.config.tolerances.norm_tol,
        )?;

        let event_id = self.next_event;
        self.commit_state(st);
        let mut destroyed = self.destroy(event_id, &[bob, alice], |f| {
            (f.holder == bob && (f.target == target || f.holder_basis != basis))
                || (f.holder == alice && f.holder_basis != alice_label)
        });
        let mut created = Vec::new();
        let holder_fact = if matched {
            Some(held.id)
        } else {
            destroyed.extend(self.destroy(event_id, &[alice], |f| f.id == held.id));
            let id = self.create(alice, target, basis, outcome, basis, None, event_id);
            created.push(id);
            Some(id)
        };
        let reader_fact = self.create(bob, target, basis, outcome, basis, Some(alice), event_id);
        created.push(reader_fact);
        let event = ReadoutEvent {
            event_id,
            time: event_id,
            kind: ReadoutKind::Cpl,
            reader: bob,
            holder: alice,
            target,
            basis: basis.to_string(),
            outcome,
            matched: Some(matched),
            replayed: false,
            analysis_only: false,
            reader_fact,
            holder_fact,
            created_facts: created,
            destroyed_facts: destroyed,
            state: self.snapshot(),
        };
        self.push_event(LedgerEvent::Readout(event));
        Ok(ReadoutOutcome { outcome, matched, event_id })
    }

    /// Orthodox read-out: `bob`'s outcome is an independent Born draw from
    /// `alice`'s marginal in `basis`. Nothing couples to alice's stored
    /// facts. A repeated read-out by bob with no intervening interaction
    /// replays his own earlier fact.
    pub fn orthodox_readout<R: Rng + ?Sized>(
        &mut self,
        bob: ObserverId,
        alice: ObserverId,
        target: ObserverId,
        basis: &str,
        rng: &mut R,
    ) -> Result<ReadoutOutcome> {
        if self.mode != Mode::Orthodox {
            return Err(LedgerError::WrongMode { expected: Mode::Orthodox });
        }
        let (_, ao) = self.reader_pair(bob, alice)?;
        self.observer(target)?;
        let event_id = self.next_event;
        let previous = self
            .live_fact(bob, target)
            .filter(|f| f.basis == basis && f.via == Some(alice))
            .cloned();
        let (outcome, reader_fact, replayed, created, destroyed) = match previous {
            Some(f) => (f.value, f.id, true, Vec::new(), Vec::new()),
            None => {
                let b = self.bases.get(basis, ao.dim)?;
                let pops = self.marginal(alice)?.populations(&b);
                let total: f64 = pops.iter().sum();
                let pops: Vec<f64> = pops.iter().map(|p| p / total).collect();
                let outcome = born_sample(&pops, self.config.tolerances.norm_tol, rng)?;
                let destroyed = self.destroy(event_id, &[bob], |f| f.target == target);
                let id = self.create(bob, target, basis, outcome, basis, Some(alice), event_id);
                (outcome, id, false, vec![id], destroyed)
            }
        };
        let holder_fact = self.live_fact(alice, target).map(|f| f.id);
        let event = ReadoutEvent {
            event_id,
            time: event_id,
            kind: ReadoutKind::Orthodox,
            reader: bob,
            holder: alice,
            target,
            basis: basis.to_string(),
            outcome,
            matched: None,
            replayed,
            analysis_only: true,
            reader_fact,
            holder_fact,
            created_facts: created,
            destroyed_facts: destroyed,
            state: None,
        };
        self.push_event(LedgerEvent::Readout(event));
        Ok(ReadoutOutcome { outcome, matched: true, event_id })
    }

    /// With probability `lambda` the environment records `id` completely in
    /// its pointer basis, destroying every fact `id` stores in another basis.
    /// Averaged over trials this is the dephasing channel of strength
    /// `lambda`. One random number is consumed. Returns whether it hit.
    pub fn decohere<R: Rng + ?Sized>(&mut self, id: ObserverId, lambda: f64, rng: &mut R) -> Result<bool> {
        let o = self.active(id)?.clone();
        if !(0.0..=1.0).contains(&lambda) {
            return Err(QuantumError::LambdaOutOfRange(lambda).into());
        }
        let pointer = self.bases.get(&o.pointer, o.dim)?;
        let hit = rng.random::<f64>() < lambda;
        let event_id = self.next_event;
        let mut destroyed = Vec::new();
        if hit {
            let st = self.materialize(self.state.clone(), id)?;
            let st = self.environment_copy(st, &o.members, &pointer)?;
            self.commit_state(st);
            destroyed = self.destroy(event_id, &[id], |f| f.holder_basis != o.pointer);
        }
        self.push_event(LedgerEvent::Environment(EnvironmentEvent {
            event_id,
            time: event_id,
            system: id,
            pointer: o.pointer.clone(),
            lambda,
            hit,
            destroyed_facts: destroyed,
        }));
        Ok(hit)
    }

    /// Traces `id` out of the tracked state. Its facts are kept as they are;
    /// any later operation on it fails with `Retired`.
    pub fn retire(&mut self, id: ObserverId) -> Result<()> {
        let o = self.active(id)?.clone();
        for m in &o.members {
            self.subsystems.get_mut(m).expect("member registered").retired = true;
            self.pending.remove(m);
        }
        self.observers[id.0 as usize].retired = true;
        for other in self.observers.iter_mut() {
            if other.members.iter().any(|m| o.members.contains(m)) {
                other.retired = true;
            }
        }
        if o.members.iter().any(|m| self.state.contains(*m)) {
            let st = self.compress(self.state.clone(), true)?;
            self.commit_state(st);
        }
        let event_id = self.next_event;
        self.push_event(LedgerEvent::Retire(RetireEvent { event_id, time: event_id, observer: id }));
        Ok(())
    }

    fn active(&self, id: ObserverId) -> Result<&Observer> {
        let o = self.observer(id)?;
        if o.retired {
            return Err(LedgerError::Retired(id));
        }
        Ok(o)
    }

    fn reader_pair(&self, bob: ObserverId, alice: ObserverId) -> Result<(Observer, Observer)> {
        let bo = self.active(bob)?.clone();
        let ao = self.active(alice)?.clone();
        if bob == alice || bo.members.iter().any(|m| ao.members.contains(m)) {
            return Err(LedgerError::OverlappingObservers(bob, alice));
        }
        Ok((bo, ao))
    }

    /// Appends any of `id`'s subsystems not yet tracked, in their initial state.
    fn materialize(&self, mut st: PureState, id: ObserverId) -> Result<PureState> {
        for m in &self.observer(id)?.members {
            if !st.contains(*m) {
                let sub = &self.subsystems[m];
                st = st.tensor_with(SubsystemLabel { id: *m, dim: sub.dim }, &sub.init).map_err(capacity)?;
            }
        }
        Ok(st)
    }

    fn commit_state(&mut self, st: PureState) {
        for f in st.factors() {
            self.pending.remove(&f.id);
        }
        self.state = st;
    }

    /// Copies `members` in the pointer basis into a fresh environment factor.
    fn environment_copy(&mut self, st: PureState, members: &[SubsystemId], pointer: &BasisSpec) -> Result<PureState> {
        let d = pointer.dim();
        let env = self.fresh_subsystem_id();
        let mut ready = vec![C64::new(0.0, 0.0); d];
        ready[0] = C64::new(1.0, 0.0);
        let st = st.tensor_with(SubsystemLabel { id: env, dim: d }, &ready).map_err(capacity)?;
        let mut targets = vec![env];
        targets.extend_from_slice(members);
        let u = copy_unitary(&CMatrix::identity(d, d), pointer.matrix());
        let st = apply_unitary(&st, &u, &targets, self.config.tolerances.norm_tol)?;
        self.compress(st, false)
    }

    /// Replaces every untracked-by-observers factor (environment records and
    /// retired systems) with one purifying factor of dimension max(2, rank),
    /// or removes it when the kept systems are pure. Without `force` this
    /// only happens once two or more such factors exist.
    fn compress(&mut self, st: PureState, force: bool) -> Result<PureState> {
        let is_env = |id: &SubsystemId| self.subsystems.get(id).is_none_or(|s| s.retired);
        let env: Vec<SubsystemId> = st.factors().iter().map(|f| f.id).filter(|id| is_env(id)).collect();
        if env.is_empty() || (!force && env.len() < 2) {
            return Ok(st);
        }
        let kept: Vec<SubsystemLabel> = st.factors().iter().copied().filter(|f| !is_env(&f.id)).collect();
        if kept.is_empty() {
            return Ok(PureState::empty());
        }
        let kept_ids: Vec<SubsystemId> = kept.iter().map(|f| f.id).collect();
        let sd = schmidt_decompose(&st, &Bipartition::new(kept_ids, env), self.config.tolerances.degen_tol)?;
        let rank = sd.rank();
        let dk = sd.left_basis.nrows();
        let norm = sd.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
        if rank == 1 {
            let amps = sd.left_basis.column(0).iter().copied().collect();
            return Ok(PureState::new(kept, amps, self.config.tolerances.norm_tol)?);
        }
        let de = rank.max(2);
        let mut amps = vec![C64::new(0.0, 0.0); dk * de];
        for (k, c) in sd.coefficients.iter().enumerate() {
            for r in 0..dk {
                amps[r * de + k] = sd.left_basis[(r, k)] * (c / norm);
            }
        }
        let id = self.fresh_subsystem_id();
        let mut factors = kept;
        factors.push(SubsystemLabel { id, dim: de });
        Ok(PureState::new(factors, amps, self.config.tolerances.norm_tol).map_err(capacity)?)
    }

    /// Marks the live facts of `holders` matching `pred` as destroyed by
    /// `event_id`.
    fn destroy(&mut self, event_id: u64, holders: &[ObserverId], pred: impl Fn(&RelativeFact) -> bool) -> Vec<FactId> {
        let mut out = Vec::new();
        for h in holders {
            let Some(ids) = self.live.get_mut(h) else { continue };
            ids.retain(|id| {
                let f = &mut self.facts[id.0 as usize];
                if pred(f) {
                    f.live = false;
                    f.destroyed_by = Some(event_id);
                    out.push(f.id);
                    false
                } else {
                    true
                }
            });
        }
        out.sort();
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn create(
        &mut self,
        holder: ObserverId,
        target: ObserverId,
        basis: &str,
        value: usize,
        holder_basis: &str,
        via: Option<ObserverId>,
        event_id: u64,
    ) -> FactId {
        let id = FactId(self.facts.len() as u32);
        self.facts.push(RelativeFact {
            id,
            holder,
            target,
            basis: basis.to_string(),
            value,
            holder_basis: holder_basis.to_string(),
            via,
            event_id,
            live: true,
            destroyed_by: None,
        });
        self.live.entry(holder).or_default().push(id);
        id
    }

    fn snapshot(&self) -> Option<StateSnapshot> {
        (self.config.embed_states && self.state.dim() <= EMBED_MAX_DIM).then(|| StateSnapshot::from(&self.state))
    }

    fn push_event(&mut self, event: LedgerEvent) {
        debug_assert_eq!(event.event_id(), self.next_event);
        self.events.push(event);
        self.next_event += 1;
    }
}

fn capacity(e: QuantumError) -> LedgerError {
    match e {
        QuantumError::CapacityExceeded { dim, cap } => LedgerError::CapacityExceeded { dim, cap },
        other => other.into(),
    }
}

/// Measurement coupling on (x ⊗ y): reads y's index in basis `by` and writes
/// it into x's basis `bx`, assuming x starts in |0⟩. In basis coordinates,
/// |i⟩|j⟩ → |(i + j) mod d_x⟩|j⟩.
fn copy_unitary(bx: &CMatrix, by: &CMatrix) -> CMatrix {
    let (dx, dy) = (bx.nrows(), by.nrows());
    let mut shift = CMatrix::zeros(dx * dy, dx * dy);
    for i in 0..dx {
        for j in 0..dy {
            shift[(((i + j) % dx) * dy + j, i * dy + j)] = C64::new(1.0, 0.0);
        }
    }
    bx.kronecker(by) * shift * CMatrix::identity(dx, dx).kronecker(&by.adjoint())
}

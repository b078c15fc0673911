//! Informational bonding: which observers came to share which fact, the
//! composite observers and per-fact communities this induces, entanglement
//! clustering, and the orthodox averaging/voting combinators.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::facts::{FactKey, Ledger, LedgerEvent, Mode, ObserverId, ReadoutKind, SharedFact};
use crate::quantum::{reduced_density, PureState, SubsystemId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BondingError {
    #[error("empty input")]
    EmptyInput,
}

/// `a` and `b` came to share `fact` at event `event_id`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BondingEdge {
    pub a: ObserverId,
    pub b: ObserverId,
    pub fact: SharedFact,
    pub event_id: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompositeObserver {
    pub members: BTreeSet<ObserverId>,
    pub shared_facts: BTreeSet<SharedFact>,
    pub origin_edges: BTreeSet<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactCommunity {
    pub fact: SharedFact,
    pub holders: BTreeSet<ObserverId>,
}

/// Bonds from cross-perspective read-outs: the reader's new fact equals the
/// holder's live fact after the event. One edge per (pair, fact), the
/// earliest. Orthodox ledgers have none.
pub fn derive_bonds(ledger: &Ledger) -> Vec<BondingEdge> {
    if ledger.mode() != Mode::Cpl {
        return Vec::new();
    }
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    for event in ledger.events() {
        let LedgerEvent::Readout(r) = event else { continue };
        if r.kind != ReadoutKind::Cpl {
            continue;
        }
        let (Some(reader), Some(holder)) = (ledger.fact(r.reader_fact), r.holder_fact.and_then(|id| ledger.fact(id)))
        else {
            continue;
        };
        let fact = reader.shared();
        if fact != holder.shared() {
            continue;
        }
        let pair = (r.holder.min(r.reader), r.holder.max(r.reader));
        if seen.insert((pair, fact.clone())) {
            edges.push(BondingEdge { a: r.holder, b: r.reader, fact, event_id: r.event_id });
        }
    }
    edges
}

/// Connected components of the edges carrying exactly `fact`, largest first
/// (ties by lowest member).
pub fn fact_communities(edges: &[BondingEdge], fact: &SharedFact) -> Vec<FactCommunity> {
    let carrying: Vec<&BondingEdge> = edges.iter().filter(|e| &e.fact == fact).collect();
    let mut comps: Vec<BTreeSet<ObserverId>> =
        components(carrying.iter().map(|e| (e.a, e.b))).into_iter().collect();
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    comps.into_iter().map(|holders| FactCommunity { fact: fact.clone(), holders }).collect()
}

/// The largest community for `fact`; empty holders if no edge carries it.
pub fn fact_community(edges: &[BondingEdge], fact: &SharedFact) -> FactCommunity {
    fact_communities(edges, fact)
        .into_iter()
        .next()
        .unwrap_or_else(|| FactCommunity { fact: fact.clone(), holders: BTreeSet::new() })
}

/// Composites are the per-fact connected groups. A group's shared facts are
/// every fact under which the whole group is connected using only edges
/// inside the group: an intersection, never a union.
pub fn composite_observers(edges: &[BondingEdge]) -> Vec<CompositeObserver> {
    let facts: BTreeSet<&SharedFact> = edges.iter().map(|e| &e.fact).collect();
    let mut groups: BTreeSet<BTreeSet<ObserverId>> = BTreeSet::new();
    for f in &facts {
        for c in fact_communities(edges, f) {
            groups.insert(c.holders);
        }
    }
    groups
        .into_iter()
        .map(|members| {
            let mut shared_facts = BTreeSet::new();
            let mut origin_edges = BTreeSet::new();
            for f in &facts {
                let inside: Vec<&BondingEdge> = edges
                    .iter()
                    .filter(|e| &e.fact == *f && members.contains(&e.a) && members.contains(&e.b))
                    .collect();
                let comps = components(inside.iter().map(|e| (e.a, e.b)));
                if comps.len() == 1 && comps[0] == members {
                    shared_facts.insert((*f).clone());
                    origin_edges.extend(inside.iter().map(|e| e.event_id));
                }
            }
            CompositeObserver { members, shared_facts, origin_edges }
        })
        .collect()
}

/// Shared facts of a composite counted at origin and counted only if still
/// live for every member now.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompositeLiveness {
    pub at_origin: usize,
    pub currently_live: usize,
}

pub fn composite_liveness(ledger: &Ledger, composite: &CompositeObserver) -> CompositeLiveness {
    let currently_live = composite
        .shared_facts
        .iter()
        .filter(|f| {
            composite
                .members
                .iter()
                .all(|m| ledger.live_facts(*m).any(|g| g.shared() == **f))
        })
        .count();
    CompositeLiveness { at_origin: composite.shared_facts.len(), currently_live }
}

fn components(pairs: impl Iterator<Item = (ObserverId, ObserverId)>) -> Vec<BTreeSet<ObserverId>> {
    let pairs: Vec<(ObserverId, ObserverId)> = pairs.collect();
    let nodes: Vec<ObserverId> =
        pairs.iter().flat_map(|&(a, b)| [a, b]).collect::<BTreeSet<_>>().into_iter().collect();
    let index = |id: ObserverId| nodes.binary_search(&id).expect("node listed");
    let mut uf = UnionFind::<usize>::new(nodes.len());
    for &(a, b) in &pairs {
        uf.union(index(a), index(b));
    }
    let mut by_root: BTreeMap<usize, BTreeSet<ObserverId>> = BTreeMap::new();
    for (i, &n) in nodes.iter().enumerate() {
        by_root.entry(uf.find(i)).or_default().insert(n);
    }
    let mut out: Vec<BTreeSet<ObserverId>> = by_root.into_values().collect();
    out.sort();
    out
}

/// Pairwise quantum mutual information S(A) + S(B) − S(AB), in bits.
pub fn mutual_information(state: &PureState, a: SubsystemId, b: SubsystemId) -> crate::quantum::Result<f64> {
    let sa = reduced_density(state, &[a])?.entropy_bits();
    let sb = reduced_density(state, &[b])?.entropy_bits();
    let sab = reduced_density(state, &[a, b])?.entropy_bits();
    Ok((sa + sb - sab).max(0.0))
}

/// Components of the graph joining factor pairs whose mutual information
/// exceeds `threshold` bits. Each component lists ids in state order.
pub fn entanglement_components(state: &PureState, threshold: f64) -> crate::quantum::Result<Vec<Vec<SubsystemId>>> {
    let ids: Vec<SubsystemId> = state.factors().iter().map(|f| f.id).collect();
    let mut uf = UnionFind::<usize>::new(ids.len());
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            if mutual_information(state, ids[i], ids[j])? > threshold {
                uf.union(i, j);
            }
        }
    }
    let mut by_root: BTreeMap<usize, Vec<SubsystemId>> = BTreeMap::new();
    for (i, &id) in ids.iter().enumerate() {
        by_root.entry(uf.find(i)).or_default().push(id);
    }
    let mut out: Vec<Vec<SubsystemId>> = by_root.into_values().collect();
    out.sort_by_key(|c| state.position(c[0]));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AggregationMethod {
    MajorityVote,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AggregatedFact {
    pub target: ObserverId,
    pub basis: String,
    pub value: usize,
    /// Majority vote only: several values shared the top count and the
    /// lowest was taken.
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AggregationReport {
    pub method: AggregationMethod,
    pub input_facts: Vec<Vec<SharedFact>>,
    pub output_facts: Vec<AggregatedFact>,
    pub basis_histogram_in: BTreeMap<String, usize>,
    pub basis_histogram_out: BTreeMap<String, usize>,
    pub ties: usize,
}

impl AggregationReport {
    pub fn structure_preserved(&self) -> bool {
        self.basis_histogram_in == self.basis_histogram_out
    }

    pub fn value(&self, key: &FactKey) -> Option<usize> {
        self.output_facts.iter().find(|f| f.target == key.target && f.basis == key.basis).map(|f| f.value)
    }
}

/// Collapses many observers' facts into one macro fact per (target, basis)
/// key. The key set never changes, so neither does the basis histogram.
/// MEAN rounds to the nearest index with halves going down.
pub fn aggregate_orthodox(
    facts_by_observer: &[Vec<SharedFact>],
    method: AggregationMethod,
) -> Result<AggregationReport, BondingError> {
    if facts_by_observer.is_empty() {
        return Err(BondingError::EmptyInput);
    }
    let mut by_key: BTreeMap<FactKey, Vec<usize>> = BTreeMap::new();
    for f in facts_by_observer.iter().flatten() {
        by_key.entry(f.key()).or_default().push(f.value);
    }
    let mut output_facts = Vec::with_capacity(by_key.len());
    let mut ties = 0;
    for (key, values) in &by_key {
        let (value, tie) = match method {
            AggregationMethod::MajorityVote => {
                let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
                for &v in values {
                    *counts.entry(v).or_default() += 1;
                }
                let top = *counts.values().max().expect("nonempty");
                let mut modal = counts.iter().filter(|(_, &c)| c == top).map(|(&v, _)| v);
                let first = modal.next().expect("nonempty");
                (first, modal.next().is_some())
            }
            AggregationMethod::Mean => {
                let mean = values.iter().sum::<usize>() as f64 / values.len() as f64;
                ((mean - 0.5).ceil().max(0.0) as usize, false)
            }
        };
        ties += usize::from(tie);
        output_facts.push(AggregatedFact { target: key.target, basis: key.basis.clone(), value, tie });
    }
    let histogram = |keys: &mut dyn Iterator<Item = &str>| {
        let mut h: BTreeMap<String, usize> = BTreeMap::new();
        for k in keys {
            *h.entry(k.to_string()).or_default() += 1;
        }
        h
    };
    let basis_histogram_in = histogram(&mut by_key.keys().map(|k| k.basis.as_str()));
    let basis_histogram_out = histogram(&mut output_facts.iter().map(|f| f.basis.as_str()));
    Ok(AggregationReport {
        method,
        input_facts: facts_by_observer.to_vec(),
        output_facts,
        basis_histogram_in,
        basis_histogram_out,
        ties,
    })
}

/// Each observer's live facts, in observer order.
pub fn live_facts_by_observer(ledger: &Ledger, observers: &[ObserverId]) -> Vec<Vec<SharedFact>> {
    observers
        .iter()
        .map(|&o| ledger.live_facts(o).map(|f| f.shared()).collect())
        .collect()
}

/// Entry (i, j): fraction of the (target, basis) keys present in both
/// subsets' aggregates on which the aggregated values agree. NaN when the
/// two aggregates share no key.
pub fn overlap_agreement(
    subsets: &[Vec<ObserverId>],
    ledger: &Ledger,
    method: AggregationMethod,
) -> Result<Vec<Vec<f64>>, BondingError> {
    if subsets.is_empty() || subsets.iter().any(Vec::is_empty) {
        return Err(BondingError::EmptyInput);
    }
    let reports: Vec<AggregationReport> = subsets
        .iter()
        .map(|s| aggregate_orthodox(&live_facts_by_observer(ledger, s), method))
        .collect::<Result<_, _>>()?;
    let n = reports.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut shared = 0usize;
            let mut agree = 0usize;
            for f in &reports[i].output_facts {
                let key = FactKey { target: f.target, basis: f.basis.clone() };
                if let Some(v) = reports[j].value(&key) {
                    shared += 1;
                    agree += usize::from(v == f.value);
                }
            }
            m[i][j] = if shared == 0 { f64::NAN } else { agree as f64 / shared as f64 };
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facts::{InteractionSpec, LedgerConfig};
    use crate::quantum::{apply_unitary, make_product_state, pointer_interaction, SubsystemLabel, C64};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn o(i: u32) -> ObserverId {
        ObserverId(i)
    }

    fn fact(target: u32, basis: &str, value: usize) -> SharedFact {
        SharedFact::new(o(target), basis, value)
    }

    fn edge(a: u32, b: u32, f: &SharedFact, event: u64) -> BondingEdge {
        BondingEdge { a: o(a), b: o(b), fact: f.clone(), event_id: event }
    }

    fn set(ids: &[u32]) -> BTreeSet<ObserverId> {
        ids.iter().map(|&i| o(i)).collect()
    }

    /// Every subset M with a fact F such that M is exactly one connected
    /// component of the F-edges; its shared facts are every F' under which
    /// M is connected through edges inside M.
    fn brute_force_composites(edges: &[BondingEdge]) -> Vec<CompositeObserver> {
        let nodes: Vec<ObserverId> = edges.iter().flat_map(|e| [e.a, e.b]).collect::<BTreeSet<_>>().into_iter().collect();
        let facts: BTreeSet<SharedFact> = edges.iter().map(|e| e.fact.clone()).collect();
        let connected_under = |m: &BTreeSet<ObserverId>, f: &SharedFact| {
            // closure by repeated relaxation
            let start = *m.iter().next().unwrap();
            let mut reach = BTreeSet::from([start]);
            loop {
                let before = reach.len();
                for e in edges.iter().filter(|e| &e.fact == f && m.contains(&e.a) && m.contains(&e.b)) {
                    if reach.contains(&e.a) || reach.contains(&e.b) {
                        reach.insert(e.a);
                        reach.insert(e.b);
                    }
                }
                if reach.len() == before {
                    break;
                }
            }
            &reach == m
        };
        let touches_outside = |m: &BTreeSet<ObserverId>, f: &SharedFact| {
            edges.iter().any(|e| &e.fact == f && (m.contains(&e.a) != m.contains(&e.b)))
        };
        let mut out = Vec::new();
        for mask in 1u32..(1 << nodes.len()) {
            let m: BTreeSet<ObserverId> = (0..nodes.len()).filter(|i| mask >> i & 1 == 1).map(|i| nodes[i]).collect();
            if m.len() < 2 {
                continue;
            }
            let is_component = facts.iter().any(|f| connected_under(&m, f) && !touches_outside(&m, f));
            if !is_component {
                continue;
            }
            let shared: BTreeSet<SharedFact> = facts.iter().filter(|f| connected_under(&m, f)).cloned().collect();
            let origin = edges
                .iter()
                .filter(|e| shared.contains(&e.fact) && m.contains(&e.a) && m.contains(&e.b))
                .map(|e| e.event_id)
                .collect();
            out.push(CompositeObserver { members: m, shared_facts: shared, origin_edges: origin });
        }
        out.sort_by(|a, b| a.members.cmp(&b.members));
        out
    }

    #[test]
    fn readout_creates_one_edge() {
        let mut l = Ledger::new(Mode::Cpl, LedgerConfig::default());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = l.register_prepared(vec![C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap();
        let a = l.register_system(2).unwrap();
        let b = l.register_system(2).unwrap();
        let c = l.register_system(2).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(1);
        assert!(derive_bonds(&l).is_empty());
        l.interact(a, s, &InteractionSpec::pointer("z"), &mut r).unwrap();
        assert!(derive_bonds(&l).is_empty());
        l.cpl_readout(b, a, s, "z", &mut r).unwrap();
        l.cpl_readout(b, a, s, "z", &mut r).unwrap();
        let edges = derive_bonds(&l);
        assert_eq!(edges.len(), 1);
        let v = l.live_fact(a, s).unwrap().value;
        assert_eq!((edges[0].a, edges[0].b, &edges[0].fact), (a, b, &SharedFact::new(s, "z", v)));

        l.cpl_readout(c, b, s, "z", &mut r).unwrap();
        let edges = derive_bonds(&l);
        let pairs: Vec<(ObserverId, ObserverId)> = edges.iter().map(|e| (e.a, e.b)).collect();
        assert_eq!(pairs, vec![(a, b), (b, c)]);
        assert_eq!(fact_community(&edges, &edges[0].fact).holders, [a, b, c].into_iter().collect());
    }

    #[test]
    fn orthodox_ledger_has_no_edges() {
        let mut l = Ledger::new(Mode::Orthodox, LedgerConfig::default());
        let s = l.register_system(2).unwrap();
        let a = l.register_system(2).unwrap();
        let b = l.register_system(2).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(1);
        l.interact(a, s, &InteractionSpec::pointer("z"), &mut r).unwrap();
        l.orthodox_readout(b, a, s, "z", &mut r).unwrap();
        assert!(derive_bonds(&l).is_empty());
    }

    #[test]
    fn single_edge_composite() {
        let f = fact(9, "z", 1);
        let cs = composite_observers(&[edge(0, 1, &f, 3)]);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].members, set(&[0, 1]));
        assert_eq!(cs[0].shared_facts, BTreeSet::from([f]));
        assert_eq!(cs[0].origin_edges, BTreeSet::from([3]));
    }

    #[test]
    fn bonding_is_not_transitive() {
        let f = fact(9, "z", 1);
        let g = fact(9, "x", 0);
        let edges = [edge(0, 1, &f, 1), edge(1, 2, &g, 2)];
        let cs = composite_observers(&edges);
        let members: Vec<BTreeSet<ObserverId>> = cs.iter().map(|c| c.members.clone()).collect();
        assert_eq!(members, vec![set(&[0, 1]), set(&[1, 2])]);
        assert_eq!(cs[0].shared_facts, BTreeSet::from([f]));
        assert_eq!(cs[1].shared_facts, BTreeSet::from([g]));
    }

    #[test]
    fn broadcast_of_one_fact() {
        let f = fact(99, "z", 0);
        let edges: Vec<BondingEdge> = (1..10).map(|i| edge(0, i, &f, i as u64)).collect();
        let cs = composite_observers(&edges);
        assert_eq!(cs, brute_force_composites(&edges));
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].members.len(), 10);
        assert_eq!(cs[0].shared_facts.len(), 1);
    }

    #[test]
    fn community_of_missing_fact_is_empty() {
        let f = fact(1, "z", 0);
        assert!(fact_community(&[], &f).holders.is_empty());
        assert!(fact_community(&[edge(0, 1, &fact(1, "z", 1), 0)], &f).holders.is_empty());
    }

    #[test]
    fn community_on_random_connected_graph() {
        use rand::Rng;
        let mut r = ChaCha8Rng::seed_from_u64(4);
        let f = fact(1000, "z", 1);
        // random spanning tree plus extra edges
        let mut edges: Vec<BondingEdge> = (1..100).map(|i| edge(r.random_range(0..i), i, &f, i as u64)).collect();
        for k in 0..50 {
            edges.push(edge(r.random_range(0..100), r.random_range(0..100), &f, 100 + k));
        }
        assert_eq!(fact_community(&edges, &f).holders.len(), 100);
        let split: Vec<BondingEdge> = edges.into_iter().filter(|e| (e.a.0 < 60) == (e.b.0 < 60)).collect();
        let comms = fact_communities(&split, &f);
        assert!(comms.iter().all(|c| c.holders.iter().all(|h| h.0 < 60) || c.holders.iter().all(|h| h.0 >= 60)));
    }

    #[test]
    fn composite_liveness_counts_both_views() {
        let mut l = Ledger::new(Mode::Cpl, LedgerConfig::default());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = l.register_prepared(vec![C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap();
        let a = l.register_system(2).unwrap();
        let b = l.register_system(2).unwrap();
        let c = l.register_system(2).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(0);
        l.interact(a, s, &InteractionSpec::pointer("z"), &mut r).unwrap();
        l.cpl_readout(b, a, s, "z", &mut r).unwrap();
        let comp = composite_observers(&derive_bonds(&l)).remove(0);
        assert_eq!(composite_liveness(&l, &comp), CompositeLiveness { at_origin: 1, currently_live: 1 });
        l.cpl_readout(c, a, s, "x", &mut r).unwrap();
        assert_eq!(composite_liveness(&l, &comp), CompositeLiveness { at_origin: 1, currently_live: 0 });
    }

    #[test]
    fn entanglement_clusters() {
        let z = |id| (SubsystemLabel::new(id, 2), vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = |id| (SubsystemLabel::new(id, 2), vec![C64::new(h, 0.0), C64::new(h, 0.0)]);
        let product = make_product_state(&[plus(0), z(1), z(2)], 1e-10).unwrap();
        assert_eq!(entanglement_components(&product, 0.1).unwrap().len(), 3);

        let cnot = pointer_interaction(2).unwrap();
        let bell = apply_unitary(&product, &cnot, &[SubsystemId(0), SubsystemId(1)], 1e-10).unwrap();
        let comps = entanglement_components(&bell, 0.1).unwrap();
        assert_eq!(comps, vec![vec![SubsystemId(0), SubsystemId(1)], vec![SubsystemId(2)]]);
        assert!((mutual_information(&bell, SubsystemId(0), SubsystemId(1)).unwrap() - 2.0).abs() < 1e-10);

        let mut ghz = make_product_state(&[plus(0), z(1), z(2), z(3), z(4)], 1e-10).unwrap();
        for k in 1..5 {
            ghz = apply_unitary(&ghz, &cnot, &[SubsystemId(k - 1), SubsystemId(k)], 1e-10).unwrap();
        }
        assert_eq!(entanglement_components(&ghz, 0.1).unwrap().len(), 1);
        // pairwise GHZ correlations are classical: exactly one bit
        assert!((mutual_information(&ghz, SubsystemId(0), SubsystemId(4)).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(entanglement_components(&ghz, 1.5).unwrap().len(), 5);
    }

    #[test]
    fn vote_and_mean() {
        let obs = vec![vec![fact(0, "z", 1)], vec![fact(0, "z", 1)], vec![fact(0, "z", 0)]];
        let vote = aggregate_orthodox(&obs, AggregationMethod::MajorityVote).unwrap();
        assert_eq!(vote.output_facts[0].value, 1);
        assert_eq!(vote.ties, 0);
        let mean = aggregate_orthodox(&obs, AggregationMethod::Mean).unwrap();
        assert_eq!(mean.output_facts[0].value, 1);

        let tied = vec![vec![fact(0, "z", 2)], vec![fact(0, "z", 1)]];
        let vote = aggregate_orthodox(&tied, AggregationMethod::MajorityVote).unwrap();
        assert_eq!((vote.output_facts[0].value, vote.output_facts[0].tie, vote.ties), (1, true, 1));
        // mean 1.5 rounds down
        assert_eq!(aggregate_orthodox(&tied, AggregationMethod::Mean).unwrap().output_facts[0].value, 1);

        let single = vec![vec![fact(0, "z", 1), fact(1, "x", 0)]];
        for m in [AggregationMethod::MajorityVote, AggregationMethod::Mean] {
            let r = aggregate_orthodox(&single, m).unwrap();
            let out: Vec<SharedFact> =
                r.output_facts.iter().map(|f| SharedFact::new(f.target, f.basis.clone(), f.value)).collect();
            assert_eq!(out, single[0]);
        }
        assert_eq!(aggregate_orthodox(&[], AggregationMethod::Mean), Err(BondingError::EmptyInput));
    }

    #[test]
    fn sixty_forty_histogram_is_preserved() {
        let obs: Vec<Vec<SharedFact>> =
            (0..100).map(|i| vec![fact(i, if i < 60 { "z" } else { "x" }, (i % 2) as usize)]).collect();
        for m in [AggregationMethod::MajorityVote, AggregationMethod::Mean] {
            let r = aggregate_orthodox(&obs, m).unwrap();
            assert_eq!(r.basis_histogram_in, BTreeMap::from([("x".to_string(), 40), ("z".to_string(), 60)]));
            assert!(r.structure_preserved());
        }
    }

    #[test]
    fn overlap_agreement_identity_and_errors() {
        let mut l = Ledger::new(Mode::Orthodox, LedgerConfig::default());
        let s = l.register_system(2).unwrap();
        let a = l.register_system(2).unwrap();
        let b = l.register_system(2).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(0);
        l.orthodox_readout(a, s, s, "z", &mut r).unwrap();
        l.orthodox_readout(b, s, s, "z", &mut r).unwrap();
        let m = overlap_agreement(&[vec![a, b], vec![a, b]], &l, AggregationMethod::MajorityVote).unwrap();
        assert_eq!(m, vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(overlap_agreement(&[vec![]], &l, AggregationMethod::Mean), Err(BondingError::EmptyInput));
        assert_eq!(overlap_agreement(&[], &l, AggregationMethod::Mean), Err(BondingError::EmptyInput));
    }

    fn arb_edges() -> impl Strategy<Value = Vec<BondingEdge>> {
        prop::collection::vec((0u32..8, 0u32..8, 0usize..3), 0..14).prop_map(|raw| {
            raw.into_iter()
                .enumerate()
                .filter(|(_, (a, b, _))| a != b)
                .map(|(k, (a, b, v))| edge(a, b, &fact(100, "z", v), k as u64))
                .collect()
        })
    }

    fn arb_facts() -> impl Strategy<Value = Vec<Vec<SharedFact>>> {
        let one = (0u32..4, prop::sample::select(vec!["z", "x", "y"]), 0usize..3).prop_map(|(t, b, v)| fact(t, b, v));
        prop::collection::vec(prop::collection::vec(one, 0..5), 1..6)
    }

    proptest! {
        #[test]
        fn composites_match_brute_force(edges in arb_edges()) {
            prop_assert_eq!(composite_observers(&edges), brute_force_composites(&edges));
        }

        #[test]
        fn composites_are_intersections(edges in arb_edges()) {
            for c in composite_observers(&edges) {
                prop_assert!(c.members.len() >= 2 && !c.shared_facts.is_empty());
                for f in &c.shared_facts {
                    for m in &c.members {
                        prop_assert!(edges.iter().any(|e| &e.fact == f && (e.a == *m || e.b == *m)));
                    }
                }
            }
        }

        #[test]
        fn communities_partition_holders(edges in arb_edges()) {
            for v in 0..3 {
                let f = fact(100, "z", v);
                let comms = fact_communities(&edges, &f);
                let mut seen = BTreeSet::new();
                for c in &comms {
                    for h in &c.holders {
                        prop_assert!(seen.insert(*h));
                    }
                }
                // transitivity: every edge lies inside one community
                for e in edges.iter().filter(|e| e.fact == f) {
                    prop_assert!(comms.iter().any(|c| c.holders.contains(&e.a) && c.holders.contains(&e.b)));
                }
            }
        }

        #[test]
        fn communities_grow_monotonically(edges in arb_edges(), cut in 0usize..14) {
            let cut = cut.min(edges.len());
            for v in 0..3 {
                let f = fact(100, "z", v);
                let before = fact_communities(&edges[..cut], &f);
                let after = fact_communities(&edges, &f);
                for c in before {
                    prop_assert!(after.iter().any(|d| c.holders.is_subset(&d.holders)));
                }
            }
        }

        #[test]
        fn aggregation_preserves_structure(obs in arb_facts()) {
            for m in [AggregationMethod::MajorityVote, AggregationMethod::Mean] {
                let r = aggregate_orthodox(&obs, m).unwrap();
                prop_assert!(r.structure_preserved());
                let keys_in: BTreeSet<FactKey> = obs.iter().flatten().map(SharedFact::key).collect();
                let keys_out: BTreeSet<FactKey> =
                    r.output_facts.iter().map(|f| FactKey { target: f.target, basis: f.basis.clone() }).collect();
                prop_assert_eq!(keys_in, keys_out);
            }
        }
    }
}

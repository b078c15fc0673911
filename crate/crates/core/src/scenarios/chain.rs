//! Read-out chains under dephasing. X0 measures a system Y, X1 reads X0, X2
//! reads X1, and so on. Each link picks an off-pointer basis with
//! probability `pOff` and every holder is dephased toward z at `lambda`
//! before it is read. A chain of length N carries one shared fact when a
//! single composite spans X0..XN; the metric is how often that fact is
//! off-pointer.

use std::f64::consts::{FRAC_1_SQRT_2 as H, PI};

use rand::Rng;
use serde_json::json;

use super::{Ctx, Metric, Outcome, ParamSpec, Result, SIGMAS};
use crate::bonding::{composite_observers, derive_bonds, BondingEdge};
use crate::facts::{InteractionSpec, LedgerError, ObserverId};
use crate::quantum::{pointer_interaction, BasisSpec, C64};
use crate::stats::Proportion;

pub(super) const PARAMS: &[ParamSpec] = &[
    ParamSpec::int("N", 20, 1, 64),
    ParamSpec::float("lambda", 0.9, 0.0, 1.0),
    ParamSpec::int("offPointerBases", 2, 1, 2),
    ParamSpec::float("pOff", 0.5, 0.0, 1.0),
];

const POINTER: &str = "z";
static OFF: [&str; 2] = ["x", "r"];

/// For each prefix length N = 1..: `None` when the prefix is not spanned by
/// one composite, otherwise whether the spanning fact is off-pointer.
type ChainTrial = (Vec<Option<bool>>, Vec<(u64, bool)>);

pub(super) fn run(ctx: &Ctx) -> Result<Outcome> {
    let n_max = ctx.param_usize("N");
    let lambda = ctx.param("lambda");
    let p_off = ctx.param("pOff");
    let off = &OFF[..ctx.param_usize("offPointerBases")];

    let (trials, trace) = ctx.run_trials(|t, rng| {
        let mut l = ctx.ledger(t);
        l.register_basis(BasisSpec::qubit_rotation("r", PI / 8.0));
        let pick = |rng: &mut rand_chacha::ChaCha8Rng| -> &'static str {
            if rng.random::<f64>() < p_off {
                off[rng.random_range(0..off.len())]
            } else {
                POINTER
            }
        };

        // Y starts maximally mixed (half of a Bell pair with a retired
        // reference), so every basis is a valid Schmidt basis for X0.
        let reference = l.register_prepared(vec![C64::new(H, 0.0), C64::new(H, 0.0)])?;
        let y = l.register_system(2)?;
        l.prepare(&[reference, y], &pointer_interaction(2)?)?;
        l.retire(reference)?;

        let x0 = l.register_system(2)?;
        let first = pick(rng);
        match l.interact(x0, y, &InteractionSpec::pointer(first).with_lambda(lambda), rng) {
            Ok(_) => {}
            Err(LedgerError::BasisNotSchmidt { .. }) => {
                l.interact(x0, y, &InteractionSpec::pointer(POINTER).with_lambda(lambda), rng)?;
            }
            Err(e) => return Err(e.into()),
        }
        l.retire(y)?;

        let mut chain: Vec<ObserverId> = vec![x0];
        let mut reads: Vec<u64> = Vec::new();
        let mut prev = x0;
        for k in 1..=n_max {
            let basis = if k == 1 {
                l.live_fact(x0, y).expect("interaction records a fact").basis.clone()
            } else {
                let hit = l.decohere(prev, lambda, rng)?;
                let b = pick(rng);
                if hit { POINTER.to_string() } else { b.to_string() }
            };
            if l.live_fact(prev, y).is_none() {
                break;
            }
            let next = l.register_system(2)?;
            let read = l.cpl_readout(next, prev, y, &basis, rng)?;
            reads.push(read.event_id);
            l.retire(prev)?;
            chain.push(next);
            prev = next;
        }

        let edges = derive_bonds(&l);
        let per_n = (1..=n_max)
            .map(|n| {
                let cutoff = *reads.get(n - 1)?;
                let prefix: Vec<BondingEdge> = edges.iter().filter(|e| e.event_id <= cutoff).cloned().collect();
                composite_observers(&prefix)
                    .into_iter()
                    .find(|c| chain[..=n].iter().all(|m| c.members.contains(m)))
                    .map(|c| c.shared_facts.iter().any(|f| f.basis != POINTER))
            })
            .collect();
        let edge_bases = edges.iter().map(|e| (e.event_id, e.fact.basis != POINTER)).collect();
        Ok(((per_n, edge_bases), l))
    })?;

    let mut out = Outcome { trace, ..Outcome::default() };
    let mut fractions = Vec::new();
    let mut uppers = Vec::new();
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let spanning = trials.iter().filter(|t: &&ChainTrial| t.0[n - 1].is_some()).count() as u64;
        let off_count = trials.iter().filter(|t| t.0[n - 1] == Some(true)).count() as u64;
        let p = Proportion::new(off_count, spanning);
        let (edges_off, edges_all) = edge_counts(&trials, n);
        if spanning > 0 {
            let m = Metric::proportion(p, SIGMAS);
            out.metric(format!("offPointerFraction@{n}"), m);
            fractions.push((n, m.value));
            uppers.push((n, m.ci_high.expect("proportion band")));
        }
        rows.push(json!({
            "N": n,
            "spanningChains": spanning,
            "offPointerChains": off_count,
            "offPointerFraction": if spanning > 0 { json!(p.estimate()) } else { json!(null) },
            "upperBound": if spanning > 0 { json!(p.interval(SIGMAS).1) } else { json!(null) },
            "edges": edges_all,
            "offPointerEdges": edges_off,
        }));
    }
    out.tables.insert("sweep".into(), json!(rows));

    let missing: Vec<usize> = (1..=n_max).filter(|n| !fractions.iter().any(|f| f.0 == *n)).collect();
    out.check(
        "everyLengthObserved",
        missing.is_empty(),
        format!("lengths with no spanning chain: {missing:?}"),
    );
    let tail: Vec<(usize, f64)> = uppers.iter().copied().filter(|u| u.0 >= 2).collect();
    let rising: Vec<usize> = tail.windows(2).filter(|w| w[1].1 > w[0].1).map(|w| w[1].0).collect();
    out.check(
        "upperBoundNonIncreasing",
        rising.is_empty(),
        format!("upper {SIGMAS}σ bound rises at N = {rising:?}"),
    );
    let at = |n: usize| fractions.iter().find(|f| f.0 == n).map(|f| f.1);
    if n_max >= 2 {
        match (at(2), at(n_max)) {
            (Some(f2), Some(fmax)) if f2 > 0.0 => out.check(
                "decaysTenfold",
                fmax < f2 / 10.0,
                format!("offPointerFraction({n_max}) = {fmax}, offPointerFraction(2) = {f2}"),
            ),
            (Some(_), _) => {
                let all_zero = fractions.iter().filter(|f| f.0 >= 2).all(|f| f.1 == 0.0);
                out.check("decaysTenfold", all_zero, "offPointerFraction(2) = 0; every longer chain must be 0 too");
            }
            _ => out.check("decaysTenfold", false, "no spanning chain of length 2"),
        }
    }
    out.notes.push(format!(
        "each trial grows one chain of up to {n_max} links and every prefix length N is scored on it; \
         longer chains than this are extrapolated from the measured decay, not simulated"
    ));
    Ok(out)
}

/// Bonding edges in the first `n` links of every chain, off-pointer and total.
fn edge_counts(trials: &[ChainTrial], n: usize) -> (usize, usize) {
    let mut off = 0;
    let mut all = 0;
    for (_, edges) in trials {
        let mut sorted: Vec<&(u64, bool)> = edges.iter().collect();
        sorted.sort();
        for e in sorted.into_iter().take(n) {
            all += 1;
            off += usize::from(e.1);
        }
    }
    (off, all)
}

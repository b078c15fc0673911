//! Friend A measures S; B then reads A. In cross-perspective mode a matching
//! read-out returns A's stored value and a mismatched one destroys it. In
//! orthodox mode B's outcome carries no information about A's fact.

use std::f64::consts::FRAC_1_SQRT_2 as H;

use super::{Ctx, Metric, Outcome, ParamSpec, Result, SIGMAS};
use crate::bonding::derive_bonds;
use crate::facts::{InteractionSpec, Mode};
use crate::quantum::C64;
use crate::stats::{empirical_mutual_information, within_sigma, Proportion};

pub(super) const PARAMS: &[ParamSpec] = &[
    ParamSpec::float("maxMutualInformation", 0.01, 0.0, 1.0),
    ParamSpec::int("mismatchedReadouts", 10_000, 0, i64::MAX),
];

fn plus() -> Vec<C64> {
    vec![C64::new(H, 0.0), C64::new(H, 0.0)]
}

pub(super) fn run(ctx: &Ctx) -> Result<Outcome> {
    match ctx.mode {
        Mode::Cpl => run_cpl(ctx),
        Mode::Orthodox => run_orthodox(ctx),
    }
}

#[derive(Debug, Clone, Copy)]
struct CplTrial {
    matched: bool,
    /// Mismatched sequence: (old fact destroyed, re-read equals old value).
    mismatched: Option<(bool, bool)>,
}

fn run_cpl(ctx: &Ctx) -> Result<Outcome> {
    let mismatched = ctx.param_usize("mismatchedReadouts") as u64;
    let z = InteractionSpec::pointer("z");
    let (trials, trace) = ctx.run_trials(|t, rng| {
        let mut l = ctx.ledger(t);
        let s = l.register_prepared(plus())?;
        let a = l.register_system(2)?;
        let b = l.register_system(2)?;
        l.interact(a, s, &z, rng)?;
        let stored = l.live_fact(a, s).expect("interaction records a fact").value;
        let read = l.cpl_readout(b, a, s, "z", rng)?;
        let matched = read.matched && read.outcome == stored;

        let mut second = None;
        if t < mismatched {
            let s = l.register_prepared(plus())?;
            let a = l.register_system(2)?;
            let b = l.register_system(2)?;
            let c = l.register_system(2)?;
            l.interact(a, s, &z, rng)?;
            let old = l.live_fact(a, s).expect("interaction records a fact").clone();
            l.cpl_readout(b, a, s, "x", rng)?;
            let destroyed = !l.fact(old.id).expect("fact exists").live;
            let again = l.cpl_readout(c, a, s, "z", rng)?;
            second = Some((destroyed, again.outcome == old.value));
        }
        Ok((CplTrial { matched, mismatched: second }, l))
    })?;

    let mut out = Outcome { trace, ..Outcome::default() };
    let n = trials.len() as u64;
    let matches = trials.iter().filter(|t| t.matched).count() as u64;
    out.metric("matchRate", Metric::proportion(Proportion::new(matches, n), SIGMAS));
    out.check("matchRateExact", matches == n, format!("{matches}/{n} matching read-outs returned the stored value"));

    let seq: Vec<(bool, bool)> = trials.iter().filter_map(|t| t.mismatched).collect();
    if seq.is_empty() {
        out.notes.push("no mismatched read-outs scheduled; postDestroyRate is undefined".into());
    } else {
        let m = seq.len() as u64;
        let destroyed = seq.iter().filter(|s| s.0).count() as u64;
        let agree = seq.iter().filter(|s| s.1).count() as u64;
        out.metric("postDestroyRate", Metric::proportion(Proportion::new(agree, m), SIGMAS));
        out.metric("priorFactDestroyed", Metric::proportion(Proportion::new(destroyed, m), SIGMAS));
        out.check("mismatchDestroys", destroyed == m, format!("{destroyed}/{m} stored facts destroyed"));
        out.check(
            "postDestroyAtChance",
            within_sigma(agree, m, 0.5, SIGMAS),
            format!("{agree}/{m} re-reads agree with the destroyed value; band 0.5 ± {SIGMAS}σ"),
        );
    }
    Ok(out)
}

fn run_orthodox(ctx: &Ctx) -> Result<Outcome> {
    let max_mi = ctx.param("maxMutualInformation");
    let z = InteractionSpec::pointer("z");
    let (trials, trace) = ctx.run_trials(|t, rng| {
        let mut l = ctx.ledger(t);
        let s = l.register_prepared(plus())?;
        let a = l.register_system(2)?;
        let b = l.register_system(2)?;
        l.interact(a, s, &z, rng)?;
        let stored = l.live_fact(a, s).expect("interaction records a fact").value;
        let read = l.orthodox_readout(b, a, s, "z", rng)?;
        let edges = derive_bonds(&l).len();
        Ok(((stored, read.outcome, edges), l))
    })?;

    let mut out = Outcome { trace, ..Outcome::default() };
    let pairs: Vec<(usize, usize)> = trials.iter().map(|t| (t.0, t.1)).collect();
    let mi = empirical_mutual_information(&pairs);
    let edges: usize = trials.iter().map(|t| t.2).sum();
    let agree = pairs.iter().filter(|p| p.0 == p.1).count() as u64;
    out.metric("mutualInformation", Metric::exact(mi));
    out.metric("bondingEdges", Metric::count(edges));
    out.metric("analysisAgreement", Metric::proportion(Proportion::new(agree, pairs.len() as u64), SIGMAS));
    out.check("independent", mi <= max_mi, format!("I(A;B) = {mi:.3e} bits, limit {max_mi}"));
    out.check("noBonds", edges == 0, format!("{edges} bonding edges"));
    out.notes.push("analysisAgreement compares both perspectives from outside; no observer can access it".into());
    Ok(out)
}

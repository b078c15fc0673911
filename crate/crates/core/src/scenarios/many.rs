//! Overlapping particle subsets, each a candidate macro-observer. Every
//! particle reads S independently (orthodox), each subset majority-votes its
//! particles' values, and pairs of subsets are compared: raw value tuples
//! versus voted macro facts.

use statrs::function::factorial::binomial;

use super::{Ctx, Metric, Outcome, ParamSpec, Result, SIGMAS};
use crate::bonding::{aggregate_orthodox, live_facts_by_observer, overlap_agreement, AggregationMethod};
use crate::facts::ObserverId;
use crate::quantum::C64;
use crate::stats::Proportion;

pub(super) const PARAMS: &[ParamSpec] = &[
    ParamSpec::float("agreementTarget", 0.99, 0.0, 1.0),
    ParamSpec::float("bias", 0.5, 0.0, 1.0),
    ParamSpec::float("overlap", 0.9, 0.0, 1.0),
    ParamSpec::int("subsetCount", 4, 2, 64),
    ParamSpec::int("subsetSize", 99, 1, 1_000),
];

fn pmf(n: usize, k: usize, q: f64) -> f64 {
    binomial(n as u64, k as u64) * q.powi(k as i32) * (1.0 - q).powi((n - k) as i32)
}

/// Probability that two subsets of `size` particles sharing `core` of them
/// reach the same majority vote, when each particle independently reads 1
/// with probability `q`. Ties go to 0, as the vote does.
pub fn expected_voted_agreement(size: usize, core: usize, q: f64) -> f64 {
    let own = size - core;
    let threshold = size / 2 + 1;
    let own_pmf: Vec<f64> = (0..=own).map(|k| pmf(own, k, q)).collect();
    (0..=core)
        .map(|c| {
            let p_one: f64 = (0..=own).filter(|a| c + a >= threshold).map(|a| own_pmf[a]).sum();
            pmf(core, c, q) * (p_one * p_one + (1.0 - p_one) * (1.0 - p_one))
        })
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, Default)]
struct ManyTrial {
    pairs: u64,
    voted_agree: u64,
    raw_differ: u64,
    structure_ok: bool,
    ties: usize,
}

pub(super) fn run(ctx: &Ctx) -> Result<Outcome> {
    let size = ctx.param_usize("subsetSize");
    let overlap = ctx.param("overlap");
    let count = ctx.param_usize("subsetCount");
    let q = ctx.param("bias");
    let target = ctx.param("agreementTarget");
    let core = (overlap * size as f64).round() as usize;
    let own = size - core;

    let (trials, trace) = ctx.run_trials(|t, rng| {
        let mut l = ctx.ledger(t);
        let s = l.register_prepared(vec![C64::new((1.0 - q).sqrt(), 0.0), C64::new(q.sqrt(), 0.0)])?;
        let mut particles: Vec<ObserverId> = Vec::with_capacity(core + count * own);
        for _ in 0..core + count * own {
            let p = l.register_system(2)?;
            l.orthodox_readout(p, s, s, "z", rng)?;
            l.retire(p)?;
            particles.push(p);
        }
        let subsets: Vec<Vec<ObserverId>> = (0..count)
            .map(|i| {
                let mut sub = particles[..core].to_vec();
                sub.extend_from_slice(&particles[core + i * own..core + (i + 1) * own]);
                sub
            })
            .collect();

        let mut trial = ManyTrial { structure_ok: true, ..ManyTrial::default() };
        let raw: Vec<Vec<usize>> = subsets
            .iter()
            .map(|sub| live_facts_by_observer(&l, sub).iter().flatten().map(|f| f.value).collect())
            .collect();
        for sub in &subsets {
            let report = aggregate_orthodox(&live_facts_by_observer(&l, sub), AggregationMethod::MajorityVote)
                .expect("subsets are nonempty");
            trial.structure_ok &= report.structure_preserved();
            trial.ties += report.ties;
        }
        let m = overlap_agreement(&subsets, &l, AggregationMethod::MajorityVote).expect("subsets are nonempty");
        for i in 0..count {
            for j in i + 1..count {
                trial.pairs += 1;
                trial.voted_agree += u64::from(m[i][j] == 1.0);
                trial.raw_differ += u64::from(raw[i] != raw[j]);
            }
        }
        Ok((trial, l))
    })?;

    let mut out = Outcome { trace, ..Outcome::default() };
    let pairs: u64 = trials.iter().map(|t| t.pairs).sum();
    let voted = Proportion::new(trials.iter().map(|t| t.voted_agree).sum(), pairs);
    let raw = Proportion::new(trials.iter().map(|t| t.raw_differ).sum(), pairs);
    let structure = trials.iter().filter(|t| t.structure_ok).count();
    let expected = expected_voted_agreement(size, core, q);
    out.metric("votedAgreement", Metric::proportion(voted, SIGMAS));
    out.metric("rawDisagreement", Metric::proportion(raw, SIGMAS));
    out.metric("expectedVotedAgreement", Metric::exact(expected));
    out.metric("sharedParticles", Metric::count(core));
    out.metric("voteTies", Metric::count(trials.iter().map(|t| t.ties).sum()));
    out.check(
        "structurePreserved",
        structure == trials.len(),
        format!("{structure}/{} trials kept the basis histogram through every vote", trials.len()),
    );

    let v = voted.estimate();
    // pairs within a trial are dependent, so the band uses the trial count
    let sigma = (expected * (1.0 - expected) / ctx.trials as f64).sqrt();
    let model_ok = (v - expected).abs() <= SIGMAS * sigma;
    let model = format!("votedAgreement {v}, binomial model {expected:.6} ± {SIGMAS}σ (σ = {sigma:.2e})");
    if core == size {
        out.check("identicalSubsetsAgree", voted.successes == voted.n, format!("{}/{} pairs agree", voted.successes, voted.n));
    } else if core == 0 {
        out.check("disjointAtChance", model_ok, model);
    } else {
        out.check("matchesBinomialModel", model_ok, model);
        out.check("votedAgreementTarget", v >= target, format!("votedAgreement {v} against target {target}"));
        out.check("rawDiverges", raw.successes > 0, format!("rawDisagreement {}", raw.estimate()));
    }
    out.notes.push(format!(
        "{count} subsets of {size} particles share {core}; each particle reads S once and independently"
    ));
    Ok(out)
}

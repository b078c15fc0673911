//! Runs a user-written schedule of interactions and read-outs.

use std::collections::BTreeMap;

use serde_json::json;

use super::{Ctx, Metric, Outcome, ParamSpec, Result, ScenarioConfig, ScenarioError, SIGMAS};
use crate::bonding::{composite_observers, derive_bonds, entanglement_components};
use crate::facts::{Mode, ObserverId};
use crate::stats::Proportion;

pub(super) const PARAMS: &[ParamSpec] = &[ParamSpec::float("threshold", 0.01, 0.0, 64.0)];
pub(super) const ANALYSES: &[&str] = &["bonding", "entanglement"];

pub(super) fn validate(cfg: &ScenarioConfig) -> Result<()> {
    let invalid = |msg: String| Err(ScenarioError::Invalid(msg));
    let n = cfg.systems.len();
    if n == 0 {
        return invalid("schedule declares no systems".into());
    }
    let tol = cfg.tolerances.unwrap_or_default().norm_tol;
    for (i, s) in cfg.systems.iter().enumerate() {
        if s.dim() < 2 {
            return invalid(format!("system {i} has dimension {}", s.dim()));
        }
        if let Some(local) = s.local_state() {
            let norm: f64 = local.iter().map(|a| a.norm_sqr()).sum();
            if (norm - 1.0).abs() > tol {
                return invalid(format!("system {i} state has norm² {norm}"));
            }
        }
    }
    for (k, it) in cfg.interactions.iter().enumerate() {
        if it.x >= n || it.y >= n {
            return invalid(format!("interaction {k} references an undeclared system"));
        }
        if it.x == it.y {
            return invalid(format!("interaction {k} couples system {} to itself", it.x));
        }
        if !(0.0..=1.0).contains(&it.spec.dephase_lambda) {
            return invalid(format!("interaction {k} has dephaseLambda outside [0, 1]"));
        }
    }
    for (k, r) in cfg.readouts.iter().enumerate() {
        if r.reader >= n || r.holder >= n || r.target >= n {
            return invalid(format!("read-out {k} references an undeclared system"));
        }
        if r.reader == r.holder {
            return invalid(format!("read-out {k} reads system {} from itself", r.reader));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Step {
    Interaction(usize),
    Readout(usize),
}

#[derive(Debug, Clone, Default)]
struct ScheduleTrial {
    failure: Option<String>,
    sampled: Vec<Option<usize>>,
    outcomes: Vec<Option<(usize, bool)>>,
    edges: usize,
    composites: usize,
    components: usize,
}

pub(super) fn run(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.config;
    let threshold = ctx.param("threshold");
    let bonding = cfg.analysis.iter().any(|a| a == "bonding");
    let entanglement = cfg.analysis.iter().any(|a| a == "entanglement");
    let mut steps: Vec<(u64, Step)> = cfg.interactions.iter().enumerate().map(|(i, s)| (s.tick, Step::Interaction(i))).collect();
    steps.extend(cfg.readouts.iter().enumerate().map(|(i, r)| (r.tick, Step::Readout(i))));
    steps.sort();

    let (trials, trace) = ctx.run_trials(|t, rng| {
        let mut l = ctx.ledger(t);
        let mut ids: Vec<ObserverId> = Vec::new();
        for s in &cfg.systems {
            ids.push(match s.local_state() {
                Some(local) => l.register_prepared(local)?,
                None => l.register_system(s.dim())?,
            });
        }
        let mut trial = ScheduleTrial {
            sampled: vec![None; cfg.interactions.len()],
            outcomes: vec![None; cfg.readouts.len()],
            ..ScheduleTrial::default()
        };
        for &(_, step) in &steps {
            let result = match step {
                Step::Interaction(i) => {
                    let it = &cfg.interactions[i];
                    l.interact(ids[it.x], ids[it.y], &it.spec, rng).map(|e| trial.sampled[i] = Some(e.sampled_index))
                }
                Step::Readout(i) => {
                    let r = &cfg.readouts[i];
                    let (reader, holder, target) = (ids[r.reader], ids[r.holder], ids[r.target]);
                    let out = match ctx.mode {
                        Mode::Cpl => l.cpl_readout(reader, holder, target, &r.basis, rng),
                        Mode::Orthodox => l.orthodox_readout(reader, holder, target, &r.basis, rng),
                    };
                    out.map(|o| trial.outcomes[i] = Some((o.outcome, o.matched)))
                }
            };
            if let Err(e) = result {
                trial.failure = Some(format!("{step:?}: {e}"));
                break;
            }
        }
        if bonding {
            let edges = derive_bonds(&l);
            trial.edges = edges.len();
            trial.composites = composite_observers(&edges).len();
        }
        if entanglement && !l.state().factors().is_empty() {
            trial.components = entanglement_components(l.state(), threshold)?.len();
        }
        Ok((trial, l))
    })?;

    let mut out = Outcome { trace, ..Outcome::default() };
    let n = trials.len() as u64;
    let completed = trials.iter().filter(|t| t.failure.is_none()).count() as u64;
    out.metric("completedTrials", Metric::proportion(Proportion::new(completed, n), SIGMAS));
    let mut failures: BTreeMap<String, u64> = BTreeMap::new();
    for f in trials.iter().filter_map(|t| t.failure.as_ref()) {
        *failures.entry(f.clone()).or_default() += 1;
    }
    out.check("allTrialsCompleted", completed == n, format!("{completed}/{n} trials ran every step"));
    if !failures.is_empty() {
        out.tables.insert("failures".into(), json!(failures));
    }

    let mean = |xs: &[usize]| xs.iter().sum::<usize>() as f64 / xs.len() as f64;
    for i in 0..cfg.interactions.len() {
        let xs: Vec<usize> = trials.iter().filter_map(|t| t.sampled[i]).collect();
        if !xs.is_empty() {
            out.metric(format!("interaction{i}.meanIndex"), Metric::exact(mean(&xs)));
        }
    }
    for i in 0..cfg.readouts.len() {
        let xs: Vec<(usize, bool)> = trials.iter().filter_map(|t| t.outcomes[i]).collect();
        if xs.is_empty() {
            continue;
        }
        let values: Vec<usize> = xs.iter().map(|x| x.0).collect();
        out.metric(format!("readout{i}.meanOutcome"), Metric::exact(mean(&values)));
        if ctx.mode == Mode::Cpl {
            let matched = xs.iter().filter(|x| x.1).count() as u64;
            out.metric(format!("readout{i}.matchRate"), Metric::proportion(Proportion::new(matched, xs.len() as u64), SIGMAS));
        }
    }
    if bonding {
        out.metric("meanBondingEdges", Metric::exact(mean(&trials.iter().map(|t| t.edges).collect::<Vec<_>>())));
        out.metric("meanComposites", Metric::exact(mean(&trials.iter().map(|t| t.composites).collect::<Vec<_>>())));
    }
    if entanglement {
        let xs: Vec<usize> = trials.iter().map(|t| t.components).collect();
        out.metric("meanEntanglementComponents", Metric::exact(mean(&xs)));
    }
    Ok(out)
}

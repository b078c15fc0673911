//! Named, seeded experiments and the run reports they produce.
//!
//! Every scenario is a pure function of its resolved config: trials run in
//! parallel on per-trial ChaCha streams derived from the master seed, and
//! results are gathered in trial order.

mod bell;
mod chain;
mod config;
mod giant;
mod many;
mod report;
mod schedule;
mod wigner;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;

use crate::facts::{Ledger, LedgerConfig, LedgerError, LedgerEvent, Mode};
use crate::quantum::{QuantumError, Tolerances};

pub use config::{ParamKind, ParamSpec, ScenarioConfig, ScheduledInteraction, ScheduledReadout, SystemSpec};
pub use many::expected_voted_agreement;
pub use report::{Assertion, Metric, RunReport, TraceRecord};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0:?}")]
    Unknown(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

impl From<QuantumError> for ScenarioError {
    fn from(e: QuantumError) -> Self {
        ScenarioError::Ledger(LedgerError::Quantum(e))
    }
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

/// Catalog entry. `modes[0]` is the default mode.
#[derive(Debug)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub modes: &'static [Mode],
    pub default_trials: u64,
    pub params: &'static [ParamSpec],
    pub analyses: &'static [&'static str],
    pub takes_schedule: bool,
    runner: fn(&Ctx) -> Result<Outcome>,
}

static CATALOG: [ScenarioInfo; 6] = [
    ScenarioInfo {
        name: "bell-degeneracy",
        summary: "dual-basis Schmidt forms of the Bell state and their rotations",
        modes: &[Mode::Cpl, Mode::Orthodox],
        default_trials: 1,
        params: bell::PARAMS,
        analyses: &[],
        takes_schedule: false,
        runner: bell::run,
    },
    ScenarioInfo {
        name: "decoherence-chain",
        summary: "off-pointer shared facts along dephased read-out chains",
        modes: &[Mode::Cpl],
        default_trials: 10_000,
        params: chain::PARAMS,
        analyses: &[],
        takes_schedule: false,
        runner: chain::run,
    },
    ScenarioInfo {
        name: "giant-observer",
        summary: "one fact broadcast over a random graph by chained read-outs",
        modes: &[Mode::Cpl],
        default_trials: 1,
        params: giant::PARAMS,
        analyses: &[],
        takes_schedule: false,
        runner: giant::run,
    },
    ScenarioInfo {
        name: "problem-of-many",
        summary: "majority-voted macro facts of overlapping particle subsets",
        modes: &[Mode::Orthodox],
        default_trials: 10_000,
        params: many::PARAMS,
        analyses: &[],
        takes_schedule: false,
        runner: many::run,
    },
    ScenarioInfo {
        name: "schedule",
        summary: "user-defined systems, interactions and read-outs",
        modes: &[Mode::Cpl, Mode::Orthodox],
        default_trials: 1_000,
        params: schedule::PARAMS,
        analyses: schedule::ANALYSES,
        takes_schedule: true,
        runner: schedule::run,
    },
    ScenarioInfo {
        name: "wigner-cpl",
        summary: "friend and observer read-outs: matching, mismatched, orthodox",
        modes: &[Mode::Cpl, Mode::Orthodox],
        default_trials: 10_000,
        params: wigner::PARAMS,
        analyses: &[],
        takes_schedule: false,
        runner: wigner::run,
    },
];

/// All scenarios, sorted by name.
pub fn catalog() -> &'static [ScenarioInfo] {
    &CATALOG
}

pub fn lookup(name: &str) -> Option<&'static ScenarioInfo> {
    CATALOG.iter().find(|s| s.name == name)
}

/// Fills in every default and validates the result.
pub fn resolve(config: &ScenarioConfig) -> Result<ScenarioConfig> {
    let info = lookup(&config.name).ok_or_else(|| ScenarioError::Unknown(config.name.clone()))?;
    let invalid = |msg: String| Err(ScenarioError::Invalid(msg));
    let mut out = config.clone();

    let mode = *out.mode.get_or_insert(info.modes[0]);
    if !info.modes.contains(&mode) {
        return invalid(format!("{} does not run in {mode:?} mode", info.name));
    }
    let trials = *out.trials.get_or_insert(info.default_trials);
    if trials < 1 {
        return invalid("trials must be at least 1".into());
    }
    let tol = *out.tolerances.get_or_insert_with(Tolerances::default);
    if [tol.norm_tol, tol.recon_tol, tol.degen_tol].iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return invalid("tolerances must be positive".into());
    }
    for key in out.parameters.keys() {
        if !info.params.iter().any(|p| p.name == key) {
            return invalid(format!("{} has no parameter {key:?}", info.name));
        }
    }
    for p in info.params {
        let v = out.parameters.entry(p.name.to_string()).or_insert_with(|| p.default_value());
        p.check(v).map_err(ScenarioError::Invalid)?;
    }
    for a in &out.analysis {
        if !info.analyses.contains(&a.as_str()) {
            return invalid(format!("{} has no analysis {a:?}", info.name));
        }
    }
    if info.takes_schedule {
        schedule::validate(&out)?;
    } else if !(out.systems.is_empty() && out.interactions.is_empty() && out.readouts.is_empty()) {
        return invalid(format!("{} builds its own systems; remove the schedule", info.name));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Collect per-trial event logs.
    pub trace: bool,
    /// Only the first this many trials are traced.
    pub trace_trials: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { trace: false, trace_trials: 100 }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub trace: Vec<TraceRecord>,
}

/// Resolves and runs a config.
pub fn run(config: &ScenarioConfig, opts: &RunOptions) -> Result<RunOutput> {
    let resolved = resolve(config)?;
    let info = lookup(&resolved.name).expect("resolved");
    let ctx = Ctx::new(&resolved, opts);
    let outcome = (info.runner)(&ctx)?;
    let passed = outcome.assertions.iter().all(|a| a.pass);
    let report = RunReport {
        scenario: resolved.name.clone(),
        mode: ctx.mode,
        seed: ctx.seed,
        trials: ctx.trials,
        config_hash: resolved.hash(),
        config: resolved.clone(),
        metrics: outcome.metrics,
        assertions: outcome.assertions,
        tables: outcome.tables,
        notes: outcome.notes,
        passed,
    };
    Ok(RunOutput { report, trace: outcome.trace })
}

/// Per-trial RNG: the master seed picks the key, the trial index the stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub(crate) struct Ctx<'a> {
    pub config: &'a ScenarioConfig,
    pub mode: Mode,
    pub trials: u64,
    pub seed: u64,
    pub tolerances: Tolerances,
    opts: RunOptions,
}

impl<'a> Ctx<'a> {
    fn new(config: &'a ScenarioConfig, opts: &RunOptions) -> Self {
        Ctx {
            config,
            mode: config.mode.expect("resolved"),
            trials: config.trials.expect("resolved"),
            seed: config.seed,
            tolerances: config.tolerances.expect("resolved"),
            opts: *opts,
        }
    }

    pub fn param(&self, name: &str) -> f64 {
        self.config.parameters[name].as_f64().expect("validated")
    }

    pub fn param_usize(&self, name: &str) -> usize {
        self.config.parameters[name].as_u64().expect("validated") as usize
    }

    fn traced(&self, trial: u64) -> bool {
        self.opts.trace && trial < self.opts.trace_trials
    }

    pub fn ledger(&self, trial: u64) -> Ledger {
        Ledger::new(self.mode, LedgerConfig { tolerances: self.tolerances, embed_states: self.traced(trial) })
    }

    /// Runs `f` for every trial. `f` builds its ledger with [`Ctx::ledger`]
    /// and hands it back so traced trials can keep their event logs.
    pub fn run_trials<T, F>(&self, f: F) -> Result<(Vec<T>, Vec<TraceRecord>)>
    where
        T: Send,
        F: Fn(u64, &mut ChaCha8Rng) -> Result<(T, Ledger)> + Sync,
    {
        let results: Vec<(T, Vec<LedgerEvent>)> = (0..self.trials)
            .into_par_iter()
            .map(|t| {
                let (value, ledger) = f(t, &mut trial_rng(self.seed, t))?;
                let events = if self.traced(t) { ledger.events().to_vec() } else { Vec::new() };
                Ok((value, events))
            })
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(results.len());
        let mut trace = Vec::new();
        for (t, (value, events)) in results.into_iter().enumerate() {
            values.push(value);
            trace.extend(events.into_iter().map(|event| TraceRecord { trial: t as u64, event }));
        }
        Ok((values, trace))
    }
}

/// What a scenario runner hands back.
#[derive(Debug, Default)]
pub(crate) struct Outcome {
    pub metrics: std::collections::BTreeMap<String, Metric>,
    pub assertions: Vec<Assertion>,
    pub tables: std::collections::BTreeMap<String, Value>,
    pub notes: Vec<String>,
    pub trace: Vec<TraceRecord>,
}

impl Outcome {
    pub fn metric(&mut self, name: impl Into<String>, m: Metric) {
        self.metrics.insert(name.into(), m);
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion { name: name.to_string(), pass, detail: detail.into() });
    }
}

/// z value behind every frequency band.
pub const SIGMAS: f64 = 5.0;

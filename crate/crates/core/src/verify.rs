//! Self-verification: the invariant suites of every module at two sizes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::facts::{InteractionSpec, Ledger, LedgerConfig, LedgerError, Mode};
use crate::quantum::{born_sample, reduced_density, schmidt_decompose, Bipartition, PureState, SubsystemId, SubsystemLabel, Tolerances, C64};
use crate::scenarios::{self, Assertion, RunOptions, ScenarioConfig};
use crate::stats::chi_square_born;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    fn trials(self) -> u64 {
        match self {
            Level::Quick => 1_000,
            Level::Full => 100_000,
        }
    }
}

/// Born sampler under test: weights and a stream in, an index out.
pub type Sampler = dyn Fn(&[f64], &mut ChaCha8Rng) -> usize + Sync;

/// The sampler the ledger uses.
pub fn born_sampler(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    born_sample(weights, Tolerances::default().norm_tol, rng).expect("weights are normalized")
}

/// Significance of every distributional check.
pub const ALPHA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub level: Level,
    pub checks: Vec<Assertion>,
    pub passed: bool,
}

pub fn verify(level: Level, sampler: &Sampler) -> VerifyReport {
    let mut checks = Vec::new();
    let mut check = |name: &str, result: Result<String, String>| {
        let (pass, detail) = match result {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        checks.push(Assertion { name: name.to_string(), pass, detail });
    };
    let (states, max_dim) = match level {
        Level::Quick => (100, 4),
        Level::Full => (1_000, 8),
    };
    check("schmidtReconstruction", schmidt_suite(states, max_dim, 1));
    check("bornChiSquare", born_suite(level.trials(), sampler));
    check("bornThroughLedger", ledger_born(level.trials()));
    check("capacity", capacity());

    let n = level.trials();
    let runs = [
        ScenarioConfig::new("bell-degeneracy"),
        ScenarioConfig::new("wigner-cpl").with_trials(n).with_param("mismatchedReadouts", n as i64),
        ScenarioConfig::new("wigner-cpl").with_mode(Mode::Orthodox).with_trials(n),
        ScenarioConfig::new("giant-observer"),
        ScenarioConfig::new("giant-observer").with_param("split", 0.6),
        ScenarioConfig::new("problem-of-many").with_trials(n).with_param("overlap", 1.0),
        ScenarioConfig::new("problem-of-many").with_trials(n).with_param("overlap", 0.0),
        match level {
            Level::Quick => ScenarioConfig::new("decoherence-chain").with_trials(n).with_param("N", 8),
            Level::Full => ScenarioConfig::new("decoherence-chain").with_trials(n),
        },
    ];
    for cfg in runs {
        let label = format!("scenario:{}:{}", cfg.name, cfg.canonical_json());
        check(&label, scenario(&cfg));
    }
    let passed = checks.iter().all(|c| c.pass);
    VerifyReport { level, checks, passed }
}

fn random_state(rng: &mut ChaCha8Rng, dl: usize, dr: usize) -> PureState {
    let amps: Vec<C64> = (0..dl * dr).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let amps = amps.into_iter().map(|a| a / norm).collect();
    PureState::new(vec![SubsystemLabel::new(0, dl), SubsystemLabel::new(1, dr)], amps, 1e-10).expect("normalized")
}

/// Random bipartite states up to `max_dim`×`max_dim`: reconstruction error
/// and reduced spectra against squared Schmidt coefficients.
pub fn schmidt_suite(count: usize, max_dim: usize, seed: u64) -> Result<String, String> {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cut = Bipartition::new([SubsystemId(0)], [SubsystemId(1)]);
    let mut worst_recon = 0.0f64;
    let mut worst_spec = 0.0f64;
    for _ in 0..count {
        let dl = rng.random_range(2..=max_dim);
        let dr = rng.random_range(2..=max_dim);
        let psi = random_state(&mut rng, dl, dr);
        let sd = schmidt_decompose(&psi, &cut, tol.degen_tol).map_err(|e| e.to_string())?;
        worst_recon = worst_recon.max(sd.reconstruct().distance(&psi));
        let mut eig = reduced_density(&psi, &[SubsystemId(0)]).map_err(|e| e.to_string())?.eigenvalues();
        eig.sort_by(|a, b| b.total_cmp(a));
        for (i, e) in eig.iter().enumerate() {
            let c2 = sd.coefficients.get(i).map_or(0.0, |c| c * c);
            worst_spec = worst_spec.max((e - c2).abs());
        }
    }
    let detail = format!("{count} states: reconstruction error {worst_recon:.2e}, spectrum error {worst_spec:.2e}");
    if worst_recon <= tol.recon_tol && worst_spec <= tol.recon_tol {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Chi-square of `n` draws from `sampler` against several weight vectors.
pub fn born_suite(n: u64, sampler: &Sampler) -> Result<String, String> {
    let cases: [&[f64]; 5] = [
        &[0.5, 0.5],
        &[0.25, 0.75],
        &[0.1, 0.2, 0.3, 0.4],
        &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        &[0.05, 0.15, 0.3, 0.2, 0.3],
    ];
    let mut details = Vec::new();
    let mut ok = true;
    for (k, w) in cases.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + k as u64);
        let mut counts = vec![0u64; w.len()];
        for _ in 0..n {
            counts[sampler(w, &mut rng)] += 1;
        }
        let r = chi_square_born(&counts, w, 1e-10).map_err(|e| e.to_string())?;
        ok &= r.p_value >= ALPHA;
        details.push(format!("{w:?}: χ² {:.3}, p {:.3e}", r.statistic, r.p_value));
    }
    let detail = format!("n = {n}; {}", details.join("; "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Fact values from the full interaction path against |0.8|² and |0.6|².
fn ledger_born(n: u64) -> Result<String, String> {
    let mut counts = [0u64; 2];
    for t in 0..n {
        let mut l = Ledger::new(Mode::Cpl, LedgerConfig::default());
        let s = l.register_prepared(vec![C64::new(0.8, 0.0), C64::new(0.6, 0.0)]).map_err(|e| e.to_string())?;
        let a = l.register_system(2).map_err(|e| e.to_string())?;
        let mut rng = scenarios::trial_rng(77, t);
        l.interact(a, s, &InteractionSpec::pointer("z"), &mut rng).map_err(|e| e.to_string())?;
        counts[l.live_fact(a, s).expect("fact").value] += 1;
    }
    let r = chi_square_born(&counts, &[0.64, 0.36], 1e-10).map_err(|e| e.to_string())?;
    let detail = format!("n = {n}; counts {counts:?}, χ² {:.3}, p {:.3e}", r.statistic, r.p_value);
    if r.p_value >= ALPHA {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn capacity() -> Result<String, String> {
    let mut l = Ledger::new(Mode::Cpl, LedgerConfig::default());
    for _ in 0..12 {
        l.register_system(2).map_err(|e| e.to_string())?;
    }
    match l.register_system(2) {
        Err(LedgerError::CapacityExceeded { dim, cap }) => Ok(format!("13th qubit refused ({dim} > {cap})")),
        other => Err(format!("13th qubit: {other:?}")),
    }
}

fn scenario(cfg: &ScenarioConfig) -> Result<String, String> {
    let report = scenarios::run(cfg, &RunOptions::default()).map_err(|e| e.to_string())?.report;
    let failed: Vec<&str> = report.assertions.iter().filter(|a| !a.pass).map(|a| a.name.as_str()).collect();
    if failed.is_empty() {
        Ok(format!("{} assertions pass", report.assertions.len()))
    } else {
        Err(format!("failed: {}", failed.join(", ")))
    }
}

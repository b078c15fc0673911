//! Run orchestration and the files a run leaves behind: report, trace,
//! summary CSV and manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::scenarios::{self, RunOptions, RunOutput, RunReport, ScenarioConfig, ScenarioError};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "RQMLAB_OUT";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("unknown scenario {0:?}")]
    ScenarioUnknown(String),
    #[error("{0}")]
    Execution(String),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::ConfigInvalid(_) => 2,
            RunError::ScenarioUnknown(_) => 3,
            RunError::Execution(_) | RunError::Io { .. } => 1,
        }
    }
}

impl From<ScenarioError> for RunError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Unknown(name) => RunError::ScenarioUnknown(name),
            ScenarioError::Invalid(msg) => RunError::ConfigInvalid(msg),
            ScenarioError::Ledger(e) => RunError::Execution(e.to_string()),
        }
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::ConfigInvalid(format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_json(&text).map_err(|e| RunError::ConfigInvalid(format!("{}: {e}", path.display())))
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: ScenarioConfig) -> ScenarioConfig {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = Some(trials);
        }
        cfg
    }
}

/// `--out`, else `$RQMLAB_OUT`, else the working directory.
pub fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
}

#[derive(Debug)]
pub struct RunFiles {
    pub report: RunReport,
    pub manifest: RunManifest,
    pub dir: PathBuf,
}

impl RunFiles {
    /// 0 when every assertion passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.report.passed {
            0
        } else {
            1
        }
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Runs one config and writes `<name>-<seed>.{report.json, trace.jsonl,
/// summary.csv, manifest.json}` into `dir`. Files are written whether or not
/// the assertions pass.
pub fn run_to_dir(config: &ScenarioConfig, dir: &Path, opts: &RunOptions) -> Result<RunFiles, RunError> {
    let started_at = now();
    let RunOutput { report, trace } = scenarios::run(config, opts)?;
    fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
    let stem = format!("{}-{}", report.scenario, report.seed);
    let mut outputs = Vec::new();

    let name = format!("{stem}.report.json");
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    write(dir, &name, text.as_bytes())?;
    outputs.push(name);

    if opts.trace {
        let name = format!("{stem}.trace.jsonl");
        let mut text = String::new();
        for record in &trace {
            text.push_str(&serde_json::to_string(record).expect("trace serializes"));
            text.push('\n');
        }
        write(dir, &name, text.as_bytes())?;
        outputs.push(name);
    }

    let name = format!("{stem}.summary.csv");
    write(dir, &name, &summary_csv(&report))?;
    outputs.push(name);

    let name = format!("{stem}.manifest.json");
    let mut manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: report.config_hash.clone(),
        master_seed: report.seed,
        started_at,
        finished_at: String::new(),
        outputs: outputs.clone(),
    };
    manifest.outputs.push(name.clone());
    manifest.finished_at = now();
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write(dir, &name, text.as_bytes())?;

    Ok(RunFiles { report, manifest, dir: dir.to_path_buf() })
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), RunError> {
    let path = dir.join(name);
    let mut f = fs::File::create(&path).map_err(|source| RunError::Io { path: path.clone(), source })?;
    f.write_all(bytes).map_err(|source| RunError::Io { path, source })
}

/// One row per metric (pass left empty) and one per assertion.
pub fn summary_csv(report: &RunReport) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let head = [report.scenario.clone(), report.seed.to_string(), report.trials.to_string()];
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    w.write_record(["scenario", "seed", "trials", "metric", "value", "ciLow", "ciHigh", "pass"]).expect("in memory");
    for (name, m) in &report.metrics {
        let row = [name.clone(), m.value.to_string(), opt(m.ci_low), opt(m.ci_high), String::new()];
        w.write_record(head.iter().chain(&row)).expect("in memory");
    }
    for a in &report.assertions {
        let row = [format!("assert:{}", a.name), u8::from(a.pass).to_string(), String::new(), String::new(), a.pass.to_string()];
        w.write_record(head.iter().chain(&row)).expect("in memory");
    }
    w.into_inner().expect("in memory")
}

/// One catalog line per scenario: name, modes, default trials, parameters
/// with their defaults.
pub fn catalog_lines() -> Vec<String> {
    scenarios::catalog()
        .iter()
        .map(|s| {
            let modes: Vec<String> =
                s.modes.iter().map(|m| serde_json::to_value(m).expect("mode").as_str().unwrap_or("").to_string()).collect();
            let params: Vec<String> = s.params.iter().map(|p| format!("{}={}", p.name, p.default_value())).collect();
            let schedule = if s.takes_schedule { " systems interactions readouts" } else { "" };
            format!(
                "{:<18} trials={:<6} mode={:<13} params: {}{}",
                s.name,
                s.default_trials,
                modes.join("|"),
                params.join(" "),
                schedule
            )
        })
        .collect()
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::facts::{InteractionSpec, Mode};
use crate::quantum::{Tolerances, C64};

/// A system in a schedule: a bare dimension (starts in |0⟩) or an explicit
/// normalized local state as [re, im] pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Dim(usize),
    Prepared { state: Vec<[f64; 2]> },
}

impl SystemSpec {
    pub fn dim(&self) -> usize {
        match self {
            SystemSpec::Dim(d) => *d,
            SystemSpec::Prepared { state } => state.len(),
        }
    }

    pub fn local_state(&self) -> Option<Vec<C64>> {
        match self {
            SystemSpec::Dim(_) => None,
            SystemSpec::Prepared { state } => Some(state.iter().map(|p| C64::new(p[0], p[1])).collect()),
        }
    }
}

/// `x` couples to `y` (indices into `systems`) at `tick`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScheduledInteraction {
    #[serde(default)]
    pub tick: u64,
    pub x: usize,
    pub y: usize,
    pub spec: InteractionSpec,
}

/// `reader` reads `holder`'s fact about `target` in `basis` at `tick`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScheduledReadout {
    #[serde(default)]
    pub tick: u64,
    pub reader: usize,
    pub holder: usize,
    pub target: usize,
    pub basis: String,
}

/// The JSON run configuration. Omitted fields take the scenario's defaults;
/// the report echoes the fully resolved form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub systems: Vec<SystemSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interactions: Vec<ScheduledInteraction>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub readouts: Vec<ScheduledReadout>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub analysis: Vec<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

impl ScenarioConfig {
    pub fn new(name: &str) -> Self {
        ScenarioConfig {
            name: name.to_string(),
            mode: None,
            systems: Vec::new(),
            interactions: Vec::new(),
            readouts: Vec::new(),
            trials: None,
            seed: 0,
            analysis: Vec::new(),
            parameters: BTreeMap::new(),
            tolerances: None,
        }
    }

    pub fn with_param(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(name.to_string(), value.into());
        self
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = Some(trials);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = Some(mode);
        self
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Compact JSON with sorted keys and shortest round-trip floats.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamKind {
    Int { min: i64, max: i64 },
    Float { min: f64, max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    pub default: f64,
}

impl ParamSpec {
    pub const fn int(name: &'static str, default: i64, min: i64, max: i64) -> Self {
        ParamSpec { name, kind: ParamKind::Int { min, max }, default: default as f64 }
    }

    pub const fn float(name: &'static str, default: f64, min: f64, max: f64) -> Self {
        ParamSpec { name, kind: ParamKind::Float { min, max }, default }
    }

    pub fn default_value(&self) -> Value {
        match self.kind {
            ParamKind::Int { .. } => Value::from(self.default as i64),
            ParamKind::Float { .. } => Value::from(self.default),
        }
    }

    /// Checks type and range of a configured value.
    pub fn check(&self, v: &Value) -> Result<(), String> {
        match self.kind {
            ParamKind::Int { min, max } => {
                let x = v.as_i64().ok_or_else(|| format!("parameter {} must be an integer", self.name))?;
                if x < min || x > max {
                    return Err(format!("parameter {} = {x} outside [{min}, {max}]", self.name));
                }
            }
            ParamKind::Float { min, max } => {
                let x = v.as_f64().ok_or_else(|| format!("parameter {} must be a number", self.name))?;
                if !(min..=max).contains(&x) {
                    return Err(format!("parameter {} = {x} outside [{min}, {max}]", self.name));
                }
            }
        }
        Ok(())
    }
}

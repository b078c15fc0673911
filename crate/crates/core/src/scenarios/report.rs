use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ScenarioConfig;
use crate::facts::{LedgerEvent, Mode};
use crate::stats::Proportion;

/// A point estimate with an optional confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Metric {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_high: Option<f64>,
}

impl Metric {
    pub fn exact(value: f64) -> Self {
        Metric { value, ci_low: None, ci_high: None }
    }

    pub fn count(n: usize) -> Self {
        Metric::exact(n as f64)
    }

    /// Proportion with its z-sigma band.
    pub fn proportion(p: Proportion, z: f64) -> Self {
        let (lo, hi) = p.interval(z);
        Metric { value: p.estimate(), ci_low: Some(lo), ci_high: Some(hi) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub scenario: String,
    pub mode: Mode,
    pub seed: u64,
    pub trials: u64,
    pub config_hash: String,
    /// The fully resolved config.
    pub config: ScenarioConfig,
    pub metrics: BTreeMap<String, Metric>,
    pub assertions: Vec<Assertion>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tables: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub passed: bool,
}

impl RunReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).map(|m| m.value)
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }
}

/// One trace line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub trial: u64,
    pub event: LedgerEvent,
}

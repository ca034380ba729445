//! The property-suite runner: every acceptance family is a named, seeded
//! suite producing deterministic records.

pub mod oracles;
mod runs;

use crate::numerics::TolerancePolicy;
use serde_json::{json, Map, Value};
use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error writing `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("suite `{name}` aborted: {what}")]
    Aborted { name: String, what: String },
}

/// All randomness flows from `seed` through one counter-based generator
/// family (ChaCha8), sub-seeded per suite by name; identical configs give
/// identical reports modulo timestamps.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    pub tol: TolerancePolicy,
    /// Trial multiplier; 1 runs the standard counts.
    pub trials: usize,
    pub only: Option<BTreeSet<String>>,
    pub output: Option<PathBuf>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            tol: TolerancePolicy::default(),
            trials: 1,
            only: None,
            output: None,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<(), SuiteError> {
        self.tol
            .validate()
            .map_err(|e| SuiteError::Config(e.to_string()))?;
        if self.trials == 0 {
            return Err(SuiteError::Config("trials must be positive".into()));
        }
        if let Some(only) = &self.only {
            for name in only {
                if !SUITE_NAMES.contains(&name.as_str()) {
                    return Err(SuiteError::Config(format!(
                        "unknown suite `{name}`; known: {}",
                        SUITE_NAMES.join(", ")
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of one property family.
#[derive(Debug, Clone)]
pub struct PropertyRecord {
    pub name: String,
    /// Stable property identifier for cross-referencing reports.
    pub anchor: String,
    pub trials: usize,
    pub failures: usize,
    pub worst_residual: f64,
    pub runtime_ms: u128,
    pub detail: String,
}

impl PropertyRecord {
    pub fn new(name: &str, anchor: &str) -> Self {
        PropertyRecord {
            name: name.into(),
            anchor: anchor.into(),
            trials: 0,
            failures: 0,
            worst_residual: 0.0,
            runtime_ms: 0,
            detail: String::new(),
        }
    }

    pub fn check(&mut self, residual: f64, gate: f64) {
        self.trials += 1;
        if residual.is_nan() || residual > self.worst_residual {
            self.worst_residual = if residual.is_nan() { f64::INFINITY } else { residual.max(self.worst_residual) };
        }
        if !(residual <= gate) {
            self.failures += 1;
        }
    }

    pub fn assert_true(&mut self, ok: bool) {
        self.trials += 1;
        if !ok {
            self.failures += 1;
            self.worst_residual = self.worst_residual.max(1.0);
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub seed: u64,
    pub tol: TolerancePolicy,
    pub records: Vec<PropertyRecord>,
    pub passed: bool,
    pub timestamp_ms: u128,
}

impl SuiteReport {
    /// Canonical JSON; `stable_only` drops runtimes and the timestamp so
    /// reports from identical configs compare byte-for-byte.
    pub fn to_value(&self, stable_only: bool) -> Value {
        let records: Vec<Value> = self
            .records
            .iter()
            .map(|r| {
                let mut m = Map::new();
                m.insert("anchor".into(), json!(r.anchor));
                m.insert("detail".into(), json!(r.detail));
                m.insert("failures".into(), json!(r.failures));
                m.insert("name".into(), json!(r.name));
                if !stable_only {
                    m.insert("runtime_ms".into(), json!(r.runtime_ms));
                }
                m.insert("trials".into(), json!(r.trials));
                m.insert("worst_residual".into(), json!(r.worst_residual));
                Value::Object(m)
            })
            .collect();
        let mut m = Map::new();
        m.insert("passed".into(), json!(self.passed));
        m.insert("records".into(), Value::Array(records));
        m.insert("seed".into(), json!(self.seed));
        if !stable_only {
            m.insert("timestamp_ms".into(), json!(self.timestamp_ms));
        }
        m.insert(
            "tol".into(),
            json!({"atol": self.tol.atol, "eig_clip": self.tol.eig_clip, "rtol": self.tol.rtol}),
        );
        Value::Object(m)
    }
}

pub const SUITE_NAMES: [&str; 11] = [
    "axioms",
    "calculus",
    "characterize",
    "density",
    "determinism",
    "greenjulg",
    "hereditary",
    "module",
    "positivity",
    "precomplete",
    "spectrum",
];

/// FNV-1a sub-seed so suite order never affects sampling.
pub(crate) fn sub_seed(seed: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325 ^ seed;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Run the selected suites and assemble the report (sorted by suite name).
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport, SuiteError> {
    config.validate()?;
    let mut records = Vec::new();
    for name in SUITE_NAMES {
        if let Some(only) = &config.only {
            if !only.contains(name) {
                continue;
            }
        }
        let started = Instant::now();
        let mut batch = match name {
            "positivity" => runs::positivity(config),
            "spectrum" => runs::spectrum(config),
            "axioms" => runs::axioms(config),
            "calculus" => runs::calculus(config),
            "hereditary" => runs::hereditary(config),
            "module" => runs::module(config),
            "density" => runs::density(config),
            "precomplete" => runs::precomplete(config),
            "characterize" => runs::characterize(config),
            "greenjulg" => runs::greenjulg(config),
            "determinism" => runs::determinism(config),
            _ => unreachable!(),
        }
        .map_err(|what| SuiteError::Aborted { name: name.into(), what })?;
        let elapsed = started.elapsed().as_millis();
        for r in &mut batch {
            r.runtime_ms = elapsed;
        }
        records.extend(batch);
    }
    let passed = records.iter().all(|r| r.passed());
    let report = SuiteReport {
        seed: config.seed,
        tol: config.tol,
        records,
        passed,
        timestamp_ms: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
    };
    if let Some(path) = &config.output {
        let body = crate::doc::to_canonical_string(&report.to_value(false));
        std::fs::write(path, body).map_err(|source| SuiteError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(report)
}

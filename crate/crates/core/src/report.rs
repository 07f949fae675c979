//! JSON run reports.

use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// JSON value for an extended real (`"inf"` for +∞).
pub fn ext(v: f64) -> Value {
    if v == f64::INFINITY {
        json!("inf")
    } else if v.is_nan() {
        json!("nan")
    } else {
        json!(v)
    }
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs_digest: String,
    pub parameters: Value,
    pub results: Value,
    pub witnesses: Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// Hash of every field except `wall_time_ms` and itself.
    pub report_digest: String,
    pub wall_time_ms: u64,
}

#[derive(Debug)]
pub struct ReportBuilder {
    command: String,
    inputs: Sha256,
    parameters: serde_json::Map<String, Value>,
    results: serde_json::Map<String, Value>,
    witnesses: serde_json::Map<String, Value>,
    seed: Option<u64>,
    started: Instant,
}

impl ReportBuilder {
    pub fn new(command: &str) -> Self {
        ReportBuilder {
            command: command.to_string(),
            inputs: Sha256::new(),
            parameters: Default::default(),
            results: Default::default(),
            witnesses: Default::default(),
            seed: None,
            started: Instant::now(),
        }
    }

    /// Feeds raw input bytes (file contents) into the inputs digest.
    pub fn input(&mut self, bytes: &[u8]) -> &mut Self {
        self.inputs.update((bytes.len() as u64).to_le_bytes());
        self.inputs.update(bytes);
        self
    }

    pub fn parameter(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn result(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.results.insert(key.to_string(), value.into());
        self
    }

    pub fn witness(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.witnesses.insert(key.to_string(), value.into());
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seed = Some(seed);
        self
    }

    pub fn finish(self) -> RunReport {
        let mut report = RunReport {
            command: self.command,
            inputs_digest: format!("{:x}", self.inputs.finalize()),
            parameters: Value::Object(self.parameters),
            results: Value::Object(self.results),
            witnesses: Value::Object(self.witnesses),
            seed: self.seed,
            tool_version: TOOL_VERSION.to_string(),
            report_digest: String::new(),
            wall_time_ms: self.started.elapsed().as_millis() as u64,
        };
        report.report_digest = report.compute_digest();
        report
    }
}

impl RunReport {
    pub fn compute_digest(&self) -> String {
        let stable = json!({
            "command": self.command,
            "inputs_digest": self.inputs_digest,
            "parameters": self.parameters,
            "results": self.results,
            "witnesses": self.witnesses,
            "seed": self.seed,
            "tool_version": self.tool_version,
        });
        sha256_hex(stable.to_string().as_bytes())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(extra: u64) -> RunReport {
        let mut b = ReportBuilder::new("doubling");
        b.input(b"kind: metric")
            .parameter("mode", "exact")
            .result("constant", 3)
            .result("bound", ext(f64::INFINITY))
            .witness("center", "a")
            .seed(extra);
        b.finish()
    }

    #[test]
    fn digest_ignores_wall_time() {
        let mut a = build(1);
        let b = build(1);
        a.wall_time_ms += 1000;
        assert_eq!(a.compute_digest(), b.report_digest);
        assert_ne!(build(2).report_digest, b.report_digest);
        assert_eq!(a.results["bound"], json!("inf"));
    }

    #[test]
    fn hex_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

#[derive(Clone, Debug, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

/// Run-dependent fields. Everything else in a manifest is a function of the
/// inputs.
#[derive(Clone, Debug, Serialize)]
pub struct Timestamp {
    pub started_unix_ms: u128,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 over the input files in order.
    pub input_hash: String,
    pub inputs: Vec<InputFile>,
    pub config: Value,
    pub tool_version: String,
    pub timestamp: Timestamp,
}

pub struct Recorder {
    command: String,
    config: Value,
    inputs: Vec<(String, Vec<u8>)>,
    started: Instant,
    started_unix_ms: u128,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl Recorder {
    pub fn new(command: &str, config: Value) -> Self {
        Self {
            command: command.to_string(),
            config,
            inputs: Vec::new(),
            started: Instant::now(),
            started_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
        }
    }

    pub fn input(&mut self, path: &str, bytes: &[u8]) {
        self.inputs.push((path.to_string(), bytes.to_vec()));
    }

    pub fn finish(&self) -> RunManifest {
        let mut all = Sha256::new();
        let inputs = self
            .inputs
            .iter()
            .map(|(path, bytes)| {
                let h = Sha256::digest(bytes);
                all.update(h);
                InputFile {
                    path: path.clone(),
                    sha256: hex(&h),
                }
            })
            .collect();
        RunManifest {
            command: self.command.clone(),
            input_hash: hex(&all.finalize()),
            inputs,
            config: self.config.clone(),
            tool_version: format!("rgs {}", env!("CARGO_PKG_VERSION")),
            timestamp: Timestamp {
                started_unix_ms: self.started_unix_ms,
                wall_seconds: self.started.elapsed().as_secs_f64(),
            },
        }
    }
}

/// JSON document `{ "manifest": ..., "result": ... }`.
pub fn json_document(manifest: &RunManifest, result: Value) -> String {
    let doc = serde_json::json!({ "manifest": manifest, "result": result });
    let mut s = serde_json::to_string_pretty(&doc).expect("document serialises");
    s.push('\n');
    s
}

/// CSV body preceded by the manifest on one `#` comment line.
pub fn csv_document(manifest: &RunManifest, body: &str) -> String {
    let header = serde_json::to_string(manifest).expect("manifest serialises");
    format!("# rgs-manifest {header}\n{body}")
}

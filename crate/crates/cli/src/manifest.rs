//! Run manifests: every tunable that affects an output, echoed next to it.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub created_at: Option<String>,
    pub inputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub event_patterns: Vec<String>,
    /// Resolved configuration values.
    pub config: BTreeMap<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<DataStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clustering: Option<ClusteringStats>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DataStats {
    pub queries: usize,
    pub product_types: usize,
    pub edges: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows_read: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows_matched: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows_malformed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusteringStats {
    pub mode: String,
    pub tau: f64,
    pub tau_p: f64,
    pub clusters: usize,
    pub noise: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
}

impl RunManifest {
    pub fn new(command: &str, created_at: Option<String>) -> Self {
        RunManifest {
            tool: "carmine",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            created_at,
            inputs: BTreeMap::new(),
            event: None,
            event_patterns: Vec::new(),
            config: BTreeMap::new(),
            data: None,
            clustering: None,
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs
            .insert(name.to_string(), path.display().to_string());
    }

    pub fn set<V: Serialize>(&mut self, key: &str, value: V) {
        self.config.insert(
            key.to_string(),
            serde_json::to_value(value).expect("manifest values serialize"),
        );
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut body = serde_json::to_string_pretty(self).expect("manifest serializes");
        body.push('\n');
        std::fs::write(path, body)
    }
}

//! Run manifests: what ran, on which config, and what it wrote.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepStatus {
    Ok,
    Failed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Step {
    pub name: String,
    pub status: StepStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub elapsed_ms: u128,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_path: String,
    pub config_sha256: String,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub exit_code: Option<i32>,
    pub steps: Vec<Step>,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn start(command: &str, config_path: &Path, config_sha256: String, seed: u64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_path: config_path.display().to_string(),
            config_sha256,
            seed,
            started_at: chrono::Utc::now().to_rfc3339(),
            finished_at: None,
            exit_code: None,
            steps: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record<T, E: std::fmt::Display>(&mut self, name: &str, started: Instant, r: &Result<T, E>) {
        self.steps.push(Step {
            name: name.to_string(),
            status: if r.is_ok() { StepStatus::Ok } else { StepStatus::Failed },
            message: r.as_ref().err().map(|e| e.to_string()),
            elapsed_ms: started.elapsed().as_millis(),
        });
    }

    pub fn add_output(&mut self, rel: &str, contents: &[u8]) {
        self.outputs.retain(|o| o.path != rel);
        self.outputs.push(OutputFile {
            path: rel.to_string(),
            bytes: contents.len() as u64,
            sha256: sha256_hex(contents),
        });
    }

    pub fn finish(&mut self, exit_code: i32) {
        self.exit_code = Some(exit_code);
        self.finished_at = Some(chrono::Utc::now().to_rfc3339());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn outputs_are_replaced_not_duplicated() {
        let mut m = RunManifest::start("mop", Path::new("c.json"), String::new(), 0);
        m.add_output("a.csv", b"1");
        m.add_output("a.csv", b"22");
        assert_eq!(m.outputs.len(), 1);
        assert_eq!(m.outputs[0].bytes, 2);
        m.finish(0);
        assert_eq!(m.exit_code, Some(0));
    }
}

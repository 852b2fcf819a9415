//! Run manifests: every command records its config hash, seed, and the
//! content hash of each emitted file, so reruns can be compared without
//! diffing the payloads.

use std::path::Path;
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

use magtrack_core::config::ScenarioConfig;

#[derive(Serialize)]
struct OutputFile {
    file: String,
    sha256: String,
}

#[derive(Serialize)]
pub struct RunManifest {
    tool_version: String,
    command: String,
    config_path: String,
    config_sha256: String,
    master_seed: u64,
    outputs: Vec<OutputFile>,
    warnings: Vec<String>,
    wall_ms: u128,
}

pub struct ManifestBuilder {
    manifest: RunManifest,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

impl ManifestBuilder {
    pub fn new(
        command: &str,
        config_path: &Path,
        cfg: &ScenarioConfig,
    ) -> std::io::Result<Self> {
        let config_bytes = std::fs::read(config_path)?;
        Ok(Self {
            manifest: RunManifest {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                config_path: config_path.display().to_string(),
                config_sha256: sha256_hex(&config_bytes),
                master_seed: cfg.experiment.master_seed,
                outputs: Vec::new(),
                warnings: Vec::new(),
                wall_ms: 0,
            },
        })
    }

    pub fn warn(&mut self, message: String) {
        self.manifest.warnings.push(message);
    }

    /// Write one output file and record its content hash.
    pub fn emit(&mut self, dir: &Path, name: &str, content: &str) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), content)?;
        self.manifest.outputs.push(OutputFile {
            file: name.to_string(),
            sha256: sha256_hex(content.as_bytes()),
        });
        Ok(())
    }

    /// Write `manifest.json` and consume the builder.
    pub fn finish(mut self, dir: &Path, wall: Duration) -> std::io::Result<()> {
        self.manifest.wall_ms = wall.as_millis();
        std::fs::create_dir_all(dir)?;
        let mut text =
            serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(dir.join("manifest.json"), text)
    }
}

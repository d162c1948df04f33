//! Run manifests: enough to byte-reproduce a run and verify its outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub schema_version: u32,
    pub command: String,
    pub master_seed: u64,
    /// Fully resolved configuration after flag/file/default precedence.
    pub config: serde_json::Value,
    /// Input label -> path or digest string.
    pub inputs: BTreeMap<String, String>,
    /// Output label -> file digest.
    pub outputs: BTreeMap<String, FileDigest>,
}

impl RunManifest {
    pub fn new(command: &str, master_seed: u64, config: serde_json::Value) -> RunManifest {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            schema_version: sceneq_core::SCHEMA_VERSION,
            command: command.to_string(),
            master_seed,
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn record_input(&mut self, label: &str, path: &Path) -> io::Result<()> {
        let digest = digest_file(path)?;
        self.inputs.insert(
            label.to_string(),
            format!("{} sha256:{}", digest.path, digest.sha256),
        );
        Ok(())
    }

    pub fn record_input_label(&mut self, label: &str, value: &str) {
        self.inputs.insert(label.to_string(), value.to_string());
    }

    pub fn record_output(&mut self, label: &str, path: &Path) -> io::Result<()> {
        self.outputs.insert(label.to_string(), digest_file(path)?);
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let path = dir.join("run_manifest.json");
        fs::write(
            &path,
            serde_json::to_string_pretty(self).expect("manifest serializes"),
        )
    }
}

pub fn digest_file(path: &Path) -> io::Result<FileDigest> {
    let bytes = fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex_string(&hasher.finalize()),
        bytes: bytes.len() as u64,
    })
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

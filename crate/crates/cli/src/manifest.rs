//! Run manifest: what was run, with which resolved configuration, and the
//! SHA-256 digest of every file it wrote.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::CliError;
use crate::report::Format;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub format: Format,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    /// File name to hex SHA-256.
    pub outputs: BTreeMap<String, String>,
    pub config: Config,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        config: Config,
        threads: Option<usize>,
        format: Format,
        started_unix_ms: u64,
        finished_unix_ms: u64,
        outputs: &[(String, Vec<u8>)],
    ) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            seed: config.seed,
            threads,
            format,
            started_unix_ms,
            finished_unix_ms,
            outputs: outputs
                .iter()
                .map(|(name, bytes)| (name.clone(), sha256_hex(bytes)))
                .collect(),
            config,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("manifest: {e}")))
    }

    /// Names of outputs in `dir` whose digest no longer matches.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>, CliError> {
        let mut bad = Vec::new();
        for (name, digest) in &self.outputs {
            let bytes = std::fs::read(dir.join(name))?;
            if &sha256_hex(&bytes) != digest {
                bad.push(name.clone());
            }
        }
        Ok(bad)
    }
}

//! The `<command>.provenance.json` record written next to every command's
//! outputs.

use std::path::Path;
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Serialize)]
pub struct Provenance<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_path: String,
    /// SHA-256 of the config file bytes.
    pub config_sha256: String,
    /// The configuration after command-line overrides; enough to re-run.
    pub config: &'a RunConfig,
    pub threads: usize,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl<'a> Provenance<'a> {
    pub fn new(command: &'a str, config_path: &Path, bytes: &[u8], config: &'a RunConfig) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_path: config_path.display().to_string(),
            config_sha256: sha256_hex(bytes),
            config,
            threads: rayon::current_num_threads(),
            outputs: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn finish(mut self, outputs: &[&str], wall: Duration) -> Self {
        self.outputs = outputs.iter().map(|s| s.to_string()).collect();
        self.wall_time_s = wall.as_secs_f64();
        self
    }
}

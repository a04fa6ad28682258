//! Run directories `<outdir>/<run-id>/` with a `manifest.json`.
//!
//! The run id hashes the command, the canonical configuration and the
//! input file contents, so rerunning a command with the same inputs
//! rewrites the same directory with the same bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::interchange::FORMAT_VERSION;
use crate::io::write_text;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub treerules: &'static str,
    pub interchange_format: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub run_id: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub versions: Versions,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<String>,
}

pub struct RunDir {
    pub path: PathBuf,
    manifest: Manifest,
}

impl RunDir {
    pub fn create(command: &str, cfg: &RunConfig, inputs: &[&Path]) -> Result<Self> {
        let config_sha256 = sha256_hex(cfg.to_toml().as_bytes());
        let mut digests = Vec::with_capacity(inputs.len());
        for p in inputs {
            let bytes = fs::read(p).map_err(|e| Error::io(*p, e))?;
            digests.push(FileDigest { path: p.display().to_string(), sha256: sha256_hex(&bytes) });
        }
        let mut key = format!("{command}\n{config_sha256}\n");
        for d in &digests {
            key.push_str(&d.sha256);
            key.push('\n');
        }
        let run_id = format!("{command}-{}", &sha256_hex(key.as_bytes())[..12]);
        let path = cfg.run.outdir.join(&run_id);
        fs::create_dir_all(&path).map_err(|e| Error::io(&path, e))?;
        Ok(RunDir {
            path,
            manifest: Manifest {
                run_id,
                command: command.into(),
                config_sha256,
                seed: cfg.run.seed,
                versions: Versions { treerules: env!("CARGO_PKG_VERSION"), interchange_format: FORMAT_VERSION },
                inputs: digests,
                outputs: Vec::new(),
            },
        })
    }

    pub fn run_id(&self) -> &str {
        &self.manifest.run_id
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let p = self.path.join(name);
        write_text(&p, contents)?;
        self.manifest.outputs.push(name.into());
        Ok(p)
    }

    /// Writes `manifest.json` and returns its path.
    pub fn finish(self) -> Result<PathBuf> {
        let p = self.path.join("manifest.json");
        write_text(&p, &(serde_json::to_string_pretty(&self.manifest).expect("manifest serializes") + "\n"))?;
        Ok(p)
    }
}

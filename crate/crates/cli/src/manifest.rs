//! Output directory bookkeeping and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_NAME: &str = "manifest.json";

/// `sha256:<hex>` of `bytes`.
pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub digest: String,
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command_line: Vec<String>,
    pub config_digest: Option<String>,
    /// Resolved configuration, including defaults and the seed.
    pub config: Option<serde_json::Value>,
    pub inputs: Vec<InputRecord>,
    pub seed: Option<u64>,
    pub rng: Option<&'static str>,
    pub threads: usize,
    pub started_utc: String,
    pub finished_utc: String,
    pub outputs: Vec<String>,
    pub exit_code: u8,
}

/// Writes files under one directory and records them for the manifest.
pub struct Run {
    dir: PathBuf,
    started: String,
    outputs: Vec<String>,
    pub config_digest: Option<String>,
    pub config: Option<serde_json::Value>,
    pub inputs: Vec<InputRecord>,
    pub seed: Option<u64>,
    pub rng: Option<&'static str>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl Run {
    pub fn new(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            started: now(),
            outputs: Vec::new(),
            config_digest: None,
            config: None,
            inputs: Vec::new(),
            seed: None,
            rng: None,
        })
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        self.inputs.push(InputRecord {
            path: path.display().to_string(),
            digest: digest(&bytes),
        });
        Ok(bytes)
    }

    /// Creates `name` inside the output directory and fills it with `fill`.
    pub fn write<F>(&mut self, name: &str, fill: F) -> CliResult<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        debug_assert!(!name.contains(['/', '\\']));
        let path = self.dir.join(name);
        let result = File::create(&path).and_then(|f| {
            let mut w = BufWriter::new(f);
            fill(&mut w)?;
            w.flush()
        });
        result.map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
            writeln!(w)
        })
    }

    /// Writes the manifest as the last output.
    pub fn finish(mut self, exit_code: u8) -> CliResult<()> {
        let manifest = RunManifest {
            tool: "dap-layer",
            version: env!("CARGO_PKG_VERSION"),
            command_line: std::env::args().collect(),
            config_digest: self.config_digest.take(),
            config: self.config.take(),
            inputs: std::mem::take(&mut self.inputs),
            seed: self.seed,
            rng: self.rng,
            threads: rayon::current_num_threads(),
            started_utc: self.started.clone(),
            finished_utc: now(),
            outputs: self.outputs.clone(),
            exit_code,
        };
        self.write_json(MANIFEST_NAME, &manifest)
    }
}

use std::path::{Path, PathBuf};
use std::time::Instant;

use catdiff_core::chain_io::file_sha256;
use serde::Serialize;

use crate::error::{CliError, Stage, StageExt};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

impl Artifact {
    pub fn hash(path: &Path, stage: Stage) -> Result<Self, CliError> {
        Ok(Self {
            path: path.display().to_string(),
            sha256: file_sha256(path).stage(stage)?,
        })
    }
}

/// Record of one invocation: what ran, with which resolved settings, on
/// which inputs, producing which outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
    pub wall_clock_seconds: f64,
}

pub struct ManifestBuilder {
    started: Instant,
    command: &'static str,
    inputs: Vec<Artifact>,
}

impl ManifestBuilder {
    pub fn start(command: &'static str) -> Self {
        Self {
            started: Instant::now(),
            command,
            inputs: Vec::new(),
        }
    }

    /// Hashes an input file now, before anything can modify it.
    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs.push(Artifact::hash(path, Stage::Input)?);
        Ok(())
    }

    /// Hashes the outputs and writes the manifest into `dir` through a
    /// temporary file and a rename.
    pub fn finish(
        self,
        dir: &Path,
        config: serde_json::Value,
        seed: Option<u64>,
        outputs: &[PathBuf],
    ) -> Result<PathBuf, CliError> {
        let outputs = outputs
            .iter()
            .map(|p| Artifact::hash(p, Stage::Output))
            .collect::<Result<Vec<_>, _>>()?;
        let manifest = RunManifest {
            tool: "catdiff",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            argv: std::env::args().collect(),
            config,
            seed,
            inputs: self.inputs,
            outputs,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        let tmp = dir.join(format!("{MANIFEST_FILE}.tmp"));
        let path = dir.join(MANIFEST_FILE);
        catdiff_core::chain_io::write_json(&tmp, &manifest).stage(Stage::Output)?;
        std::fs::rename(&tmp, &path)
            .map_err(|e| CliError::at(Stage::Output, catdiff_core::Error::io(&path, e)))?;
        Ok(path)
    }
}

//! Per-stage output directories and their manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Loaded, Seeds};

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub stage: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config_sha256: String,
    pub seeds: Seeds,
    pub inputs: BTreeMap<String, FileEntry>,
    /// Artifact file name (relative to the stage directory) to its digest.
    pub artifacts: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Collects the inputs and artifacts of one stage run.
pub struct StageOutput {
    stage: String,
    dir: PathBuf,
    manifest: Manifest,
}

impl StageOutput {
    /// Creates `<output_dir>/<stage>`, clearing a previous manifest so a
    /// crashed rerun cannot leave a stale "ok" behind.
    pub fn create(loaded: &Loaded, stage: &str) -> Result<Self> {
        let dir = loaded.output_dir().join(stage);
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let _ = fs::remove_file(dir.join("manifest.json"));
        Ok(StageOutput {
            stage: stage.to_string(),
            dir,
            manifest: Manifest {
                stage: stage.to_string(),
                status: "running".into(),
                error: None,
                config_sha256: loaded.digest(),
                seeds: loaded.config.seeds,
                inputs: BTreeMap::new(),
                artifacts: BTreeMap::new(),
            },
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Records an input file. `shown` is the path as the config names it.
    pub fn input(&mut self, name: &str, shown: &Path, resolved: &Path) -> Result<()> {
        let entry = FileEntry {
            path: shown.to_string_lossy().into_owned(),
            sha256: sha256_file(resolved)?,
        };
        self.manifest.inputs.insert(name.to_string(), entry);
        Ok(())
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents.as_ref()).with_context(|| format!("cannot write {}", path.display()))?;
        self.manifest
            .artifacts
            .insert(name.to_string(), hex::encode(Sha256::digest(contents.as_ref())));
        log::info!("{}: wrote {}", self.stage, path.display());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    /// Registers a file something else wrote into the stage directory.
    pub fn track(&mut self, name: &str) -> Result<()> {
        let digest = sha256_file(&self.dir.join(name))?;
        self.manifest.artifacts.insert(name.to_string(), digest);
        Ok(())
    }

    pub fn finish(mut self, outcome: &Result<()>) -> Result<()> {
        match outcome {
            Ok(()) => self.manifest.status = "ok".into(),
            Err(e) => {
                self.manifest.status = "failed".into();
                self.manifest.error = Some(format!("{e:#}"));
            }
        }
        self.write_manifest()
    }

    pub fn write_manifest(&mut self) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn set_status(&mut self, status: &str) {
        self.manifest.status = status.to_string();
    }
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Stage;
use crate::error::{Error, Result};

/// Bumped whenever an artifact layout changes.
pub const ARTIFACT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

/// Written last into every stage directory; its presence marks the stage as
/// complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub version: u32,
    /// File name → SHA-256 of its contents.
    pub files: BTreeMap<String, String>,
    /// Upstream stage → SHA-256 of its manifest at the time of the run.
    pub inputs: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn stage_dir(output_dir: &Path, stage: Stage) -> PathBuf {
    output_dir.join(stage.name())
}

/// Empties and recreates a stage's directory.
pub fn reset_stage(output_dir: &Path, stage: Stage) -> Result<PathBuf> {
    let dir = stage_dir(output_dir, stage);
    if dir.exists() {
        std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

/// Checks that an upstream stage finished and all of its files are present.
pub fn require(output_dir: &Path, stage: Stage) -> Result<PathBuf> {
    let dir = stage_dir(output_dir, stage);
    let manifest_path = dir.join(MANIFEST);
    if !manifest_path.is_file() {
        return Err(Error::MissingArtifact(manifest_path));
    }
    let manifest: StageManifest = read_json(&manifest_path)?;
    if manifest.version != ARTIFACT_VERSION {
        return Err(Error::MissingArtifact(manifest_path));
    }
    for name in manifest.files.keys() {
        let p = dir.join(name);
        if !p.is_file() {
            return Err(Error::MissingArtifact(p));
        }
    }
    Ok(dir)
}

/// Hashes the written files and records the manifest.
pub fn finish(dir: &Path, stage: Stage, files: &[String], upstream: &[Stage]) -> Result<()> {
    let output_dir = dir.parent().unwrap_or(dir);
    let mut hashes = BTreeMap::new();
    for f in files {
        hashes.insert(f.clone(), sha256_file(&dir.join(f))?);
    }
    let mut inputs = BTreeMap::new();
    for up in upstream {
        let m = stage_dir(output_dir, *up).join(MANIFEST);
        inputs.insert(up.name().to_owned(), sha256_file(&m)?);
    }
    let manifest = StageManifest {
        stage: stage.name().to_owned(),
        version: ARTIFACT_VERSION,
        files: hashes,
        inputs,
    };
    write_json(&dir.join(MANIFEST), &manifest)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

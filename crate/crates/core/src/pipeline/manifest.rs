use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checksum::sha256_file;
use crate::error::{Error, Result};

/// A file written by a run. `name` is relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub name: String,
    pub stage: String,
    pub sha256: String,
    pub bytes: u64,
}

impl ArtifactRecord {
    pub fn of(out_dir: &Path, name: &str, stage: &str) -> Result<Self> {
        let path = out_dir.join(name);
        let bytes = std::fs::metadata(&path).map_err(|e| Error::io(&path, e))?.len();
        Ok(ArtifactRecord {
            name: name.to_owned(),
            stage: stage.to_owned(),
            sha256: sha256_file(&path)?,
            bytes,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ran,
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    /// Stage-specific counters.
    pub summary: serde_json::Value,
}

/// Everything needed to reproduce a run. Deliberately free of timestamps
/// and host details so that reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: ArtifactRecord,
    pub stages: Vec<StageRecord>,
    pub artifacts: Vec<ArtifactRecord>,
}

impl Manifest {
    pub fn artifact(&self, name: &str) -> Option<&ArtifactRecord> {
        self.artifacts.iter().find(|a| a.name == name)
    }

    /// `(name, sha256)` pairs in run order.
    pub fn checksums(&self) -> Vec<(String, String)> {
        self.artifacts
            .iter()
            .map(|a| (a.name.clone(), a.sha256.clone()))
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Re-hashes every listed file and reports the ones that changed.
    pub fn verify(&self, out_dir: &Path) -> Result<Vec<String>> {
        let mut changed = Vec::new();
        for a in &self.artifacts {
            let now = sha256_file(&out_dir.join(&a.name))?;
            if now != a.sha256 {
                changed.push(a.name.clone());
            }
        }
        Ok(changed)
    }
}

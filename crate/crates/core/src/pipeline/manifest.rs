//! Per-stage record of produced artifacts and the digests they came from.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{io, PipelineError, Stage};
use crate::model::hex_digest;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageArtifact {
    pub stage: Stage,
    /// File name inside the output directory.
    pub path: String,
    pub content_digest: String,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub input_digest: String,
    pub config_digest: String,
    pub artifacts: Vec<StageArtifact>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: BTreeMap<Stage, StageRecord>,
}

impl Manifest {
    /// Missing or unreadable manifests start empty.
    pub fn load(out_dir: &Path) -> Manifest {
        let path = out_dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Manifest::default();
        }
        io::read_json(&path).unwrap_or_else(|e| {
            log::warn!("ignoring unreadable manifest: {e}");
            Manifest::default()
        })
    }

    pub fn save(&self, out_dir: &Path) -> Result<(), PipelineError> {
        io::write_atomic(&out_dir.join(MANIFEST_FILE), &io::to_json(self))
    }

    /// Whether `stage` already ran with these digests and its artifacts are
    /// untouched on disk.
    pub fn is_current(&self, stage: Stage, input_digest: &str, config_digest: &str, out_dir: &Path) -> bool {
        let Some(rec) = self.stages.get(&stage) else {
            return false;
        };
        rec.input_digest == input_digest
            && rec.config_digest == config_digest
            && rec.artifacts.iter().all(|a| {
                std::fs::read(out_dir.join(&a.path)).is_ok_and(|bytes| hex_digest(&bytes) == a.content_digest)
            })
    }
}

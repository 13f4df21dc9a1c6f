//! Recognition of input files by canonical basename or `kind=path`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::PipelineError;
use crate::ingest::{RawTraceSource, TraceFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InputKind {
    Traces,
    AtlasTraces,
    Probes,
    GeoObservations,
    AsnRecords,
    AsInfo,
    Cables,
    CountryGeo,
    Failure,
    Operators,
    GroundTruth,
}

const KINDS: [(InputKind, &str); 11] = [
    (InputKind::Traces, "traces"),
    (InputKind::AtlasTraces, "atlas"),
    (InputKind::Probes, "probes"),
    (InputKind::GeoObservations, "geo_observations"),
    (InputKind::AsnRecords, "asn_records"),
    (InputKind::AsInfo, "as_info"),
    (InputKind::Cables, "cables"),
    (InputKind::CountryGeo, "country_geo"),
    (InputKind::Failure, "failure"),
    (InputKind::Operators, "operators"),
    (InputKind::GroundTruth, "ground_truth"),
];

impl InputKind {
    pub fn name(self) -> &'static str {
        KINDS.iter().find(|(k, _)| *k == self).map(|(_, n)| *n).unwrap_or("?")
    }

    /// Kind implied by a file name, if any.
    pub fn from_basename(name: &str) -> Option<Self> {
        let kind = match name {
            "probes.json" => InputKind::Probes,
            "geo_observations.jsonl" => InputKind::GeoObservations,
            "asn_records.jsonl" => InputKind::AsnRecords,
            "as_info.jsonl" => InputKind::AsInfo,
            "cables.json" => InputKind::Cables,
            "country_geo.json" => InputKind::CountryGeo,
            "failure.json" => InputKind::Failure,
            "operators.json" => InputKind::Operators,
            "ground_truth.jsonl" => InputKind::GroundTruth,
            n if n.starts_with("traces") && n.ends_with(".jsonl") => InputKind::Traces,
            n if n.starts_with("atlas") && (n.ends_with(".json") || n.ends_with(".jsonl")) => InputKind::AtlasTraces,
            _ => return None,
        };
        Some(kind)
    }

    /// Trace sources may be given many times; everything else once.
    pub fn repeatable(self) -> bool {
        matches!(self, InputKind::Traces | InputKind::AtlasTraces)
    }
}

impl FromStr for InputKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        KINDS
            .iter()
            .find(|(_, n)| *n == s)
            .map(|(k, _)| *k)
            .ok_or_else(|| format!("unknown input kind {s:?}"))
    }
}

impl fmt::Display for InputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Trace source for a path, with the format implied by its name.
pub fn trace_source(path: &Path) -> RawTraceSource {
    let atlas = path
        .file_name()
        .and_then(|n| n.to_str())
        .and_then(InputKind::from_basename)
        == Some(InputKind::AtlasTraces);
    RawTraceSource {
        format: if atlas { TraceFormat::AtlasJson } else { TraceFormat::CanonicalJsonl },
        path: path.to_path_buf(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct InputSet {
    files: BTreeMap<InputKind, Vec<PathBuf>>,
}

impl InputSet {
    /// Register `kind=path`, a recognized file, or every recognized file in
    /// a directory.
    pub fn add(&mut self, spec: &str) -> Result<(), PipelineError> {
        if let Some((kind, path)) = spec.split_once('=') {
            if let Ok(kind) = kind.parse::<InputKind>() {
                return self.insert(kind, PathBuf::from(path));
            }
        }
        let path = PathBuf::from(spec);
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(&path)
                .map_err(|e| PipelineError::Io {
                    path: path.clone(),
                    source: e,
                })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .collect();
            entries.sort();
            for p in entries {
                if let Some(kind) = p.file_name().and_then(|n| n.to_str()).and_then(InputKind::from_basename) {
                    self.insert(kind, p)?;
                }
            }
            return Ok(());
        }
        let kind = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(InputKind::from_basename)
            .ok_or_else(|| PipelineError::Usage(format!("cannot tell what kind of input {spec:?} is; use kind=path")))?;
        self.insert(kind, path)
    }

    pub fn insert(&mut self, kind: InputKind, path: PathBuf) -> Result<(), PipelineError> {
        let slot = self.files.entry(kind).or_default();
        if !slot.is_empty() && !kind.repeatable() {
            return Err(PipelineError::Usage(format!("{kind} given more than once")));
        }
        slot.push(path);
        Ok(())
    }

    pub fn get(&self, kind: InputKind) -> Option<&Path> {
        self.files.get(&kind).and_then(|v| v.first()).map(PathBuf::as_path)
    }

    pub fn all(&self, kind: InputKind) -> &[PathBuf] {
        self.files.get(&kind).map_or(&[], Vec::as_slice)
    }

    pub fn trace_sources(&self) -> Vec<RawTraceSource> {
        self.all(InputKind::Traces)
            .iter()
            .map(|p| RawTraceSource {
                format: TraceFormat::CanonicalJsonl,
                path: p.clone(),
            })
            .chain(self.all(InputKind::AtlasTraces).iter().map(|p| RawTraceSource {
                format: TraceFormat::AtlasJson,
                path: p.clone(),
            }))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recognizes_names() {
        assert_eq!(InputKind::from_basename("traces.jsonl"), Some(InputKind::Traces));
        assert_eq!(InputKind::from_basename("traces-2024-01.jsonl"), Some(InputKind::Traces));
        assert_eq!(InputKind::from_basename("atlas_5001.json"), Some(InputKind::AtlasTraces));
        assert_eq!(InputKind::from_basename("cables.json"), Some(InputKind::Cables));
        assert_eq!(InputKind::from_basename("notes.txt"), None);
        for (k, n) in KINDS {
            assert_eq!(n.parse::<InputKind>(), Ok(k));
        }
    }

    #[test]
    fn explicit_and_directory_inputs() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["cables.json", "traces.jsonl", "traces2.jsonl", "readme.md"] {
            std::fs::write(dir.path().join(f), "").unwrap();
        }
        let mut set = InputSet::default();
        set.add(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(set.all(InputKind::Traces).len(), 2);
        assert!(set.get(InputKind::Cables).is_some());
        assert!(set.add(dir.path().join("cables.json").to_str().unwrap()).is_err());
        set.add("as_info=/elsewhere/asn.jsonl").unwrap();
        assert_eq!(set.get(InputKind::AsInfo), Some(Path::new("/elsewhere/asn.jsonl")));
        assert!(set.add("/tmp/mystery.bin").is_err());
        assert_eq!(trace_source(Path::new("x/atlas.json")).format, TraceFormat::AtlasJson);
    }
}

//! Stage orchestration over on-disk artifacts.
//!
//! Each stage reads its inputs and upstream artifacts from the output
//! directory, writes its own artifacts atomically and records their digests
//! in `manifest.json`. A stage whose inputs and config are unchanged since
//! its last run is skipped.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::AggregateError;
use crate::analyze::AnalyzeError;
use crate::model::{hex_digest, PipelineConfig};

pub mod io;
mod inputs;
mod manifest;
mod schema;
mod stages;

pub use inputs::{trace_source, InputKind, InputSet};
pub use manifest::{Manifest, StageArtifact, StageRecord, MANIFEST_FILE};
pub use schema::{validate_artifacts, SchemaCheck};
pub use stages::{ConfirmedSubmarine, FailureSpec, GeoCandidateRow, IngestReport, IpRow, OperatorTruth, SourceReport, StatsReport};

pub const LINKS: &str = "links.jsonl";
pub const IPS: &str = "ips.jsonl";
pub const LATENCY: &str = "latency_evidence.jsonl";
pub const INGEST_REPORT: &str = "ingest_report.json";
pub const GEO_CLUSTERS: &str = "geo_clusters.jsonl";
pub const LINK_CLASSES: &str = "link_classes.jsonl";
pub const GEO_CANDIDATES: &str = "geo_candidates.jsonl";
pub const IP_ASN: &str = "ip_asn.jsonl";
pub const OWNER_ASN: &str = "owner_asn.json";
pub const LINK_MAPPINGS: &str = "link_mappings.jsonl";
pub const STATS: &str = "stats.json";
pub const FAILURE_REPORT: &str = "failure_report.json";
pub const OPERATOR_REPORT: &str = "operator_report.json";
pub const CONFIRMED_SUBMARINE: &str = "confirmed_submarine.jsonl";
pub const SOL_SWEEP: &str = "sol_sweep.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("missing {0}")]
    MissingArtifact(Stage),
    #[error("{stage} needs a {kind} input")]
    MissingInput { stage: Stage, kind: InputKind },
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error("{}: {skipped} of {total} records unreadable", path.display())]
    TooManySkipped { path: PathBuf, skipped: u64, total: u64 },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Analyze(#[from] AnalyzeError),
    #[error("schema check failed for {0}")]
    Schema(String),
}

impl PipelineError {
    /// Process exit status: 2 for configuration and usage problems, 1 for
    /// everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Links,
    Clusters,
    Classes,
    GeoCandidates,
    OwnerMaps,
    Mappings,
    Reports,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Links,
        Stage::Clusters,
        Stage::Classes,
        Stage::GeoCandidates,
        Stage::OwnerMaps,
        Stage::Mappings,
        Stage::Reports,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Links => "links",
            Stage::Clusters => "clusters",
            Stage::Classes => "classes",
            Stage::GeoCandidates => "geo-candidates",
            Stage::OwnerMaps => "owner-maps",
            Stage::Mappings => "mappings",
            Stage::Reports => "reports",
        }
    }

    /// Subcommand that runs the stage.
    pub fn command(self) -> &'static str {
        match self {
            Stage::Links => "ingest",
            Stage::Clusters => "geolocate",
            Stage::Classes => "classify",
            Stage::GeoCandidates => "map-geo",
            Stage::OwnerMaps => "map-owner",
            Stage::Mappings => "aggregate",
            Stage::Reports => "analyze",
        }
    }

    /// Stage that produces an artifact file.
    pub fn producing(artifact: &str) -> Option<Stage> {
        Some(match artifact {
            LINKS | IPS | LATENCY | INGEST_REPORT => Stage::Links,
            GEO_CLUSTERS => Stage::Clusters,
            LINK_CLASSES => Stage::Classes,
            GEO_CANDIDATES => Stage::GeoCandidates,
            IP_ASN | OWNER_ASN => Stage::OwnerMaps,
            LINK_MAPPINGS => Stage::Mappings,
            STATS | FAILURE_REPORT | OPERATOR_REPORT | CONFIRMED_SUBMARINE => Stage::Reports,
            _ => return None,
        })
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    /// Accepts either the stage name or its subcommand.
    fn from_str(s: &str) -> Result<Self, String> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s || st.command() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageOutcome {
    pub stage: Stage,
    /// The stage was up to date and not re-run.
    pub skipped: bool,
    pub artifacts: Vec<String>,
}

pub struct Pipeline {
    cfg: PipelineConfig,
    inputs: InputSet,
    out_dir: PathBuf,
    force: bool,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, inputs: InputSet, out_dir: impl Into<PathBuf>) -> Result<Self, PipelineError> {
        cfg.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(Pipeline {
            cfg,
            inputs,
            out_dir: out_dir.into(),
            force: false,
        })
    }

    /// Re-run stages even when their digests are unchanged.
    pub fn force(mut self, force: bool) -> Self {
        self.force = force;
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn input(&self, stage: Stage, kind: InputKind) -> Result<&Path, PipelineError> {
        self.inputs.get(kind).ok_or(PipelineError::MissingInput { stage, kind })
    }

    /// Upstream artifact path, or the fatal error naming the stage that
    /// should have produced it.
    fn upstream(&self, name: &str) -> Result<PathBuf, PipelineError> {
        let path = self.artifact(name);
        if path.is_file() {
            Ok(path)
        } else {
            Err(PipelineError::MissingArtifact(
                Stage::producing(name).expect("known artifact"),
            ))
        }
    }

    /// Run every stage in order.
    pub fn run_all(&self) -> Result<Vec<StageOutcome>, PipelineError> {
        Stage::ALL.into_iter().map(|s| self.run(s)).collect()
    }

    pub fn run(&self, stage: Stage) -> Result<StageOutcome, PipelineError> {
        let deps = self.dependencies(stage)?;
        let mut digest_input = String::new();
        for (label, path) in &deps {
            let bytes = std::fs::read(path).map_err(|e| PipelineError::Io {
                path: path.clone(),
                source: e,
            })?;
            digest_input.push_str(&format!("{label}\t{}\n", hex_digest(&bytes)));
        }
        let input_digest = hex_digest(digest_input.as_bytes());
        let config_digest = self.cfg.digest();
        let mut manifest = Manifest::load(&self.out_dir);
        if !self.force && manifest.is_current(stage, &input_digest, &config_digest, &self.out_dir) {
            info!("{stage}: up to date");
            let artifacts = manifest.stages[&stage].artifacts.iter().map(|a| a.path.clone()).collect();
            return Ok(StageOutcome {
                stage,
                skipped: true,
                artifacts,
            });
        }
        info!("{stage}: running");
        let files = match stage {
            Stage::Links => self.run_links()?,
            Stage::Clusters => self.run_clusters()?,
            Stage::Classes => self.run_classes()?,
            Stage::GeoCandidates => self.run_geo_candidates()?,
            Stage::OwnerMaps => self.run_owner_maps()?,
            Stage::Mappings => self.run_mappings()?,
            Stage::Reports => self.run_reports()?,
        };
        let mut artifacts = Vec::new();
        for (name, bytes) in &files {
            io::write_atomic(&self.artifact(name), bytes)?;
            artifacts.push(StageArtifact {
                stage,
                path: name.to_string(),
                content_digest: hex_digest(bytes),
                config_digest: config_digest.clone(),
            });
        }
        if let Some(old) = manifest.stages.get(&stage) {
            for stale in old.artifacts.iter().filter(|a| !files.iter().any(|(n, _)| *n == a.path)) {
                let _ = std::fs::remove_file(self.artifact(&stale.path));
            }
        }
        let names = artifacts.iter().map(|a| a.path.clone()).collect();
        manifest.stages.insert(
            stage,
            StageRecord {
                input_digest,
                config_digest,
                artifacts,
            },
        );
        manifest.save(&self.out_dir)?;
        Ok(StageOutcome {
            stage,
            skipped: false,
            artifacts: names,
        })
    }

    /// Labeled files whose content determines a stage's output. Fails on the
    /// first missing upstream artifact or required input.
    fn dependencies(&self, stage: Stage) -> Result<Vec<(String, PathBuf)>, PipelineError> {
        use InputKind as K;
        let (artifacts, required, optional): (&[&str], &[InputKind], &[InputKind]) = match stage {
            Stage::Links => (&[], &[], &[K::Probes]),
            Stage::Clusters => (&[IPS, LATENCY], &[K::GeoObservations], &[]),
            Stage::Classes => (&[LINKS, GEO_CLUSTERS], &[K::Cables, K::CountryGeo], &[]),
            Stage::GeoCandidates => (&[LINK_CLASSES, GEO_CLUSTERS], &[K::Cables], &[]),
            Stage::OwnerMaps => (&[], &[K::AsnRecords, K::AsInfo, K::Cables], &[]),
            Stage::Mappings => (&[LINK_CLASSES, GEO_CLUSTERS, GEO_CANDIDATES, IP_ASN, OWNER_ASN], &[K::Cables], &[]),
            Stage::Reports => (&[LINK_MAPPINGS, LINK_CLASSES], &[K::Cables], &[K::Failure, K::Operators, K::Probes]),
        };
        let mut out = Vec::new();
        for a in artifacts {
            out.push((format!("artifact:{a}"), self.upstream(a)?));
        }
        for k in required {
            out.push((format!("input:{k}"), self.input(stage, *k)?.to_path_buf()));
        }
        for k in optional {
            if let Some(p) = self.inputs.get(*k) {
                out.push((format!("input:{k}"), p.to_path_buf()));
            }
        }
        match stage {
            Stage::Links => {
                let sources = self.inputs.trace_sources();
                if sources.is_empty() {
                    return Err(PipelineError::MissingInput { stage, kind: K::Traces });
                }
                for s in sources {
                    out.push((format!("traces:{}", s.format), s.path));
                }
            }
            Stage::Reports => {
                if self.inputs.get(K::Operators).is_some() {
                    out.push((format!("artifact:{IP_ASN}"), self.upstream(IP_ASN)?));
                    out.push((format!("input:{}", K::AsInfo), self.input(stage, K::AsInfo)?.to_path_buf()));
                }
                if let Some(path) = self.inputs.get(K::Failure) {
                    for spec in stages::load_failure_specs(path)? {
                        for p in spec.trace_paths() {
                            out.push((format!("window:{}", spec.failed_entity), p));
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_names_round_trip() {
        for s in Stage::ALL {
            assert_eq!(s.name().parse::<Stage>(), Ok(s));
            assert_eq!(s.command().parse::<Stage>(), Ok(s));
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
        assert_eq!(PipelineError::MissingArtifact(Stage::GeoCandidates).to_string(), "missing geo-candidates");
    }
}

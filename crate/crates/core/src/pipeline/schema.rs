//! Strict re-reading of every artifact against its row type.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::stages::{ConfirmedSubmarine, GeoCandidateRow, IngestReport, IpRow, StatsReport};
use super::*;
use crate::aggregate::LinkMapping;
use crate::analyze::{FailureReport, OperatorOverlap};
use crate::classify::ClassifiedLink;
use crate::geoloc::{IpGeolocation, LatencyEvidence, SweepRow};
use crate::model::IpLink;
use crate::ownermap::{AsnVote, OwnerAsnMap};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaCheck {
    pub file: String,
    pub records: usize,
    pub errors: Vec<String>,
}

fn check_lines<T: DeserializeOwned>(text: &str) -> (usize, Vec<String>) {
    let mut records = 0;
    let mut errors = vec![];
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        records += 1;
        if let Err(e) = serde_json::from_str::<T>(line) {
            errors.push(format!("line {}: {e}", n + 1));
        }
    }
    (records, errors)
}

fn check_doc<T: DeserializeOwned>(text: &str) -> (usize, Vec<String>) {
    match serde_json::from_str::<T>(text) {
        Ok(_) => (1, vec![]),
        Err(e) => (0, vec![e.to_string()]),
    }
}

fn check_file(name: &str, text: &str) -> Option<(usize, Vec<String>)> {
    Some(match name {
        LINKS => check_lines::<IpLink>(text),
        IPS => check_lines::<IpRow>(text),
        LATENCY => check_lines::<LatencyEvidence>(text),
        INGEST_REPORT => check_doc::<IngestReport>(text),
        GEO_CLUSTERS => check_lines::<IpGeolocation>(text),
        LINK_CLASSES => check_lines::<ClassifiedLink>(text),
        GEO_CANDIDATES => check_lines::<GeoCandidateRow>(text),
        IP_ASN => check_lines::<AsnVote>(text),
        OWNER_ASN => check_doc::<OwnerAsnMap>(text),
        LINK_MAPPINGS => check_lines::<LinkMapping>(text),
        STATS => check_doc::<StatsReport>(text),
        FAILURE_REPORT => check_doc::<Vec<FailureReport>>(text),
        OPERATOR_REPORT => check_doc::<Vec<OperatorOverlap>>(text),
        CONFIRMED_SUBMARINE => check_lines::<ConfirmedSubmarine>(text),
        SOL_SWEEP => check_doc::<Vec<SweepRow>>(text),
        MANIFEST_FILE => check_doc::<Manifest>(text),
        _ => return None,
    })
}

const KNOWN: [&str; 16] = [
    LINKS,
    IPS,
    LATENCY,
    INGEST_REPORT,
    GEO_CLUSTERS,
    LINK_CLASSES,
    GEO_CANDIDATES,
    IP_ASN,
    OWNER_ASN,
    LINK_MAPPINGS,
    STATS,
    FAILURE_REPORT,
    OPERATOR_REPORT,
    CONFIRMED_SUBMARINE,
    SOL_SWEEP,
    MANIFEST_FILE,
];

/// Check every known artifact present in `out_dir`, plus the manifest's
/// content digests.
pub fn validate_artifacts(out_dir: &Path) -> Result<Vec<SchemaCheck>, PipelineError> {
    let mut out = Vec::new();
    for name in KNOWN {
        let path = out_dir.join(name);
        if !path.is_file() {
            continue;
        }
        let bytes = std::fs::read(&path).map_err(|e| PipelineError::Io {
            path: path.clone(),
            source: e,
        })?;
        let (records, mut errors) = match std::str::from_utf8(&bytes) {
            Ok(text) => check_file(name, text).expect("known artifact"),
            Err(e) => (0, vec![format!("not UTF-8: {e}")]),
        };
        if name != MANIFEST_FILE {
            let manifest = Manifest::load(out_dir);
            let recorded = manifest
                .stages
                .values()
                .flat_map(|r| &r.artifacts)
                .find(|a| a.path == name);
            if let Some(a) = recorded {
                if a.content_digest != hex_digest(&bytes) {
                    errors.push("content differs from the manifest digest".to_string());
                }
            }
        }
        out.push(SchemaCheck {
            file: name.to_string(),
            records,
            errors,
        });
    }
    Ok(out)
}

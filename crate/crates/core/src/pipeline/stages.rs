//! Stage bodies and the artifact row types they write.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::net::IpAddr;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::{check_skip_budget, read_json, read_jsonl, to_json, to_jsonl};
use super::*;
use crate::aggregate::{finalize, LinkMapping};
use crate::analyze::{
    failure_diff, operator_overlap, summarize, FailureReport, FailureScenario, FailureWindows, MappingStats,
    OperatorOverlap,
};
use crate::classify::{classify_link, BonusLabel, ClassifiedLink, CountryTable, LinkClass, SubmarineClass};
use crate::geoloc::{
    geolocate_all, group_observations, sweep_sol_threshold, GeoCluster, GeoObservation, GroundTruth, IpGeolocation,
    LatencyEvidence, SweepRow,
};
use crate::geomap::{recursive_search, GeoCandidate, LandingPointIndex};
use crate::ingest::{open_probe_table, IngestError, IngestSummary, ProbeTable, RawTraceSource, TraceFormat};
use crate::model::{Asn, CableDataset, IpLink, LinkKey};
use crate::ownermap::{
    build_owner_map, cable_owner_asns, group_asn_records, resolve_all, AsIndex, AsRecord, AsnRecord, AsnVote,
    OwnerAsnMap,
};

type Files = Vec<(&'static str, Vec<u8>)>;

/// One row of `ips.jsonl`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpRow {
    pub ip: IpAddr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceReport {
    /// File name of the source.
    pub source: String,
    pub format: TraceFormat,
    pub records: u64,
    pub malformed: u64,
    pub invalid: u64,
    pub loops: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub config_digest: String,
    pub sources: Vec<SourceReport>,
    pub links: usize,
    pub ips: usize,
    /// Link observations before deduplication.
    pub observed: u64,
}

/// One row of `geo_candidates.jsonl`: every cluster-combination match for
/// a submarine-class link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoCandidateRow {
    #[serde(flatten)]
    pub link: LinkKey,
    pub candidates: Vec<GeoCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub config_digest: String,
    pub stats: MappingStats,
}

/// One row of `confirmed_submarine.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfirmedSubmarine {
    #[serde(flatten)]
    pub link: LinkKey,
    pub failed_entity: String,
}

/// Outage description in `failure.json`. Trace paths are relative to the
/// file's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureSpec {
    pub failed_entity: String,
    pub before: Vec<PathBuf>,
    pub during: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub after: Option<Vec<PathBuf>>,
    #[serde(skip)]
    base: PathBuf,
}

impl FailureSpec {
    pub fn new(failed_entity: &str, before: Vec<PathBuf>, during: Vec<PathBuf>, after: Option<Vec<PathBuf>>) -> Self {
        FailureSpec {
            failed_entity: failed_entity.to_string(),
            before,
            during,
            after,
            base: PathBuf::new(),
        }
    }

    fn resolve(&self, paths: &[PathBuf]) -> Vec<PathBuf> {
        paths.iter().map(|p| self.base.join(p)).collect()
    }

    pub fn trace_paths(&self) -> Vec<PathBuf> {
        let mut out = self.resolve(&self.before);
        out.extend(self.resolve(&self.during));
        if let Some(after) = &self.after {
            out.extend(self.resolve(after));
        }
        out
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FailureFile {
    One(FailureSpec),
    Many(Vec<FailureSpec>),
}

pub(super) fn load_failure_specs(path: &Path) -> Result<Vec<FailureSpec>, PipelineError> {
    let mut specs = match read_json::<FailureFile>(path)? {
        FailureFile::One(s) => vec![s],
        FailureFile::Many(v) => v,
    };
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    for s in &mut specs {
        s.base = base.clone();
    }
    Ok(specs)
}

/// Reference cable list for one operator in `operators.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorTruth {
    pub operator: String,
    pub cables: Vec<String>,
}

fn ingest_error(e: IngestError) -> PipelineError {
    match e {
        IngestError::Io { path, source } => PipelineError::Io { path, source },
        other => PipelineError::Input {
            path: PathBuf::new(),
            message: other.to_string(),
        },
    }
}

fn input_error(path: &Path, e: impl ToString) -> PipelineError {
    PipelineError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned())
}

fn read_source(source: &RawTraceSource, probes: Option<&ProbeTable>) -> Result<IngestSummary, PipelineError> {
    let summary = IngestSummary::from_source(source, probes).map_err(ingest_error)?;
    let s = summary.stats;
    check_skip_budget(&source.path, s.malformed + s.invalid, s.seen())?;
    if s.dropped() > 0 {
        warn!(
            "{}: dropped {} malformed, {} invalid, {} looping traces",
            source.path.display(),
            s.malformed,
            s.invalid,
            s.loops
        );
    }
    Ok(summary)
}

fn clusters_by_ip(rows: Vec<IpGeolocation>) -> BTreeMap<IpAddr, Vec<GeoCluster>> {
    rows.into_iter().map(|g| (g.ip, g.clusters)).collect()
}

impl Pipeline {
    fn probes(&self) -> Result<Option<ProbeTable>, PipelineError> {
        self.inputs
            .get(InputKind::Probes)
            .map(|p| open_probe_table(p).map_err(|e| input_error(p, e)))
            .transpose()
    }

    fn cables(&self, stage: Stage) -> Result<CableDataset, PipelineError> {
        let path = self.input(stage, InputKind::Cables)?;
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let ds = CableDataset::from_json(&text).map_err(|e| input_error(path, e))?;
        Ok(ds.active(self.cfg.rfs_cutoff_year))
    }

    fn read_artifact<T: serde::de::DeserializeOwned>(&self, name: &str) -> Result<Vec<T>, PipelineError> {
        read_jsonl(&self.upstream(name)?)
    }

    pub(super) fn run_links(&self) -> Result<Files, PipelineError> {
        let sources = self.inputs.trace_sources();
        let probes = self.probes()?;
        if probes.is_none() && sources.iter().any(|s| s.format == TraceFormat::AtlasJson) {
            return Err(PipelineError::MissingInput {
                stage: Stage::Links,
                kind: InputKind::Probes,
            });
        }
        let mut summary = IngestSummary::default();
        let mut reports = Vec::new();
        for source in &sources {
            let s = read_source(source, probes.as_ref())?;
            reports.push(SourceReport {
                source: file_name(&source.path),
                format: source.format,
                records: s.stats.records,
                malformed: s.stats.malformed,
                invalid: s.stats.invalid,
                loops: s.stats.loops,
            });
            summary.merge(s);
        }
        let links: Vec<IpLink> = summary.links.links().collect();
        let ips: Vec<IpRow> = summary.links.unique_ips().iter().map(|ip| IpRow { ip: *ip }).collect();
        let evidence = summary.latency.evidence_for(summary.links.unique_ips());
        info!("{} links over {} addresses", links.len(), ips.len());
        let report = IngestReport {
            config_digest: self.cfg.digest(),
            sources: reports,
            links: links.len(),
            ips: ips.len(),
            observed: summary.links.observed(),
        };
        Ok(vec![
            (LINKS, to_jsonl(&links)),
            (IPS, to_jsonl(&ips)),
            (LATENCY, to_jsonl(&evidence)),
            (INGEST_REPORT, to_json(&report)),
        ])
    }

    fn latency_map(&self) -> Result<HashMap<IpAddr, LatencyEvidence>, PipelineError> {
        Ok(self
            .read_artifact::<LatencyEvidence>(LATENCY)?
            .into_iter()
            .map(|e| (e.ip, e))
            .collect())
    }

    fn observations(&self, stage: Stage) -> Result<BTreeMap<IpAddr, Vec<GeoObservation>>, PipelineError> {
        let obs: Vec<GeoObservation> = read_jsonl(self.input(stage, InputKind::GeoObservations)?)?;
        let (groups, duplicates) = group_observations(obs);
        if duplicates > 0 {
            warn!("ignored {duplicates} repeated (address, source) observations");
        }
        Ok(groups)
    }

    pub(super) fn run_clusters(&self) -> Result<Files, PipelineError> {
        let ips: BTreeSet<IpAddr> = self.read_artifact::<IpRow>(IPS)?.into_iter().map(|r| r.ip).collect();
        let evidence = self.latency_map()?;
        let groups = self.observations(Stage::Clusters)?;
        let rows = geolocate_all(&ips, &groups, &evidence, &self.cfg);
        Ok(vec![(GEO_CLUSTERS, to_jsonl(&rows))])
    }

    fn country_table(&self) -> Result<CountryTable, PipelineError> {
        let path = self.input(Stage::Classes, InputKind::CountryGeo)?;
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        CountryTable::from_json(&text).map_err(|e| input_error(path, e))
    }

    pub(super) fn run_classes(&self) -> Result<Files, PipelineError> {
        let links: Vec<IpLink> = self.read_artifact(LINKS)?;
        let clusters = clusters_by_ip(self.read_artifact(GEO_CLUSTERS)?);
        let countries = self.country_table()?;
        let dataset = self.cables(Stage::Classes)?;
        let index = LandingPointIndex::new(&dataset);
        let coastal = dataset.coastal_countries();
        let none: Vec<GeoCluster> = vec![];
        let get = |ip: IpAddr| clusters.get(&ip).unwrap_or(&none);
        let rows: Vec<ClassifiedLink> = links
            .par_iter()
            .map(|l| ClassifiedLink {
                link: l.key,
                class: classify_link(get(l.key.a()), get(l.key.b()), &countries, &index, &coastal, &self.cfg),
            })
            .collect();
        Ok(vec![(LINK_CLASSES, to_jsonl(&rows))])
    }

    pub(super) fn run_geo_candidates(&self) -> Result<Files, PipelineError> {
        let classes: Vec<ClassifiedLink> = self.read_artifact(LINK_CLASSES)?;
        let clusters = clusters_by_ip(self.read_artifact(GEO_CLUSTERS)?);
        let dataset = self.cables(Stage::GeoCandidates)?;
        let index = LandingPointIndex::new(&dataset);
        let none: Vec<GeoCluster> = vec![];
        let get = |ip: IpAddr| clusters.get(&ip).unwrap_or(&none);
        let rows: Vec<GeoCandidateRow> = classes
            .par_iter()
            .filter(|c| {
                matches!(
                    c.class.label().map(|l| l.submarine_class),
                    Some(SubmarineClass::S | SubmarineClass::U)
                )
            })
            .map(|c| GeoCandidateRow {
                link: c.link,
                candidates: recursive_search(&index, get(c.link.a()), get(c.link.b()), &self.cfg),
            })
            .collect();
        Ok(vec![(GEO_CANDIDATES, to_jsonl(&rows))])
    }

    fn as_index(&self, stage: Stage) -> Result<AsIndex, PipelineError> {
        let rows: Vec<AsRecord> = read_jsonl(self.input(stage, InputKind::AsInfo)?)?;
        Ok(AsIndex::new(rows))
    }

    pub(super) fn run_owner_maps(&self) -> Result<Files, PipelineError> {
        let records: Vec<AsnRecord> = read_jsonl(self.input(Stage::OwnerMaps, InputKind::AsnRecords)?)?;
        let (grouped, conflicts) = group_asn_records(records);
        if conflicts > 0 {
            warn!("{conflicts} sources reported several ASNs for one address; kept the lowest");
        }
        let votes = resolve_all(&grouped, &self.cfg);
        let index = self.as_index(Stage::OwnerMaps)?;
        let dataset = self.cables(Stage::OwnerMaps)?;
        let map = build_owner_map(&dataset, &index, &self.cfg);
        info!("matched {} of {} owners", map.owners.len(), dataset.owners().len());
        Ok(vec![(IP_ASN, to_jsonl(&votes)), (OWNER_ASN, to_json(&map))])
    }

    fn ip_asn(&self) -> Result<BTreeMap<IpAddr, Asn>, PipelineError> {
        Ok(self
            .read_artifact::<AsnVote>(IP_ASN)?
            .into_iter()
            .map(|v| (v.ip, v.resolved_asn))
            .collect())
    }

    pub(super) fn run_mappings(&self) -> Result<Files, PipelineError> {
        let labels: BTreeMap<LinkKey, BonusLabel> = self
            .read_artifact::<ClassifiedLink>(LINK_CLASSES)?
            .into_iter()
            .filter_map(|c| match c.class {
                LinkClass::Classified(l) => Some((c.link, l)),
                LinkClass::Unclassified { .. } => None,
            })
            .collect();
        let clusters = clusters_by_ip(self.read_artifact(GEO_CLUSTERS)?);
        let rows: Vec<GeoCandidateRow> = self.read_artifact(GEO_CANDIDATES)?;
        let ip_asn = self.ip_asn()?;
        let owner_map: OwnerAsnMap = read_json(&self.upstream(OWNER_ASN)?)?;
        let dataset = self.cables(Stage::Mappings)?;
        let owner_asns = cable_owner_asns(&dataset, &owner_map);
        let none: Vec<GeoCluster> = vec![];
        let get = |ip: IpAddr| clusters.get(&ip).map_or(&none[..], |v| &v[..]);
        let mapped: Vec<Option<LinkMapping>> = rows
            .par_iter()
            .map(|row| {
                let Some(label) = labels.get(&row.link) else {
                    warn!("{}: candidates without a classification", row.link);
                    return Ok(None);
                };
                let [a, b] = row.link.endpoints();
                finalize(
                    row.link,
                    label,
                    &row.candidates,
                    [get(a), get(b)],
                    [ip_asn.get(&a).copied(), ip_asn.get(&b).copied()],
                    &owner_asns,
                    &self.cfg,
                )
            })
            .collect::<Result<_, _>>()?;
        let mapped: Vec<LinkMapping> = mapped.into_iter().flatten().collect();
        info!("mapped {} of {} candidate links", mapped.len(), rows.len());
        Ok(vec![(LINK_MAPPINGS, to_jsonl(&mapped))])
    }

    fn window(&self, paths: &[PathBuf], probes: Option<&ProbeTable>) -> Result<BTreeSet<LinkKey>, PipelineError> {
        let mut out = BTreeSet::new();
        for p in paths {
            out.extend(read_source(&trace_source(p), probes)?.links.link_keys());
        }
        Ok(out)
    }

    pub(super) fn run_reports(&self) -> Result<Files, PipelineError> {
        let mappings: Vec<LinkMapping> = self.read_artifact(LINK_MAPPINGS)?;
        let classes: Vec<ClassifiedLink> = self.read_artifact(LINK_CLASSES)?;
        let dataset = self.cables(Stage::Reports)?;
        let stats = StatsReport {
            config_digest: self.cfg.digest(),
            stats: summarize(&mappings, classes.iter().map(|c| &c.class), &dataset),
        };
        let mut files: Files = vec![(STATS, to_json(&stats))];
        if let Some(path) = self.inputs.get(InputKind::Failure) {
            let probes = self.probes()?;
            let mut reports: Vec<FailureReport> = Vec::new();
            let mut confirmed = Vec::new();
            for spec in load_failure_specs(path)? {
                let windows = FailureWindows {
                    before: self.window(&spec.resolve(&spec.before), probes.as_ref())?,
                    during: self.window(&spec.resolve(&spec.during), probes.as_ref())?,
                    after: spec
                        .after
                        .as_ref()
                        .map(|a| self.window(&spec.resolve(a), probes.as_ref()))
                        .transpose()?,
                };
                let scenario = FailureScenario {
                    failed_entity: spec.failed_entity.clone(),
                    windows,
                };
                let report = failure_diff(&mappings, &dataset, &scenario, &self.cfg)?;
                confirmed.extend(report.confirmed_submarine.iter().map(|l| ConfirmedSubmarine {
                    link: *l,
                    failed_entity: spec.failed_entity.clone(),
                }));
                reports.push(report);
            }
            files.push((FAILURE_REPORT, to_json(&reports)));
            files.push((CONFIRMED_SUBMARINE, to_jsonl(&confirmed)));
        }
        if let Some(path) = self.inputs.get(InputKind::Operators) {
            let truth: Vec<OperatorTruth> = read_json(path)?;
            let ip_asn = self.ip_asn()?;
            let index = self.as_index(Stage::Reports)?;
            let reports: Vec<OperatorOverlap> = truth
                .iter()
                .map(|t| operator_overlap(&t.operator, &mappings, &ip_asn, &index, &dataset, &t.cables, &self.cfg))
                .collect();
            files.push((OPERATOR_REPORT, to_json(&reports)));
        }
        Ok(files)
    }

    /// Geolocation accuracy against ground truth for each SoL threshold;
    /// `None` disables validation. Writes `sol_sweep.json`.
    pub fn sweep_sol(&self, thresholds: &[Option<f64>]) -> Result<Vec<SweepRow>, PipelineError> {
        let stage = Stage::Clusters;
        let truth: Vec<GroundTruth> = read_jsonl(self.input(stage, InputKind::GroundTruth)?)?;
        let groups = self.observations(stage)?;
        let evidence = self.latency_map()?;
        let rows = sweep_sol_threshold(&truth, &groups, &evidence, thresholds, &self.cfg);
        io::write_atomic(&self.artifact(SOL_SWEEP), &to_json(&rows))?;
        Ok(rows)
    }
}

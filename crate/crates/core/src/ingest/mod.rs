//! Traceroute parsing, link extraction, and deduplication.
//!
//! Input records are normalized into [`TracerouteRecord`]s. Loops and
//! structurally invalid records are dropped and counted; unparseable lines
//! are skipped and counted, never aborting the stream.

mod addr;
mod atlas;
#[cfg(test)]
mod tests;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::net::IpAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geoloc::{LatencyEvidence, LatencySample};
use crate::model::{IpLink, LinkKey, TracerouteRecord};

pub use addr::is_public;
pub use atlas::{parse_atlas_value, ProbeTable};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("unrecognized trace format {0:?}")]
    Format(String),
    #[error("invalid probe table: {0}")]
    Probes(String),
}

/// Why a single trace record was not accepted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceRejection {
    /// Not parseable against the schema.
    Malformed(String),
    /// Parseable but violates a structural invariant.
    Invalid(String),
    /// The same address answers at two different hops.
    Loop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceFormat {
    #[serde(rename = "atlas-json")]
    AtlasJson,
    #[serde(rename = "canonical-jsonl")]
    CanonicalJsonl,
}

impl std::str::FromStr for TraceFormat {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "atlas-json" => Ok(TraceFormat::AtlasJson),
            "canonical-jsonl" => Ok(TraceFormat::CanonicalJsonl),
            other => Err(IngestError::Format(other.to_string())),
        }
    }
}

impl std::fmt::Display for TraceFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TraceFormat::AtlasJson => "atlas-json",
            TraceFormat::CanonicalJsonl => "canonical-jsonl",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTraceSource {
    pub format: TraceFormat,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseStats {
    pub records: u64,
    pub malformed: u64,
    pub invalid: u64,
    pub loops: u64,
}

impl ParseStats {
    pub fn dropped(&self) -> u64 {
        self.malformed + self.invalid + self.loops
    }

    pub fn seen(&self) -> u64 {
        self.records + self.dropped()
    }

    pub fn merge(&mut self, other: &ParseStats) {
        self.records += other.records;
        self.malformed += other.malformed;
        self.invalid += other.invalid;
        self.loops += other.loops;
    }

    fn count(&mut self, outcome: &Result<TracerouteRecord, TraceRejection>) {
        match outcome {
            Ok(_) => self.records += 1,
            Err(TraceRejection::Malformed(reason)) => {
                log::debug!("skipping malformed trace: {reason}");
                self.malformed += 1
            }
            Err(TraceRejection::Invalid(reason)) => {
                log::debug!("dropping invalid trace: {reason}");
                self.invalid += 1
            }
            Err(TraceRejection::Loop) => self.loops += 1,
        }
    }
}

/// Parse one line of the canonical JSON-lines trace schema.
pub fn parse_canonical_line(line: &str) -> Result<TracerouteRecord, TraceRejection> {
    let record: TracerouteRecord =
        serde_json::from_str(line).map_err(|e| TraceRejection::Malformed(e.to_string()))?;
    accept(record)
}

fn accept(record: TracerouteRecord) -> Result<TracerouteRecord, TraceRejection> {
    record.validate().map_err(|e| TraceRejection::Invalid(e.to_string()))?;
    if record.has_loop() {
        return Err(TraceRejection::Loop);
    }
    Ok(record)
}

enum Pending<R> {
    Lines(io::Lines<R>),
    Values(std::vec::IntoIter<serde_json::Value>),
}

/// Streaming reader over a trace source. Rejected records are counted in
/// [`TraceStream::stats`] and skipped.
pub struct TraceStream<'p, R> {
    pending: Pending<R>,
    format: TraceFormat,
    probes: Option<&'p ProbeTable>,
    stats: ParseStats,
    io_error: Option<io::Error>,
}

impl<'p, R: BufRead> TraceStream<'p, R> {
    /// Atlas input may be a JSON array of results or one result per line.
    pub fn new(mut reader: R, format: TraceFormat, probes: Option<&'p ProbeTable>) -> io::Result<Self> {
        let pending = if format == TraceFormat::AtlasJson && starts_with_array(&mut reader)? {
            let mut text = String::new();
            reader.read_to_string(&mut text)?;
            match serde_json::from_str::<Vec<serde_json::Value>>(&text) {
                Ok(values) => Pending::Values(values.into_iter()),
                Err(e) => {
                    log::warn!("atlas array is not valid JSON: {e}");
                    let mut stream = TraceStream {
                        pending: Pending::Values(Vec::new().into_iter()),
                        format,
                        probes,
                        stats: ParseStats::default(),
                        io_error: None,
                    };
                    stream.stats.malformed += 1;
                    return Ok(stream);
                }
            }
        } else {
            Pending::Lines(reader.lines())
        };
        Ok(TraceStream {
            pending,
            format,
            probes,
            stats: ParseStats::default(),
            io_error: None,
        })
    }

    pub fn stats(&self) -> ParseStats {
        self.stats
    }

    /// First I/O error hit mid-stream, which ended iteration.
    pub fn take_io_error(&mut self) -> Option<io::Error> {
        self.io_error.take()
    }

    fn parse_line(&self, line: &str) -> Result<TracerouteRecord, TraceRejection> {
        match self.format {
            TraceFormat::CanonicalJsonl => parse_canonical_line(line),
            TraceFormat::AtlasJson => {
                let value: serde_json::Value =
                    serde_json::from_str(line).map_err(|e| TraceRejection::Malformed(e.to_string()))?;
                self.parse_value(&value)
            }
        }
    }

    fn parse_value(&self, value: &serde_json::Value) -> Result<TracerouteRecord, TraceRejection> {
        let empty = ProbeTable::default();
        parse_atlas_value(value, self.probes.unwrap_or(&empty)).and_then(accept)
    }
}

fn starts_with_array<R: BufRead>(reader: &mut R) -> io::Result<bool> {
    loop {
        let buf = reader.fill_buf()?;
        if buf.is_empty() {
            return Ok(false);
        }
        match buf.iter().position(|b| !b.is_ascii_whitespace()) {
            Some(i) => {
                let first = buf[i];
                reader.consume(i);
                return Ok(first == b'[');
            }
            None => {
                let n = buf.len();
                reader.consume(n);
            }
        }
    }
}

impl<R: BufRead> Iterator for TraceStream<'_, R> {
    type Item = TracerouteRecord;

    fn next(&mut self) -> Option<TracerouteRecord> {
        loop {
            let outcome = match &mut self.pending {
                Pending::Lines(lines) => match lines.next()? {
                    Ok(line) if line.trim().is_empty() => continue,
                    Ok(line) => self.parse_line(&line),
                    Err(e) => {
                        self.io_error = Some(e);
                        return None;
                    }
                },
                Pending::Values(values) => {
                    let value = values.next()?;
                    self.parse_value(&value)
                }
            };
            self.stats.count(&outcome);
            if let Ok(record) = outcome {
                return Some(record);
            }
        }
    }
}

/// Parsed records of one source plus drop counters.
#[derive(Debug, Clone, Default)]
pub struct ParsedTraces {
    pub records: Vec<TracerouteRecord>,
    pub stats: ParseStats,
}

pub fn read_traces<R: BufRead>(
    reader: R,
    format: TraceFormat,
    probes: Option<&ProbeTable>,
) -> io::Result<ParsedTraces> {
    let mut stream = TraceStream::new(reader, format, probes)?;
    let records: Vec<_> = stream.by_ref().collect();
    if let Some(e) = stream.take_io_error() {
        return Err(e);
    }
    Ok(ParsedTraces {
        records,
        stats: stream.stats(),
    })
}

/// Read every trace from a file. An unreadable file is fatal.
pub fn parse_traces(source: &RawTraceSource, probes: Option<&ProbeTable>) -> Result<ParsedTraces, IngestError> {
    let wrap = |e| IngestError::Io {
        path: source.path.clone(),
        source: e,
    };
    let file = File::open(&source.path).map_err(wrap)?;
    read_traces(BufReader::new(file), source.format, probes).map_err(wrap)
}

/// Links between consecutive hop indices whose addresses are both present
/// and public. A missing or private hop breaks adjacency.
pub fn extract_links(trace: &TracerouteRecord) -> Vec<LinkKey> {
    trace
        .hops
        .windows(2)
        .filter(|w| w[1].idx == w[0].idx + 1)
        .filter_map(|w| match (w[0].ip, w[1].ip) {
            (Some(x), Some(y)) if is_public(x) && is_public(y) => LinkKey::new(x, y).ok(),
            _ => None,
        })
        .collect()
}

/// Deduplicated links with occurrence counts and the set of their endpoints.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkTable {
    links: BTreeMap<LinkKey, u64>,
    ips: BTreeSet<IpAddr>,
    observed: u64,
}

impl LinkTable {
    pub fn add(&mut self, link: LinkKey) {
        *self.links.entry(link).or_default() += 1;
        self.ips.extend(link.endpoints());
        self.observed += 1;
    }

    pub fn add_trace(&mut self, trace: &TracerouteRecord) {
        for link in extract_links(trace) {
            self.add(link);
        }
    }

    pub fn merge(&mut self, other: LinkTable) {
        for (link, n) in other.links {
            *self.links.entry(link).or_default() += n;
        }
        self.ips.extend(other.ips);
        self.observed += other.observed;
    }

    pub fn links(&self) -> impl Iterator<Item = IpLink> + '_ {
        self.links.iter().map(|(key, n)| IpLink {
            key: *key,
            occurrences: *n,
        })
    }

    pub fn link_keys(&self) -> BTreeSet<LinkKey> {
        self.links.keys().copied().collect()
    }

    pub fn unique_ips(&self) -> &BTreeSet<IpAddr> {
        &self.ips
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Links counted before deduplication.
    pub fn observed(&self) -> u64 {
        self.observed
    }
}

/// Deduplicate a stream of links on their unordered endpoint pair.
pub fn collect_unique<I: IntoIterator<Item = LinkKey>>(links: I) -> LinkTable {
    let mut table = LinkTable::default();
    for link in links {
        table.add(link);
    }
    table
}

/// Per-address latency samples: one (probe location, minimum RTT) entry per
/// traceroute in which the address answered with a timed reply.
#[derive(Debug, Clone, Default)]
pub struct LatencyTable {
    samples: HashMap<IpAddr, Vec<LatencySample>>,
}

impl LatencyTable {
    pub fn add_trace(&mut self, trace: &TracerouteRecord) {
        for hop in &trace.hops {
            let (Some(ip), Some(rtt)) = (hop.ip, hop.min_rtt()) else {
                continue;
            };
            if is_public(ip) {
                self.samples.entry(ip).or_default().push(LatencySample {
                    probe: trace.probe,
                    min_rtt_ms: rtt,
                });
            }
        }
    }

    pub fn merge(&mut self, other: LatencyTable) {
        for (ip, mut s) in other.samples {
            self.samples.entry(ip).or_default().append(&mut s);
        }
    }

    /// Evidence for the given addresses, sorted for reproducible output.
    pub fn evidence_for<'a>(&self, ips: impl IntoIterator<Item = &'a IpAddr>) -> Vec<LatencyEvidence> {
        ips.into_iter()
            .filter_map(|ip| {
                let mut samples = self.samples.get(ip)?.clone();
                samples.sort_by(|x, y| {
                    (x.probe.lat(), x.probe.lon(), x.min_rtt_ms)
                        .partial_cmp(&(y.probe.lat(), y.probe.lon(), y.min_rtt_ms))
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
                Some(LatencyEvidence { ip: *ip, samples })
            })
            .collect()
    }
}

/// Everything the extraction stage derives from a set of traces.
#[derive(Debug, Clone, Default)]
pub struct IngestSummary {
    pub links: LinkTable,
    pub latency: LatencyTable,
    pub stats: ParseStats,
}

impl IngestSummary {
    pub fn add_trace(&mut self, trace: &TracerouteRecord) {
        self.links.add_trace(trace);
        self.latency.add_trace(trace);
    }

    pub fn merge(&mut self, other: IngestSummary) {
        self.links.merge(other.links);
        self.latency.merge(other.latency);
        self.stats.merge(&other.stats);
    }

    pub fn from_source(source: &RawTraceSource, probes: Option<&ProbeTable>) -> Result<Self, IngestError> {
        let parsed = parse_traces(source, probes)?;
        let mut out = IngestSummary {
            stats: parsed.stats,
            ..Default::default()
        };
        for trace in &parsed.records {
            out.add_trace(trace);
        }
        Ok(out)
    }
}

pub fn open_probe_table(path: &Path) -> Result<ProbeTable, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ProbeTable::from_json(&text)
}

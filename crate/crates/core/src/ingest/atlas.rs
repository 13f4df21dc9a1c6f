//! Adapter from RIPE Atlas traceroute results onto the canonical record.

use std::collections::{BTreeMap, HashMap};
use std::net::IpAddr;

use serde::Deserialize;
use serde_json::Value;

use super::{IngestError, TraceRejection};
use crate::model::{GeoPoint, Hop, TracerouteRecord};

/// Known probe locations keyed by Atlas probe id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProbeTable {
    probes: HashMap<u64, GeoPoint>,
}

impl ProbeTable {
    /// Parses `{"<prb_id>": {"lat": .., "lon": ..}, ...}`.
    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        let raw: BTreeMap<String, GeoPoint> =
            serde_json::from_str(text).map_err(|e| IngestError::Probes(e.to_string()))?;
        let mut probes = HashMap::with_capacity(raw.len());
        for (id, point) in raw {
            let id: u64 = id.parse().map_err(|_| IngestError::Probes(format!("bad probe id {id:?}")))?;
            probes.insert(id, point);
        }
        Ok(ProbeTable { probes })
    }

    pub fn insert(&mut self, id: u64, location: GeoPoint) {
        self.probes.insert(id, location);
    }

    pub fn get(&self, id: u64) -> Option<GeoPoint> {
        self.probes.get(&id).copied()
    }
}

#[derive(Deserialize)]
struct AtlasResult {
    #[serde(default, rename = "type")]
    kind: Option<String>,
    prb_id: u64,
    #[serde(default)]
    msm_id: Option<u64>,
    #[serde(default)]
    timestamp: Option<i64>,
    #[serde(default)]
    result: Option<Vec<AtlasHop>>,
}

#[derive(Deserialize)]
struct AtlasHop {
    hop: u32,
    #[serde(default)]
    error: Option<Value>,
    #[serde(default)]
    result: Vec<AtlasReply>,
}

#[derive(Deserialize)]
struct AtlasReply {
    #[serde(default)]
    from: Option<String>,
    #[serde(default)]
    rtt: Option<f64>,
    #[serde(default)]
    late: Option<Value>,
}

/// Convert one Atlas traceroute result.
///
/// When several addresses reply at the same hop, the address with the most
/// replies is kept (ties go to the lowest address) along with its RTTs.
pub fn parse_atlas_value(value: &Value, probes: &ProbeTable) -> Result<TracerouteRecord, TraceRejection> {
    let raw = AtlasResult::deserialize(value).map_err(|e| TraceRejection::Malformed(e.to_string()))?;
    if raw.kind.as_deref().is_some_and(|k| k != "traceroute") {
        return Err(TraceRejection::Malformed(format!("not a traceroute result: {:?}", raw.kind)));
    }
    let id = format!(
        "{}-{}-{}",
        raw.msm_id.map_or_else(|| "?".to_string(), |m| m.to_string()),
        raw.prb_id,
        raw.timestamp.map_or_else(|| "?".to_string(), |t| t.to_string())
    );
    let probe = probes
        .get(raw.prb_id)
        .ok_or_else(|| TraceRejection::Invalid(format!("{id}: unknown location for probe {}", raw.prb_id)))?;
    let Some(result) = raw.result else {
        return Err(TraceRejection::Invalid(format!("{id}: no hop results")));
    };
    let hops = result
        .into_iter()
        .filter(|h| h.error.is_none())
        .map(|h| {
            let mut replies: BTreeMap<IpAddr, Vec<f64>> = BTreeMap::new();
            for reply in h.result {
                let Some(ip) = reply.from.as_deref().and_then(|f| f.parse::<IpAddr>().ok()) else {
                    continue;
                };
                let rtts = replies.entry(ip).or_default();
                if let (Some(rtt), None) = (reply.rtt, &reply.late) {
                    if rtt.is_finite() && rtt > 0.0 {
                        rtts.push(rtt);
                    }
                }
            }
            let best = replies
                .into_iter()
                .fold(None::<(IpAddr, Vec<f64>)>, |best, (ip, rtts)| match best {
                    Some((_, ref b)) if b.len() >= rtts.len() => best,
                    _ => Some((ip, rtts)),
                });
            match best {
                Some((ip, rtts)) => Hop {
                    idx: h.hop,
                    ip: Some(ip),
                    rtts,
                },
                None => Hop {
                    idx: h.hop,
                    ip: None,
                    rtts: Vec::new(),
                },
            }
        })
        .collect();
    Ok(TracerouteRecord { id, probe, hops })
}

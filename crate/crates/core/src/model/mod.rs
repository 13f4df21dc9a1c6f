//! Shared domain types, geodesy, and pipeline configuration.

mod config;
mod dataset;
mod geo;

use std::fmt;
use std::net::IpAddr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{hex_digest, PactMode, PipelineConfig};
pub use dataset::{Cable, CableDataset, CountryCode, LandingPoint, RawCable, RawCableDataset, RawLandingPoint};
pub use geo::{haversine_km, sol_distance_bound_km, GeoPoint, EARTH_RADIUS_KM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("coordinate out of range: lat {lat}, lon {lon}")]
    Coordinate { lat: f64, lon: f64 },
    #[error("round-trip time must be positive, got {0}")]
    Rtt(f64),
    #[error("invalid country code {0:?}")]
    Country(String),
    #[error("invalid cable dataset: {0}")]
    Dataset(String),
    #[error("invalid traceroute {id}: {reason}")]
    Trace { id: String, reason: String },
    #[error("invalid link: {0}")]
    Link(String),
    #[error("config: {0}")]
    Config(String),
}

/// Autonomous system number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Asn(pub u32);

impl fmt::Display for Asn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AS{}", self.0)
    }
}

/// Unordered pair of link endpoints, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawLinkKey")]
pub struct LinkKey {
    a: IpAddr,
    b: IpAddr,
}

#[derive(Deserialize)]
struct RawLinkKey {
    a: IpAddr,
    b: IpAddr,
}

impl TryFrom<RawLinkKey> for LinkKey {
    type Error = ModelError;

    fn try_from(raw: RawLinkKey) -> Result<Self, Self::Error> {
        LinkKey::new(raw.a, raw.b)
    }
}

impl LinkKey {
    pub fn new(x: IpAddr, y: IpAddr) -> Result<Self, ModelError> {
        if x == y {
            return Err(ModelError::Link(format!("endpoints identical ({x})")));
        }
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        Ok(LinkKey { a, b })
    }

    pub fn a(&self) -> IpAddr {
        self.a
    }

    pub fn b(&self) -> IpAddr {
        self.b
    }

    pub fn endpoints(&self) -> [IpAddr; 2] {
        [self.a, self.b]
    }

    pub fn contains(&self, ip: IpAddr) -> bool {
        self.a == ip || self.b == ip
    }
}

impl fmt::Display for LinkKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

/// A link between two consecutive public hops, with how many traceroutes
/// contained it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpLink {
    #[serde(flatten)]
    pub key: LinkKey,
    pub occurrences: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    pub idx: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ip: Option<IpAddr>,
    #[serde(default)]
    pub rtts: Vec<f64>,
}

impl Hop {
    pub fn min_rtt(&self) -> Option<f64> {
        self.rtts.iter().copied().fold(None, |acc, r| Some(acc.map_or(r, |m: f64| m.min(r))))
    }
}

/// One normalized traceroute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracerouteRecord {
    pub id: String,
    pub probe: GeoPoint,
    pub hops: Vec<Hop>,
}

impl TracerouteRecord {
    /// Checks structural invariants: at least one hop, strictly increasing
    /// hop indices, and positive finite RTTs.
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |reason: &str| {
            Err(ModelError::Trace {
                id: self.id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.hops.is_empty() {
            return fail("no hops");
        }
        if self.hops.windows(2).any(|w| w[0].idx >= w[1].idx) {
            return fail("hop indices not strictly increasing");
        }
        if self.hops.iter().flat_map(|h| &h.rtts).any(|r| !(r.is_finite() && *r > 0.0)) {
            return fail("non-positive rtt");
        }
        Ok(())
    }

    /// True when some address answers at two different hop indices.
    pub fn has_loop(&self) -> bool {
        let mut seen = std::collections::HashMap::new();
        for hop in &self.hops {
            if let Some(ip) = hop.ip {
                if let Some(prev) = seen.insert(ip, hop.idx) {
                    if prev != hop.idx {
                        return true;
                    }
                }
            }
        }
        false
    }
}

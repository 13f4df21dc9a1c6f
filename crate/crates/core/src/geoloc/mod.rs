//! Multi-source geolocation: speed-of-light validation of each candidate
//! location, then density clustering of the survivors into scored clusters.

mod dbscan;
mod sweep;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::net::IpAddr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{haversine_km, sol_distance_bound_km, CountryCode, GeoPoint, PipelineConfig};

pub use dbscan::dbscan;
pub use sweep::{sweep_sol_threshold, GroundTruth, SweepRow};

/// One source's location claim for an address.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoObservation {
    pub ip: IpAddr,
    pub source: String,
    #[serde(flatten)]
    pub location: GeoPoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub city: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continent: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySample {
    #[serde(flatten)]
    pub probe: GeoPoint,
    #[serde(rename = "rtt")]
    pub min_rtt_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyEvidence {
    pub ip: IpAddr,
    pub samples: Vec<LatencySample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMember {
    pub source: String,
    #[serde(flatten)]
    pub location: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoCluster {
    pub centroid: GeoPoint,
    /// Most common country among members that report one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country: Option<CountryCode>,
    /// Fraction of the address's valid observations in this cluster.
    pub score: f64,
    pub members: Vec<ClusterMember>,
}

/// Clustered geolocation of one address.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpGeolocation {
    pub ip: IpAddr,
    pub valid: usize,
    pub invalid: usize,
    /// Sorted by descending score. Empty when nothing survived validation.
    pub clusters: Vec<GeoCluster>,
}

impl IpGeolocation {
    pub fn top(&self) -> Option<&GeoCluster> {
        self.clusters.first()
    }

    pub fn max_score(&self) -> Option<f64> {
        self.top().map(|c| c.score)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolVerdict {
    Valid,
    Invalid,
}

/// Speed-of-light check of one candidate location.
///
/// The candidate is invalid when at least one sample places it farther from
/// the probe than light in fibre covers in half the RTT, and violating
/// samples make up at least `margin` of all samples. `margin = None` skips
/// validation entirely.
pub fn sol_check(location: GeoPoint, samples: &[LatencySample], margin: Option<f64>, fiber_speed: f64) -> SolVerdict {
    let Some(margin) = margin else {
        return SolVerdict::Valid;
    };
    if samples.is_empty() {
        return SolVerdict::Valid;
    }
    let violations = samples
        .iter()
        .filter(|s| match sol_distance_bound_km(s.min_rtt_ms, fiber_speed) {
            Ok(bound) => haversine_km(s.probe, location) > bound,
            Err(_) => false,
        })
        .count();
    let n = samples.len() as f64;
    if violations > 0 && violations as f64 >= margin * n - 1e-9 {
        SolVerdict::Invalid
    } else {
        SolVerdict::Valid
    }
}

pub fn sol_validate(observation: &GeoObservation, evidence: Option<&LatencyEvidence>, cfg: &PipelineConfig) -> SolVerdict {
    let samples = evidence.map_or(&[][..], |e| &e.samples[..]);
    sol_check(observation.location, samples, Some(cfg.sol_margin), cfg.fiber_speed)
}

/// DBSCAN over haversine distance; scores are member counts over the
/// number of observations passed in.
pub fn cluster_observations(observations: &[GeoObservation], cfg: &PipelineConfig) -> Vec<GeoCluster> {
    cluster_with(observations, cfg.dbscan_eps_km, cfg.dbscan_min_points)
}

fn cluster_with(observations: &[GeoObservation], eps_km: f64, min_points: usize) -> Vec<GeoCluster> {
    if observations.is_empty() {
        return Vec::new();
    }
    let mut sorted: Vec<&GeoObservation> = observations.iter().collect();
    sorted.sort_by(|a, b| {
        a.source
            .cmp(&b.source)
            .then(a.location.lat().total_cmp(&b.location.lat()))
            .then(a.location.lon().total_cmp(&b.location.lon()))
    });
    let labels = dbscan(&sorted, eps_km, min_points, |a, b| haversine_km(a.location, b.location));
    let mut groups: BTreeMap<usize, Vec<&GeoObservation>> = BTreeMap::new();
    for (obs, label) in sorted.iter().zip(labels) {
        if let Some(l) = label {
            groups.entry(l).or_default().push(obs);
        }
    }
    let total = observations.len() as f64;
    let mut clusters: Vec<GeoCluster> = groups
        .into_values()
        .map(|members| build_cluster(&members, total))
        .collect();
    clusters.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.centroid.lat().total_cmp(&b.centroid.lat()))
            .then(a.centroid.lon().total_cmp(&b.centroid.lon()))
    });
    clusters
}

fn build_cluster(members: &[&GeoObservation], total: f64) -> GeoCluster {
    let mut sum = [0.0; 3];
    for m in members {
        let v = m.location.to_unit_vector();
        for k in 0..3 {
            sum[k] += v[k];
        }
    }
    let centroid = GeoPoint::from_vector(sum).unwrap_or(members[0].location);
    let mut votes: BTreeMap<CountryCode, usize> = BTreeMap::new();
    for m in members {
        if let Some(c) = m.country.as_deref().and_then(|c| CountryCode::new(c).ok()) {
            *votes.entry(c).or_default() += 1;
        }
    }
    // BTreeMap iteration makes the lowest code win ties.
    let country = votes
        .into_iter()
        .fold(None::<(CountryCode, usize)>, |best, (c, n)| match best {
            Some((_, bn)) if bn >= n => best,
            _ => Some((c, n)),
        })
        .map(|(c, _)| c);
    GeoCluster {
        centroid,
        country,
        score: members.len() as f64 / total,
        members: members
            .iter()
            .map(|m| ClusterMember {
                source: m.source.clone(),
                location: m.location,
            })
            .collect(),
    }
}

/// Validate and cluster one address's observations.
pub fn geolocate_ip(
    ip: IpAddr,
    observations: &[GeoObservation],
    evidence: Option<&LatencyEvidence>,
    margin: Option<f64>,
    cfg: &PipelineConfig,
) -> IpGeolocation {
    let samples = evidence.map_or(&[][..], |e| &e.samples[..]);
    let valid: Vec<GeoObservation> = observations
        .iter()
        .filter(|o| sol_check(o.location, samples, margin, cfg.fiber_speed) == SolVerdict::Valid)
        .cloned()
        .collect();
    IpGeolocation {
        ip,
        valid: valid.len(),
        invalid: observations.len() - valid.len(),
        clusters: cluster_observations(&valid, cfg),
    }
}

/// Group observations per address, keeping the first claim per
/// (address, source). Returns the groups and the number of duplicates.
pub fn group_observations(
    observations: impl IntoIterator<Item = GeoObservation>,
) -> (BTreeMap<IpAddr, Vec<GeoObservation>>, usize) {
    let mut seen: BTreeSet<(IpAddr, String)> = BTreeSet::new();
    let mut groups: BTreeMap<IpAddr, Vec<GeoObservation>> = BTreeMap::new();
    let mut duplicates = 0;
    for obs in observations {
        if seen.insert((obs.ip, obs.source.clone())) {
            groups.entry(obs.ip).or_default().push(obs);
        } else {
            duplicates += 1;
        }
    }
    (groups, duplicates)
}

/// Geolocate every address in `ips`. Addresses with no observations get an
/// empty cluster list.
pub fn geolocate_all(
    ips: &BTreeSet<IpAddr>,
    observations: &BTreeMap<IpAddr, Vec<GeoObservation>>,
    evidence: &HashMap<IpAddr, LatencyEvidence>,
    cfg: &PipelineConfig,
) -> Vec<IpGeolocation> {
    let ips: Vec<IpAddr> = ips.iter().copied().collect();
    ips.par_iter()
        .map(|ip| {
            let obs = observations.get(ip).map_or(&[][..], |v| &v[..]);
            geolocate_ip(*ip, obs, evidence.get(ip), Some(cfg.sol_margin), cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests;

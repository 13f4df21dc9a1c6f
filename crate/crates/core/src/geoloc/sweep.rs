use std::collections::{BTreeMap, HashMap};
use std::net::IpAddr;

use serde::{Deserialize, Serialize};

use super::{geolocate_ip, GeoObservation, LatencyEvidence};
use crate::model::{haversine_km, GeoPoint, PipelineConfig};

/// Known true location of an address.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub ip: IpAddr,
    #[serde(flatten)]
    pub location: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// `None` is the baseline without speed-of-light validation.
    pub threshold: Option<f64>,
    /// Correctly located addresses over all ground-truth addresses.
    pub accuracy: f64,
    pub correct: usize,
    /// Addresses left with at least one cluster.
    pub located: usize,
    pub total: usize,
}

/// Re-run validation and clustering for each threshold and score the top
/// cluster of every ground-truth address against its true location.
pub fn sweep_sol_threshold(
    truth: &[GroundTruth],
    observations: &BTreeMap<IpAddr, Vec<GeoObservation>>,
    evidence: &HashMap<IpAddr, LatencyEvidence>,
    thresholds: &[Option<f64>],
    cfg: &PipelineConfig,
) -> Vec<SweepRow> {
    thresholds
        .iter()
        .map(|&threshold| {
            let mut correct = 0;
            let mut located = 0;
            for t in truth {
                let obs = observations.get(&t.ip).map_or(&[][..], |v| &v[..]);
                let geo = geolocate_ip(t.ip, obs, evidence.get(&t.ip), threshold, cfg);
                if let Some(top) = geo.top() {
                    located += 1;
                    if haversine_km(top.centroid, t.location) <= cfg.sweep_match_radius_km {
                        correct += 1;
                    }
                }
            }
            SweepRow {
                threshold,
                accuracy: if truth.is_empty() { 0.0 } else { correct as f64 / truth.len() as f64 },
                correct,
                located,
                total: truth.len(),
            }
        })
        .collect()
}

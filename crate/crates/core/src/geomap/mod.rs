//! Candidate cables for a link from landing points near its endpoints.

mod balltree;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geoloc::GeoCluster;
use crate::model::{CableDataset, GeoPoint, LandingPoint, PipelineConfig};

pub use balltree::BallTree;

/// Spatial index over landing points with haversine queries.
#[derive(Debug, Clone)]
pub struct LandingPointIndex {
    tree: BallTree,
    points: Vec<LandingPoint>,
}

impl LandingPointIndex {
    pub fn new(dataset: &CableDataset) -> Self {
        // The dataset iterates in id order, so keys (and tie-breaks) do not
        // depend on how the input file was ordered.
        let points: Vec<LandingPoint> = dataset.landing_points().cloned().collect();
        let tree = BallTree::new(points.iter().enumerate().map(|(i, lp)| (lp.location, i)));
        LandingPointIndex { tree, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Landing points within `radius_km` of `center`, nearest first.
    pub fn radius_query(&self, center: GeoPoint, radius_km: f64) -> Vec<(&LandingPoint, f64)> {
        self.tree
            .within(center, radius_km)
            .into_iter()
            .map(|(k, d)| (&self.points[k], d))
            .collect()
    }

    pub fn nearest(&self, center: GeoPoint) -> Option<(&LandingPoint, f64)> {
        self.tree.nearest(center).map(|(k, d)| (&self.points[k], d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandingHit {
    pub id: String,
    pub distance_km: f64,
}

/// A cable reachable from one combination of endpoint clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoCandidate {
    pub cable_id: String,
    /// Index into each endpoint's cluster list.
    pub clusters: [usize; 2],
    /// Radius at which the match was found.
    pub radius_km: f64,
    /// Nearest landing point of the cable to each endpoint.
    pub landing: [LandingHit; 2],
    /// Normalized distances, `min(distance, radius_max) / radius_max`.
    pub d: [f64; 2],
}

fn nearest_per_cable<'a>(hits: &[(&'a LandingPoint, f64)]) -> BTreeMap<&'a str, (&'a LandingPoint, f64)> {
    let mut out: BTreeMap<&str, (&LandingPoint, f64)> = BTreeMap::new();
    // Hits are sorted nearest first, so the first per cable wins.
    for &(lp, d) in hits {
        for cable in &lp.cable_ids {
            out.entry(cable.as_str()).or_insert((lp, d));
        }
    }
    out
}

fn normalized(distance_km: f64, cfg: &PipelineConfig) -> f64 {
    distance_km.min(cfg.radius_max_km) / cfg.radius_max_km
}

/// Expanding-radius search for one pair of endpoint locations. Returns the
/// matching cables and the radius they were found at, or nothing when no
/// cable has a landing point near both ends within the maximum radius.
pub fn search_pair(
    index: &LandingPointIndex,
    a: GeoPoint,
    b: GeoPoint,
    cfg: &PipelineConfig,
) -> Option<(f64, Vec<(String, [LandingHit; 2])>)> {
    for radius in cfg.radius_schedule() {
        let near_a = nearest_per_cable(&index.radius_query(a, radius));
        if near_a.is_empty() {
            continue;
        }
        let near_b = nearest_per_cable(&index.radius_query(b, radius));
        let matches: Vec<_> = near_a
            .iter()
            .filter_map(|(cable, (lpa, da))| {
                let (lpb, db) = near_b.get(cable)?;
                Some((
                    cable.to_string(),
                    [
                        LandingHit {
                            id: lpa.id.clone(),
                            distance_km: *da,
                        },
                        LandingHit {
                            id: lpb.id.clone(),
                            distance_km: *db,
                        },
                    ],
                ))
            })
            .collect();
        if !matches.is_empty() {
            return Some((radius, matches));
        }
    }
    None
}

/// Candidates over every combination of endpoint clusters. Each
/// combination runs its own radius schedule. Output is sorted by cable id,
/// then cluster indices.
pub fn recursive_search(
    index: &LandingPointIndex,
    clusters_a: &[GeoCluster],
    clusters_b: &[GeoCluster],
    cfg: &PipelineConfig,
) -> Vec<GeoCandidate> {
    let mut out = Vec::new();
    for (i, ca) in clusters_a.iter().enumerate() {
        for (j, cb) in clusters_b.iter().enumerate() {
            let Some((radius, matches)) = search_pair(index, ca.centroid, cb.centroid, cfg) else {
                continue;
            };
            for (cable_id, landing) in matches {
                let d = [normalized(landing[0].distance_km, cfg), normalized(landing[1].distance_km, cfg)];
                out.push(GeoCandidate {
                    cable_id,
                    clusters: [i, j],
                    radius_km: radius,
                    landing,
                    d,
                });
            }
        }
    }
    out.sort_by(|x, y| x.cable_id.cmp(&y.cable_id).then(x.clusters.cmp(&y.clusters)));
    out
}

/// Union over combinations keeping, per cable and per endpoint, the
/// smallest distance seen.
pub fn per_cable_min(candidates: &[GeoCandidate]) -> Vec<GeoCandidate> {
    let mut best: BTreeMap<&str, GeoCandidate> = BTreeMap::new();
    for c in candidates {
        match best.get_mut(c.cable_id.as_str()) {
            None => {
                best.insert(&c.cable_id, c.clone());
            }
            Some(cur) => {
                for e in 0..2 {
                    if c.landing[e].distance_km < cur.landing[e].distance_km {
                        cur.landing[e] = c.landing[e].clone();
                        cur.d[e] = c.d[e];
                        cur.clusters[e] = c.clusters[e];
                    }
                }
                cur.radius_km = cur.radius_km.min(c.radius_km);
            }
        }
    }
    best.into_values().collect()
}

#[cfg(test)]
mod tests;

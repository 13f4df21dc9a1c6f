//! B-O-N-U-S link classification: how many endpoints are well geolocated
//! (Both / One / None) crossed with how likely the link is to be submarine
//! (definitely Submarine / Unconfirmed / definitely Terrestrial).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geoloc::GeoCluster;
use crate::geomap::LandingPointIndex;
use crate::model::{haversine_km, CountryCode, LinkKey, PipelineConfig};

#[derive(Debug, Error)]
#[error("invalid country table: {0}")]
pub struct CountryTableError(String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Continent {
    AF,
    AS,
    EU,
    NA,
    OC,
    SA,
    AN,
}

impl Continent {
    /// Pairs that a terrestrial path can plausibly join: a continent with
    /// itself, Europe with Asia, and Asia with Africa.
    pub fn land_connected(self, other: Continent) -> bool {
        use Continent::*;
        self == other || matches!((self, other), (EU, AS) | (AS, EU) | (AS, AF) | (AF, AS))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryGeoData {
    pub continent: Continent,
    #[serde(default, alias = "land_neighbors")]
    pub neighbors: BTreeSet<CountryCode>,
}

/// Continent and land neighbours per country. The neighbour relation is
/// made symmetric on construction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountryTable {
    countries: BTreeMap<CountryCode, CountryGeoData>,
}

impl CountryTable {
    pub fn new(mut countries: BTreeMap<CountryCode, CountryGeoData>) -> Self {
        let edges: Vec<(CountryCode, CountryCode)> = countries
            .iter()
            .flat_map(|(c, d)| d.neighbors.iter().map(move |n| (n.clone(), c.clone())))
            .collect();
        for (from, to) in edges {
            if from == to {
                continue;
            }
            if let Some(d) = countries.get_mut(&from) {
                d.neighbors.insert(to);
            }
        }
        for (c, d) in countries.iter_mut() {
            d.neighbors.remove(c);
        }
        CountryTable { countries }
    }

    pub fn from_json(text: &str) -> Result<Self, CountryTableError> {
        let raw: BTreeMap<CountryCode, CountryGeoData> =
            serde_json::from_str(text).map_err(|e| CountryTableError(e.to_string()))?;
        Ok(Self::new(raw))
    }

    pub fn get(&self, code: &CountryCode) -> Option<&CountryGeoData> {
        self.countries.get(code)
    }

    pub fn len(&self) -> usize {
        self.countries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.countries.is_empty()
    }

    /// Same country, shared border, or a common land neighbour.
    pub fn land_adjacent(&self, a: &CountryCode, b: &CountryCode) -> bool {
        if a == b {
            return true;
        }
        let (Some(da), Some(db)) = (self.get(a), self.get(b)) else {
            return false;
        };
        da.neighbors.contains(b) || db.neighbors.contains(a) || !da.neighbors.is_disjoint(&db.neighbors)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GeoConfidence {
    B,
    O,
    N,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SubmarineClass {
    S,
    U,
    T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BonusLabel {
    pub geo_confidence: GeoConfidence,
    pub submarine_class: SubmarineClass,
    /// Sum of the endpoints' best cluster scores.
    pub geo_cluster_score: f64,
}

impl BonusLabel {
    /// One of the seven composite categories; terrestrial links collapse
    /// the confidence dimension.
    pub fn category(&self) -> String {
        match self.submarine_class {
            SubmarineClass::T => "T".to_string(),
            s => format!("{s:?},{:?}", self.geo_confidence),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnclassifiedReason {
    /// An endpoint has no valid geolocation.
    NoGeolocation,
    /// No cluster combination has resolvable countries.
    UnknownCountry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum LinkClass {
    Classified(BonusLabel),
    Unclassified { reason: UnclassifiedReason },
}

impl LinkClass {
    pub fn label(&self) -> Option<&BonusLabel> {
        match self {
            LinkClass::Classified(l) => Some(l),
            LinkClass::Unclassified { .. } => None,
        }
    }

    pub fn category(&self) -> String {
        self.label().map_or_else(|| "unclassified".to_string(), BonusLabel::category)
    }
}

impl fmt::Display for LinkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.category())
    }
}

/// One row of `link_classes.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedLink {
    #[serde(flatten)]
    pub link: LinkKey,
    #[serde(flatten)]
    pub class: LinkClass,
}

fn max_score(clusters: &[GeoCluster]) -> Option<f64> {
    clusters.iter().map(|c| c.score).reduce(f64::max)
}

/// Count endpoints whose best cluster reaches the good-geolocation
/// threshold. `None` if either endpoint has no cluster.
pub fn geo_confidence(clusters_a: &[GeoCluster], clusters_b: &[GeoCluster], cfg: &PipelineConfig) -> Option<GeoConfidence> {
    let good = |s: f64| s >= cfg.good_geo_threshold - 1e-12;
    let n = [max_score(clusters_a)?, max_score(clusters_b)?].into_iter().filter(|s| good(*s)).count();
    Some(match n {
        2 => GeoConfidence::B,
        1 => GeoConfidence::O,
        _ => GeoConfidence::N,
    })
}

struct Combo<'a> {
    a: &'a GeoCluster,
    b: &'a GeoCluster,
    country_a: &'a CountryCode,
    country_b: &'a CountryCode,
}

/// Submarine potential over every combination of endpoint clusters.
///
/// 1. Any combination spanning land-disconnected continents: S.
/// 2. No combination of land-adjacent countries: S.
/// 3. Every combination has no landing points in either country: T.
/// 4. A land-adjacent combination whose endpoints are at least as far apart
///    as the nearer endpoint is from its closest landing point: U.
///    Otherwise T.
///
/// Returns `None` if no combination has both countries in the table.
pub fn submarine_class(
    clusters_a: &[GeoCluster],
    clusters_b: &[GeoCluster],
    countries: &CountryTable,
    index: &LandingPointIndex,
    coastal: &BTreeSet<&CountryCode>,
) -> Option<SubmarineClass> {
    let combos: Vec<Combo> = clusters_a
        .iter()
        .flat_map(|a| clusters_b.iter().map(move |b| (a, b)))
        .filter_map(|(a, b)| {
            let (ca, cb) = (a.country.as_ref()?, b.country.as_ref()?);
            (countries.get(ca).is_some() && countries.get(cb).is_some()).then_some(Combo {
                a,
                b,
                country_a: ca,
                country_b: cb,
            })
        })
        .collect();
    if combos.is_empty() {
        return None;
    }
    let continent = |c: &CountryCode| countries.get(c).map(|d| d.continent);
    if combos.iter().any(|c| match (continent(c.country_a), continent(c.country_b)) {
        (Some(x), Some(y)) => !x.land_connected(y),
        _ => false,
    }) {
        return Some(SubmarineClass::S);
    }
    let adjacent: Vec<&Combo> = combos
        .iter()
        .filter(|c| countries.land_adjacent(c.country_a, c.country_b))
        .collect();
    if adjacent.is_empty() {
        return Some(SubmarineClass::S);
    }
    if combos
        .iter()
        .all(|c| !coastal.contains(c.country_a) && !coastal.contains(c.country_b))
    {
        return Some(SubmarineClass::T);
    }
    let nearest = |c: &GeoCluster| index.nearest(c.centroid).map_or(f64::INFINITY, |(_, d)| d);
    let any_potential = adjacent.iter().any(|c| {
        let span = haversine_km(c.a.centroid, c.b.centroid);
        span >= nearest(c.a).min(nearest(c.b))
    });
    Some(if any_potential { SubmarineClass::U } else { SubmarineClass::T })
}

/// Full B-O-N-U-S label for a link from its endpoints' clusters.
pub fn classify_link(
    clusters_a: &[GeoCluster],
    clusters_b: &[GeoCluster],
    countries: &CountryTable,
    index: &LandingPointIndex,
    coastal: &BTreeSet<&CountryCode>,
    cfg: &PipelineConfig,
) -> LinkClass {
    let (Some(geo_confidence), Some(sa), Some(sb)) = (
        geo_confidence(clusters_a, clusters_b, cfg),
        max_score(clusters_a),
        max_score(clusters_b),
    ) else {
        return LinkClass::Unclassified {
            reason: UnclassifiedReason::NoGeolocation,
        };
    };
    match submarine_class(clusters_a, clusters_b, countries, index, coastal) {
        Some(submarine_class) => LinkClass::Classified(BonusLabel {
            geo_confidence,
            submarine_class,
            geo_cluster_score: sa + sb,
        }),
        None => LinkClass::Unclassified {
            reason: UnclassifiedReason::UnknownCountry,
        },
    }
}

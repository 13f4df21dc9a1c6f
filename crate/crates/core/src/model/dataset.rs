use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{GeoPoint, ModelError};

/// Two-letter upper-case country code.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CountryCode(String);

impl CountryCode {
    pub fn new(code: &str) -> Result<Self, ModelError> {
        let upper = code.trim().to_ascii_uppercase();
        if upper.len() == 2 && upper.bytes().all(|b| b.is_ascii_uppercase()) {
            Ok(CountryCode(upper))
        } else {
            Err(ModelError::Country(code.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for CountryCode {
    type Error = ModelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        CountryCode::new(&s)
    }
}

impl From<CountryCode> for String {
    fn from(c: CountryCode) -> String {
        c.0
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandingPoint {
    pub id: String,
    pub location: GeoPoint,
    pub country: CountryCode,
    pub cable_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cable {
    pub id: String,
    pub name: String,
    pub landing_point_ids: Vec<String>,
    pub owner_names: BTreeSet<String>,
    pub rfs_year: Option<i32>,
}

/// `cables.json` as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCableDataset {
    pub cables: Vec<RawCable>,
    pub landing_points: Vec<RawLandingPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCable {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub owners: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rfs: Option<i32>,
    pub landing_points: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawLandingPoint {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    pub country: String,
}

/// The validated physical layer: cables and the landing points they
/// terminate at. Landing points referenced by no cable are dropped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CableDataset {
    cables: BTreeMap<String, Cable>,
    landing_points: BTreeMap<String, LandingPoint>,
}

impl CableDataset {
    pub fn from_raw(raw: RawCableDataset) -> Result<Self, ModelError> {
        let err = |m: String| ModelError::Dataset(m);
        let mut landing_points = BTreeMap::new();
        for lp in raw.landing_points {
            let location = GeoPoint::new(lp.lat, lp.lon)?;
            let country = CountryCode::new(&lp.country)?;
            let point = LandingPoint {
                id: lp.id.clone(),
                location,
                country,
                cable_ids: BTreeSet::new(),
            };
            if landing_points.insert(lp.id.clone(), point).is_some() {
                return Err(err(format!("duplicate landing point {}", lp.id)));
            }
        }
        let mut cables = BTreeMap::new();
        for c in raw.cables {
            let mut ids: Vec<String> = Vec::with_capacity(c.landing_points.len());
            for id in c.landing_points {
                if !ids.contains(&id) {
                    ids.push(id);
                }
            }
            if ids.len() < 2 {
                return Err(err(format!("cable {} has fewer than two landing points", c.id)));
            }
            for id in &ids {
                let lp = landing_points
                    .get_mut(id)
                    .ok_or_else(|| err(format!("cable {} references unknown landing point {id}", c.id)))?;
                lp.cable_ids.insert(c.id.clone());
            }
            let cable = Cable {
                id: c.id.clone(),
                name: c.name,
                landing_point_ids: ids,
                owner_names: c.owners.into_iter().map(|o| o.trim().to_string()).filter(|o| !o.is_empty()).collect(),
                rfs_year: c.rfs,
            };
            if cables.insert(c.id.clone(), cable).is_some() {
                return Err(err(format!("duplicate cable {}", c.id)));
            }
        }
        landing_points.retain(|_, lp| !lp.cable_ids.is_empty());
        Ok(CableDataset { cables, landing_points })
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let raw: RawCableDataset = serde_json::from_str(text).map_err(|e| ModelError::Dataset(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn to_raw(&self) -> RawCableDataset {
        RawCableDataset {
            cables: self
                .cables
                .values()
                .map(|c| RawCable {
                    id: c.id.clone(),
                    name: c.name.clone(),
                    owners: c.owner_names.iter().cloned().collect(),
                    rfs: c.rfs_year,
                    landing_points: c.landing_point_ids.clone(),
                })
                .collect(),
            landing_points: self
                .landing_points
                .values()
                .map(|lp| RawLandingPoint {
                    id: lp.id.clone(),
                    lat: lp.location.lat(),
                    lon: lp.location.lon(),
                    country: lp.country.to_string(),
                })
                .collect(),
        }
    }

    /// Restrict to cables in service before `cutoff_year`. Cables without an
    /// RFS year are kept.
    pub fn active(&self, cutoff_year: Option<i32>) -> CableDataset {
        let Some(cutoff) = cutoff_year else {
            return self.clone();
        };
        let cables: BTreeMap<String, Cable> = self
            .cables
            .iter()
            .filter(|(_, c)| c.rfs_year.is_none_or(|y| y < cutoff))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let landing_points = self
            .landing_points
            .iter()
            .filter_map(|(id, lp)| {
                let cable_ids: BTreeSet<String> =
                    lp.cable_ids.iter().filter(|c| cables.contains_key(*c)).cloned().collect();
                (!cable_ids.is_empty()).then(|| (id.clone(), LandingPoint { cable_ids, ..lp.clone() }))
            })
            .collect();
        CableDataset { cables, landing_points }
    }

    pub fn cable(&self, id: &str) -> Option<&Cable> {
        self.cables.get(id)
    }

    pub fn landing_point(&self, id: &str) -> Option<&LandingPoint> {
        self.landing_points.get(id)
    }

    pub fn cables(&self) -> impl Iterator<Item = &Cable> {
        self.cables.values()
    }

    pub fn landing_points(&self) -> impl Iterator<Item = &LandingPoint> {
        self.landing_points.values()
    }

    pub fn cable_count(&self) -> usize {
        self.cables.len()
    }

    pub fn landing_point_count(&self) -> usize {
        self.landing_points.len()
    }

    /// Countries with at least one landing point.
    pub fn coastal_countries(&self) -> BTreeSet<&CountryCode> {
        self.landing_points.values().map(|lp| &lp.country).collect()
    }

    /// Countries where any cable of `owner` lands.
    pub fn owner_countries(&self, owner: &str) -> BTreeSet<CountryCode> {
        self.cables
            .values()
            .filter(|c| c.owner_names.contains(owner))
            .flat_map(|c| &c.landing_point_ids)
            .filter_map(|id| self.landing_points.get(id))
            .map(|lp| lp.country.clone())
            .collect()
    }

    /// Every distinct owner name across cables.
    pub fn owners(&self) -> BTreeSet<&str> {
        self.cables.values().flat_map(|c| c.owner_names.iter().map(String::as_str)).collect()
    }
}

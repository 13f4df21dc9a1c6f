use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ModelError;

/// How the parallel-cable threshold prunes candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PactMode {
    /// Keep candidates scoring within `pact` of the best candidate.
    #[default]
    Relative,
    /// Keep candidates scoring at least `pact`.
    Absolute,
}

impl std::str::FromStr for PactMode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relative" => Ok(PactMode::Relative),
            "absolute" => Ok(PactMode::Absolute),
            other => Err(ModelError::Config(format!("unknown pact mode {other:?}"))),
        }
    }
}

/// Every tunable constant of the pipeline.
///
/// Defaults reproduce the reference constants; a config file only needs to
/// list the fields it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Fraction of a candidate's latency samples that may violate the
    /// speed-of-light bound before the candidate is discarded.
    pub sol_margin: f64,
    /// Signal propagation speed in fibre, metres per second.
    pub fiber_speed: f64,
    pub dbscan_eps_km: f64,
    pub dbscan_min_points: usize,
    /// Minimum cluster score for an endpoint to count as well geolocated.
    pub good_geo_threshold: f64,
    pub radius_start_km: f64,
    pub radius_step_km: f64,
    pub radius_max_km: f64,
    pub weight_cluster: f64,
    pub weight_distance: f64,
    pub weight_owner: f64,
    /// Category factor for definitely-submarine links.
    pub factor_definite: f64,
    /// Category factor for potentially-submarine links.
    pub factor_potential: f64,
    pub pact: f64,
    pub pact_mode: PactMode,
    /// Primaries ranked at or above this AS rank must operate in one of the
    /// owner's landing countries.
    pub country_validation_max_rank: u32,
    /// IP-to-ASN sources in tie-break order, most trusted first.
    pub asn_source_priority: Vec<String>,
    /// Only cables with an RFS year strictly before this are used.
    pub rfs_cutoff_year: Option<i32>,
    /// Radius within which a geolocation counts as city-level correct.
    pub sweep_match_radius_km: f64,
    /// Failure-report survivors scoring below this are flagged as low score.
    pub report_low_score: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sol_margin: 0.05,
            fiber_speed: 2e8,
            dbscan_eps_km: 20.0,
            dbscan_min_points: 1,
            good_geo_threshold: 0.6,
            radius_start_km: 500.0,
            radius_step_km: 50.0,
            radius_max_km: 1000.0,
            weight_cluster: 0.5,
            weight_distance: 0.4,
            weight_owner: 0.1,
            factor_definite: 0.5,
            factor_potential: 0.25,
            pact: 0.05,
            pact_mode: PactMode::Relative,
            country_validation_max_rank: 100,
            asn_source_priority: ["caida", "cymru", "routinator", "radb"].map(String::from).to_vec(),
            rfs_cutoff_year: None,
            sweep_match_radius_km: 40.0,
            report_low_score: 0.3,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| ModelError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: String| Err(ModelError::Config(m));
        let fractions = [
            ("sol_margin", self.sol_margin),
            ("good_geo_threshold", self.good_geo_threshold),
            ("weight_cluster", self.weight_cluster),
            ("weight_distance", self.weight_distance),
            ("weight_owner", self.weight_owner),
            ("factor_definite", self.factor_definite),
            ("factor_potential", self.factor_potential),
            ("pact", self.pact),
            ("report_low_score", self.report_low_score),
        ];
        for (name, v) in fractions {
            if !(0.0..=1.0).contains(&v) {
                return err(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        let weights = self.weight_cluster + self.weight_distance + self.weight_owner;
        if (weights - 1.0).abs() > 1e-9 {
            return err(format!("score weights must sum to 1, got {weights}"));
        }
        for (name, v) in [
            ("fiber_speed", self.fiber_speed),
            ("dbscan_eps_km", self.dbscan_eps_km),
            ("radius_start_km", self.radius_start_km),
            ("radius_step_km", self.radius_step_km),
            ("radius_max_km", self.radius_max_km),
            ("sweep_match_radius_km", self.sweep_match_radius_km),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.radius_start_km > self.radius_max_km {
            return err(format!(
                "radius_start_km ({}) exceeds radius_max_km ({})",
                self.radius_start_km, self.radius_max_km
            ));
        }
        if self.dbscan_min_points == 0 {
            return err("dbscan_min_points must be at least 1".into());
        }
        Ok(())
    }

    /// Hex SHA-256 over the canonical JSON form of the config.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex_digest(&canonical)
    }

    /// Search radii tried in order: start, start + step, ... up to max.
    pub fn radius_schedule(&self) -> impl Iterator<Item = f64> + '_ {
        (0u32..)
            .map(move |k| self.radius_start_km + f64::from(k) * self.radius_step_km)
            .take_while(move |r| *r <= self.radius_max_km + 1e-9)
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

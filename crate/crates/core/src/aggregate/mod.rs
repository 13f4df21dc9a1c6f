//! Final prediction scores, parallel-cable pruning and link mappings.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{BonusLabel, SubmarineClass};
use crate::geoloc::GeoCluster;
use crate::geomap::GeoCandidate;
use crate::model::{Asn, LinkKey, PactMode, PipelineConfig};
use crate::ownermap::owner_hits;

/// Slack for comparisons against the pruning threshold.
const PACT_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum AggregateError {
    #[error("score component {name} = {value} out of range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("candidate for {link} refers to cluster {index} of {available}")]
    MissingCluster { link: LinkKey, index: usize, available: usize },
}

fn check(name: &'static str, value: f64, ok: bool) -> Result<(), AggregateError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(AggregateError::OutOfRange { name, value })
    }
}

/// Weighted sum of cluster, distance and owner terms scaled by the
/// category factor:
/// `f * (wc * (C1 + C2) + wd * (2 - d1 - d2) + wo * (O1 + O2))`.
pub fn prediction_score(c: [f64; 2], d: [f64; 2], o: [f64; 2], f: f64, cfg: &PipelineConfig) -> Result<f64, AggregateError> {
    for v in c {
        check("C", v, (0.0..=1.0).contains(&v))?;
    }
    for v in d {
        check("d", v, (0.0..=1.0).contains(&v))?;
    }
    for v in o {
        check("O", v, v == 0.0 || v == 1.0)?;
    }
    check("f", f, (0.0..=1.0).contains(&f))?;
    Ok(f * (cfg.weight_cluster * (c[0] + c[1])
        + cfg.weight_distance * (2.0 - d[0] - d[1])
        + cfg.weight_owner * (o[0] + o[1])))
}

/// Category factor for a submarine class; `None` for terrestrial links.
pub fn category_factor(class: SubmarineClass, cfg: &PipelineConfig) -> Option<f64> {
    match class {
        SubmarineClass::S => Some(cfg.factor_definite),
        SubmarineClass::U => Some(cfg.factor_potential),
        SubmarineClass::T => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CableCandidate {
    pub cable_id: String,
    /// Cluster indices of the winning combination.
    pub clusters: [usize; 2],
    /// Nearest landing point of the cable to each endpoint.
    pub landing_points: [String; 2],
    pub c_scores: [f64; 2],
    pub d_scores: [f64; 2],
    pub o_scores: [u8; 2],
    pub category_factor: f64,
    pub prediction_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMapping {
    pub link: LinkKey,
    pub bonus_label: BonusLabel,
    /// Sorted by score descending, then cable id.
    pub candidates: Vec<CableCandidate>,
    pub pruned_count: usize,
}

impl LinkMapping {
    pub fn top(&self) -> &CableCandidate {
        &self.candidates[0]
    }

    pub fn cable_ids(&self) -> impl Iterator<Item = &str> {
        self.candidates.iter().map(|c| c.cable_id.as_str())
    }
}

fn rank(candidates: &mut [CableCandidate]) {
    candidates.sort_by(|a, b| {
        b.prediction_score
            .total_cmp(&a.prediction_score)
            .then_with(|| a.cable_id.cmp(&b.cable_id))
    });
}

/// Keep candidates within `pact` of the best score (relative mode) or at
/// least `pact` (absolute mode). Returns the survivors in rank order and
/// the number removed.
pub fn pact_prune(mut candidates: Vec<CableCandidate>, pact: f64, mode: PactMode) -> (Vec<CableCandidate>, usize) {
    rank(&mut candidates);
    let Some(best) = candidates.first().map(|c| c.prediction_score) else {
        return (candidates, 0);
    };
    let floor = match mode {
        PactMode::Relative => best - pact,
        PactMode::Absolute => pact,
    } - PACT_EPS;
    let before = candidates.len();
    candidates.retain(|c| c.prediction_score >= floor);
    let pruned = before - candidates.len();
    (candidates, pruned)
}

/// Score every cluster-combination instantiation, keep the best per cable,
/// then prune. Terrestrial links and links without candidates are unmapped.
pub fn finalize(
    link: LinkKey,
    label: &BonusLabel,
    geo_candidates: &[GeoCandidate],
    clusters: [&[GeoCluster]; 2],
    link_asns: [Option<Asn>; 2],
    owner_asns: &BTreeMap<String, BTreeSet<Asn>>,
    cfg: &PipelineConfig,
) -> Result<Option<LinkMapping>, AggregateError> {
    let Some(f) = category_factor(label.submarine_class, cfg) else {
        return Ok(None);
    };
    let empty = BTreeSet::new();
    let mut best: BTreeMap<&str, CableCandidate> = BTreeMap::new();
    for g in geo_candidates {
        let mut c = [0.0; 2];
        for side in 0..2 {
            let idx = g.clusters[side];
            c[side] = clusters[side]
                .get(idx)
                .ok_or(AggregateError::MissingCluster {
                    link,
                    index: idx,
                    available: clusters[side].len(),
                })?
                .score;
        }
        let hits = owner_hits(link_asns, owner_asns.get(&g.cable_id).unwrap_or(&empty));
        let o = hits.map(u8::from);
        let s = prediction_score(c, g.d, o.map(f64::from), f, cfg)?;
        let cand = CableCandidate {
            cable_id: g.cable_id.clone(),
            clusters: g.clusters,
            landing_points: [g.landing[0].id.clone(), g.landing[1].id.clone()],
            c_scores: c,
            d_scores: g.d,
            o_scores: o,
            category_factor: f,
            prediction_score: s,
        };
        match best.get(g.cable_id.as_str()) {
            Some(prev) if prev.prediction_score >= s => {}
            _ => {
                best.insert(&g.cable_id, cand);
            }
        }
    }
    let (candidates, pruned_count) = pact_prune(best.into_values().collect(), cfg.pact, cfg.pact_mode);
    if candidates.is_empty() {
        return Ok(None);
    }
    Ok(Some(LinkMapping {
        link,
        bonus_label: label.clone(),
        candidates,
        pruned_count,
    }))
}

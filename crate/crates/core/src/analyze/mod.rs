//! Coverage statistics, failure-window diffs and operator map overlap.

use std::collections::{BTreeMap, BTreeSet};
use std::net::IpAddr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::LinkMapping;
use crate::classify::{LinkClass, SubmarineClass};
use crate::model::{Asn, CableDataset, LinkKey, PipelineConfig};
use crate::ownermap::{match_owner, tokens, AsIndex};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyzeError {
    #[error("unknown cable or landing point {0:?}")]
    UnknownEntity(String),
}

fn fraction(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MappingStats {
    pub cables_total: usize,
    pub cables_covered: f64,
    pub landing_points_total: usize,
    pub landing_points_covered: f64,
    /// Links classified S or U.
    pub submarine_links: usize,
    pub mapped_links: usize,
    pub links_mapped: f64,
    /// Links per B-O-N-U-S category, unclassified included.
    pub categories: BTreeMap<String, usize>,
    /// Number of retained cables per mapped link.
    pub cables_per_link: BTreeMap<usize, usize>,
    /// Number of mapped links per cable, over every cable in the dataset.
    pub links_per_cable: BTreeMap<usize, usize>,
    /// Sorted top prediction scores per category.
    pub score_cdf: BTreeMap<String, Vec<f64>>,
}

/// Coverage and distribution statistics over finalized mappings.
pub fn summarize<'a>(
    mappings: &[LinkMapping],
    classes: impl IntoIterator<Item = &'a LinkClass>,
    dataset: &CableDataset,
) -> MappingStats {
    let mut categories = BTreeMap::new();
    let mut submarine_links = 0;
    for c in classes {
        *categories.entry(c.category()).or_insert(0) += 1;
        if matches!(c.label().map(|l| l.submarine_class), Some(SubmarineClass::S | SubmarineClass::U)) {
            submarine_links += 1;
        }
    }
    let mut per_cable: BTreeMap<&str, usize> = dataset.cables().map(|c| (c.id.as_str(), 0)).collect();
    let mut landing: BTreeSet<&str> = BTreeSet::new();
    let mut cables_per_link = BTreeMap::new();
    let mut score_cdf: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for m in mappings {
        *cables_per_link.entry(m.candidates.len()).or_insert(0) += 1;
        score_cdf
            .entry(m.bonus_label.category())
            .or_default()
            .push(m.top().prediction_score);
        for c in &m.candidates {
            if let Some(n) = per_cable.get_mut(c.cable_id.as_str()) {
                *n += 1;
            }
            for lp in &c.landing_points {
                if dataset.landing_point(lp).is_some() {
                    landing.insert(lp);
                }
            }
        }
    }
    for v in score_cdf.values_mut() {
        v.sort_by(f64::total_cmp);
    }
    let mut links_per_cable = BTreeMap::new();
    for n in per_cable.values() {
        *links_per_cable.entry(*n).or_insert(0) += 1;
    }
    let covered = per_cable.values().filter(|n| **n > 0).count();
    MappingStats {
        cables_total: dataset.cable_count(),
        cables_covered: fraction(covered, dataset.cable_count()),
        landing_points_total: dataset.landing_point_count(),
        landing_points_covered: fraction(landing.len(), dataset.landing_point_count()),
        submarine_links,
        mapped_links: mappings.len(),
        links_mapped: fraction(mappings.len(), submarine_links),
        categories,
        cables_per_link,
        links_per_cable,
        score_cdf,
    }
}

/// Link sets observed before, during and optionally after an outage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FailureWindows {
    pub before: BTreeSet<LinkKey>,
    pub during: BTreeSet<LinkKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub after: Option<BTreeSet<LinkKey>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureScenario {
    /// Cable id or landing point id.
    pub failed_entity: String,
    pub windows: FailureWindows,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowCounts {
    pub before: usize,
    pub during: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub after: Option<usize>,
}

/// A link mapped to the failed entity that was still observed during the
/// outage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Survivor {
    pub link: LinkKey,
    /// Best score among the failed cables in the link's mapping.
    pub score: f64,
    pub low_score: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub failed_entity: String,
    pub failed_cables: BTreeSet<String>,
    pub affected_links: usize,
    pub counts: WindowCounts,
    pub survivors: Vec<Survivor>,
    /// Potentially submarine links that vanished during the outage and
    /// were present around it.
    pub confirmed_submarine: Vec<LinkKey>,
}

/// Cables taken down by the failure of a cable or a landing point.
pub fn failed_cables(dataset: &CableDataset, entity: &str) -> Result<BTreeSet<String>, AnalyzeError> {
    if let Some(c) = dataset.cable(entity) {
        return Ok(BTreeSet::from([c.id.clone()]));
    }
    dataset
        .landing_point(entity)
        .map(|lp| lp.cable_ids.clone())
        .ok_or_else(|| AnalyzeError::UnknownEntity(entity.to_string()))
}

/// Intersect the links mapped to the failed entity with each window.
pub fn failure_diff(
    mappings: &[LinkMapping],
    dataset: &CableDataset,
    scenario: &FailureScenario,
    cfg: &PipelineConfig,
) -> Result<FailureReport, AnalyzeError> {
    let failed = failed_cables(dataset, &scenario.failed_entity)?;
    let affected: BTreeMap<LinkKey, &LinkMapping> = mappings
        .iter()
        .filter(|m| m.cable_ids().any(|c| failed.contains(c)))
        .map(|m| (m.link, m))
        .collect();
    let w = &scenario.windows;
    let count = |set: &BTreeSet<LinkKey>| affected.keys().filter(|l| set.contains(l)).count();
    let counts = WindowCounts {
        before: count(&w.before),
        during: count(&w.during),
        after: w.after.as_ref().map(count),
    };
    let survivors = affected
        .iter()
        .filter(|(l, _)| w.during.contains(l))
        .map(|(l, m)| {
            let score = m
                .candidates
                .iter()
                .filter(|c| failed.contains(&c.cable_id))
                .map(|c| c.prediction_score)
                .fold(f64::MIN, f64::max);
            Survivor {
                link: *l,
                score,
                low_score: score < cfg.report_low_score,
            }
        })
        .collect();
    let confirmed_submarine = affected
        .iter()
        .filter(|(l, m)| {
            m.bonus_label.submarine_class == SubmarineClass::U
                && w.before.contains(l)
                && !w.during.contains(l)
                && w.after.as_ref().is_none_or(|a| a.contains(l))
        })
        .map(|(l, _)| *l)
        .collect();
    Ok(FailureReport {
        failed_entity: scenario.failed_entity.clone(),
        failed_cables: failed,
        affected_links: affected.len(),
        counts,
        survivors,
        confirmed_submarine,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorOverlap {
    pub operator: String,
    pub matched: usize,
    pub total: usize,
    /// Truth entries absent from the predictions, in input order.
    pub missing: Vec<String>,
}

/// Compare the cables predicted for an operator's links against a
/// reference list of cable names or ids.
pub fn operator_overlap(
    operator: &str,
    mappings: &[LinkMapping],
    ip_asn: &BTreeMap<IpAddr, Asn>,
    as_index: &AsIndex,
    dataset: &CableDataset,
    truth: &[String],
    cfg: &PipelineConfig,
) -> OperatorOverlap {
    let operator_asns: BTreeSet<Asn> = match_owner(operator, as_index, &BTreeSet::new(), cfg)
        .map(|e| e.asns().collect())
        .unwrap_or_default();
    let predicted: BTreeSet<&str> = mappings
        .iter()
        .filter(|m| {
            m.link
                .endpoints()
                .iter()
                .any(|ip| ip_asn.get(ip).is_some_and(|a| operator_asns.contains(a)))
        })
        .flat_map(LinkMapping::cable_ids)
        .collect();
    let resolve = |name: &str| -> Option<&str> {
        let want = tokens(name);
        dataset
            .cables()
            .find(|c| c.id.eq_ignore_ascii_case(name.trim()) || (!want.is_empty() && tokens(&c.name) == want))
            .map(|c| c.id.as_str())
    };
    let mut matched = 0;
    let mut missing = vec![];
    for t in truth {
        if resolve(t).is_some_and(|id| predicted.contains(id)) {
            matched += 1;
        } else {
            missing.push(t.clone());
        }
    }
    OperatorOverlap {
        operator: operator.to_string(),
        matched,
        total: truth.len(),
        missing,
    }
}

#[cfg(test)]
mod tests;

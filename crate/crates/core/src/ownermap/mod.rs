//! IP to ASN voting, cable owner to ASN matching and ownership scores.

use std::collections::{BTreeMap, BTreeSet};
use std::net::IpAddr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{Asn, Cable, CableDataset, CountryCode, ModelError, PipelineConfig};

mod names;

pub use names::{abbreviation, owner_abbreviation, tokens};

/// One row of `asn_records.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsnRecord {
    pub ip: IpAddr,
    pub source: String,
    pub asn: Asn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsnVote {
    pub ip: IpAddr,
    pub per_source: BTreeMap<String, Asn>,
    pub resolved_asn: Asn,
    pub agreement: f64,
}

fn source_rank(source: &str, priority: &[String]) -> (usize, String) {
    let pos = priority.iter().position(|p| p == source).unwrap_or(priority.len());
    (pos, source.to_string())
}

/// Modal ASN across sources. Ties go to the ASN backed by the
/// highest-priority source; sources missing from `priority` rank after all
/// listed ones, alphabetically.
pub fn resolve_asn(ip: IpAddr, per_source: &BTreeMap<String, Asn>, priority: &[String]) -> Option<AsnVote> {
    let mut tally: BTreeMap<Asn, (usize, (usize, String))> = BTreeMap::new();
    for (source, asn) in per_source {
        let rank = source_rank(source, priority);
        let e = tally.entry(*asn).or_insert((0, rank.clone()));
        e.0 += 1;
        if rank < e.1 {
            e.1 = rank;
        }
    }
    let (asn, (count, _)) = tally
        .into_iter()
        .min_by(|(_, (ca, ra)), (_, (cb, rb))| cb.cmp(ca).then_with(|| ra.cmp(rb)))?;
    Some(AsnVote {
        ip,
        per_source: per_source.clone(),
        resolved_asn: asn,
        agreement: count as f64 / per_source.len() as f64,
    })
}

/// Group per-source records by IP. A source reporting several ASNs for one
/// IP keeps the lowest; the number of such conflicts is returned.
pub fn group_asn_records<I: IntoIterator<Item = AsnRecord>>(records: I) -> (BTreeMap<IpAddr, BTreeMap<String, Asn>>, usize) {
    let mut out: BTreeMap<IpAddr, BTreeMap<String, Asn>> = BTreeMap::new();
    let mut conflicts = 0;
    for r in records {
        let slot = out.entry(r.ip).or_default();
        match slot.get_mut(&r.source) {
            Some(prev) if *prev != r.asn => {
                conflicts += 1;
                *prev = (*prev).min(r.asn);
            }
            Some(_) => {}
            None => {
                slot.insert(r.source, r.asn);
            }
        }
    }
    (out, conflicts)
}

pub fn resolve_all(grouped: &BTreeMap<IpAddr, BTreeMap<String, Asn>>, cfg: &PipelineConfig) -> Vec<AsnVote> {
    grouped
        .par_iter()
        .filter_map(|(ip, per)| resolve_asn(*ip, per, &cfg.asn_source_priority))
        .collect()
}

/// One row of `as_info.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAsRecord", into = "RawAsRecord")]
pub struct AsRecord {
    pub asn: Asn,
    pub org_name: String,
    pub as_name: String,
    pub rank: u32,
    pub country: Option<CountryCode>,
    pub customers: BTreeSet<Asn>,
}

#[derive(Serialize, Deserialize)]
struct RawAsRecord {
    asn: Asn,
    org: String,
    as_name: String,
    rank: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    country: Option<String>,
    #[serde(default)]
    customers: BTreeSet<Asn>,
}

impl TryFrom<RawAsRecord> for AsRecord {
    type Error = ModelError;

    fn try_from(r: RawAsRecord) -> Result<Self, ModelError> {
        if r.rank == 0 {
            return Err(ModelError::Dataset(format!("{}: rank must be positive", r.asn)));
        }
        let country = match r.country.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(c) => Some(CountryCode::new(c)?),
        };
        Ok(AsRecord {
            asn: r.asn,
            org_name: r.org,
            as_name: r.as_name,
            rank: r.rank,
            country,
            customers: r.customers,
        })
    }
}

impl From<AsRecord> for RawAsRecord {
    fn from(r: AsRecord) -> Self {
        RawAsRecord {
            asn: r.asn,
            org: r.org_name,
            as_name: r.as_name,
            rank: r.rank,
            country: r.country.map(String::from),
            customers: r.customers,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchDimension {
    OrgPartial,
    Abbreviation,
    AsName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchRole {
    Primary,
    Customer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnerAsnMatch {
    pub asn: Asn,
    pub role: MatchRole,
    pub dimensions: BTreeSet<MatchDimension>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnerAsnEntry {
    pub primary: Asn,
    /// Primary first, then customers by ASN.
    pub matches: Vec<OwnerAsnMatch>,
}

impl OwnerAsnEntry {
    pub fn asns(&self) -> impl Iterator<Item = Asn> + '_ {
        self.matches.iter().map(|m| m.asn)
    }
}

/// Owner name to matched ASNs. Owners without any match are absent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OwnerAsnMap {
    pub owners: BTreeMap<String, OwnerAsnEntry>,
}

impl OwnerAsnMap {
    /// Union of the ASNs of every owner of `cable`.
    pub fn cable_asns(&self, cable: &Cable) -> BTreeSet<Asn> {
        cable
            .owner_names
            .iter()
            .filter_map(|o| self.owners.get(o))
            .flat_map(OwnerAsnEntry::asns)
            .collect()
    }
}

struct IndexedAs {
    record: AsRecord,
    org_tokens: Vec<String>,
    org_abbrev: Option<String>,
    name_tokens: Vec<String>,
}

/// AS table with names pre-tokenized for owner matching.
pub struct AsIndex {
    entries: Vec<IndexedAs>,
    by_asn: BTreeMap<Asn, usize>,
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

impl AsIndex {
    /// Later duplicates of an ASN replace earlier ones.
    pub fn new<I: IntoIterator<Item = AsRecord>>(records: I) -> Self {
        let mut by_asn: BTreeMap<Asn, AsRecord> = BTreeMap::new();
        for r in records {
            by_asn.insert(r.asn, r);
        }
        let entries: Vec<IndexedAs> = by_asn
            .into_values()
            .map(|record| IndexedAs {
                org_tokens: tokens(&record.org_name),
                org_abbrev: abbreviation(&record.org_name),
                name_tokens: tokens(&record.as_name),
                record,
            })
            .collect();
        let by_asn = entries.iter().enumerate().map(|(i, e)| (e.record.asn, i)).collect();
        AsIndex { entries, by_asn }
    }

    pub fn get(&self, asn: Asn) -> Option<&AsRecord> {
        self.by_asn.get(&asn).map(|&i| &self.entries[i].record)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every AS hit by `name` on any dimension, unpruned.
    pub fn hits(&self, name: &str) -> Vec<(&AsRecord, BTreeSet<MatchDimension>)> {
        let owner = tokens(name);
        if owner.is_empty() {
            return vec![];
        }
        let compact: String = owner.concat();
        let short = owner_abbreviation(&owner);
        self.entries
            .iter()
            .filter_map(|e| {
                let mut dims = BTreeSet::new();
                if contains_run(&e.org_tokens, &owner) {
                    dims.insert(MatchDimension::OrgPartial);
                }
                if e.org_abbrev.as_ref().is_some_and(|a| owner.contains(a)) {
                    dims.insert(MatchDimension::Abbreviation);
                }
                if contains_run(&e.name_tokens, &owner)
                    || e.name_tokens.iter().any(|t| *t == compact || short.as_ref() == Some(t))
                {
                    dims.insert(MatchDimension::AsName);
                }
                (!dims.is_empty()).then_some((&e.record, dims))
            })
            .collect()
    }
}

/// Match one owner name against the AS table.
///
/// The best-ranked hit (lowest rank, then lowest ASN) becomes the primary;
/// other hits survive only as customers of the primary. A primary ranked
/// within `country_validation_max_rank` must be registered in one of
/// `owner_countries`, otherwise the next hit is tried. Validation is skipped
/// when `owner_countries` is empty.
pub fn match_owner(
    owner: &str,
    index: &AsIndex,
    owner_countries: &BTreeSet<CountryCode>,
    cfg: &PipelineConfig,
) -> Option<OwnerAsnEntry> {
    let mut hits = index.hits(owner);
    hits.sort_by_key(|(r, _)| (r.rank, r.asn));
    let valid = |r: &AsRecord| {
        r.rank > cfg.country_validation_max_rank
            || owner_countries.is_empty()
            || r.country.as_ref().is_some_and(|c| owner_countries.contains(c))
    };
    let (primary, primary_dims) = hits.iter().find(|(r, _)| valid(r))?;
    let mut matches = vec![OwnerAsnMatch {
        asn: primary.asn,
        role: MatchRole::Primary,
        dimensions: primary_dims.clone(),
    }];
    let mut customers: Vec<OwnerAsnMatch> = hits
        .iter()
        .filter(|(r, _)| r.asn != primary.asn && primary.customers.contains(&r.asn))
        .map(|(r, dims)| OwnerAsnMatch {
            asn: r.asn,
            role: MatchRole::Customer,
            dimensions: dims.clone(),
        })
        .collect();
    customers.sort_by_key(|m| m.asn);
    matches.extend(customers);
    Some(OwnerAsnEntry {
        primary: primary.asn,
        matches,
    })
}

/// Match every owner named in `dataset`.
pub fn build_owner_map(dataset: &CableDataset, index: &AsIndex, cfg: &PipelineConfig) -> OwnerAsnMap {
    let owners: Vec<&str> = dataset.owners().into_iter().collect();
    let owners = owners
        .par_iter()
        .filter_map(|o| {
            let countries = dataset.owner_countries(o);
            match_owner(o, index, &countries, cfg).map(|e| (o.to_string(), e))
        })
        .collect();
    OwnerAsnMap { owners }
}

/// Owner ASN union for every cable of `dataset`.
pub fn cable_owner_asns(dataset: &CableDataset, map: &OwnerAsnMap) -> BTreeMap<String, BTreeSet<Asn>> {
    dataset.cables().map(|c| (c.id.clone(), map.cable_asns(c))).collect()
}

/// Per-endpoint owner indicator `O_i`: whether the endpoint's ASN is among
/// the cable owners' ASNs.
pub fn owner_hits(link_asns: [Option<Asn>; 2], owner_asns: &BTreeSet<Asn>) -> [bool; 2] {
    link_asns.map(|a| a.is_some_and(|a| owner_asns.contains(&a)))
}

/// 0.5 per endpoint whose ASN belongs to the cable's owners.
pub fn ownership_score(link_asns: [Option<Asn>; 2], owner_asns: &BTreeSet<Asn>) -> f64 {
    0.5 * owner_hits(link_asns, owner_asns).iter().filter(|h| **h).count() as f64
}

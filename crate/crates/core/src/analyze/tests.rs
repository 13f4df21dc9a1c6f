use super::*;
use crate::aggregate::CableCandidate;
use crate::classify::{BonusLabel, GeoConfidence, UnclassifiedReason};
use crate::ownermap::AsRecord;
use proptest::prelude::*;

fn dataset() -> CableDataset {
    CableDataset::from_json(
        r#"{
        "cables": [
            {"id": "aae1", "name": "AAE-1", "owners": ["Acme"], "landing_points": ["aden", "djibouti"]},
            {"id": "peace", "name": "PEACE Cable", "owners": [], "landing_points": ["aden", "karachi"]},
            {"id": "sea", "name": "SEA-ME-WE 5", "owners": ["Acme"], "landing_points": ["djibouti", "marseille"]},
            {"id": "idle", "name": "Idle", "owners": [], "landing_points": ["karachi", "marseille"]}
        ],
        "landing_points": [
            {"id": "aden", "lat": 12.8, "lon": 45.0, "country": "YE"},
            {"id": "djibouti", "lat": 11.6, "lon": 43.1, "country": "DJ"},
            {"id": "karachi", "lat": 24.8, "lon": 67.0, "country": "PK"},
            {"id": "marseille", "lat": 43.3, "lon": 5.4, "country": "FR"}
        ]}"#,
    )
    .unwrap()
}

fn link(n: u8) -> LinkKey {
    LinkKey::new(IpAddr::from([10, 0, 0, n]), IpAddr::from([172, 16, 0, n])).unwrap()
}

fn mapping(n: u8, class: SubmarineClass, cables: &[(&str, f64)]) -> LinkMapping {
    LinkMapping {
        link: link(n),
        bonus_label: BonusLabel {
            geo_confidence: GeoConfidence::B,
            submarine_class: class,
            geo_cluster_score: 2.0,
        },
        candidates: cables
            .iter()
            .map(|(id, s)| CableCandidate {
                cable_id: id.to_string(),
                clusters: [0, 0],
                landing_points: ["aden".into(), "djibouti".into()],
                c_scores: [1.0, 1.0],
                d_scores: [0.0, 0.0],
                o_scores: [0, 0],
                category_factor: 0.5,
                prediction_score: *s,
            })
            .collect(),
        pruned_count: 0,
    }
}

fn cfg() -> PipelineConfig {
    PipelineConfig::default()
}

#[test]
fn empty_stats_are_zero() {
    let ds = CableDataset::from_json(r#"{"cables": [], "landing_points": []}"#).unwrap();
    let s = summarize(&[], [], &ds);
    assert_eq!(s, MappingStats::default());
}

#[test]
fn one_cable_each() {
    let maps: Vec<LinkMapping> = (0..10).map(|i| mapping(i, SubmarineClass::S, &[("aae1", 0.9)])).collect();
    let classes: Vec<LinkClass> = maps.iter().map(|m| LinkClass::Classified(m.bonus_label.clone())).collect();
    let s = summarize(&maps, &classes, &dataset());
    assert_eq!(s.cables_per_link, BTreeMap::from([(1, 10)]));
    assert_eq!(s.links_per_cable, BTreeMap::from([(0, 3), (10, 1)]));
    assert_eq!(s.cables_covered, 0.25);
    assert_eq!(s.landing_points_covered, 0.5);
    assert_eq!(s.links_mapped, 1.0);
    assert_eq!(s.categories, BTreeMap::from([("S,B".to_string(), 10)]));
    assert_eq!(s.score_cdf["S,B"].len(), 10);
}

#[test]
fn mapped_fraction_counts_only_submarine_classes() {
    let maps = vec![mapping(1, SubmarineClass::U, &[("peace", 0.4), ("aae1", 0.38)])];
    let t = BonusLabel {
        geo_confidence: GeoConfidence::N,
        submarine_class: SubmarineClass::T,
        geo_cluster_score: 0.5,
    };
    let classes = vec![
        LinkClass::Classified(maps[0].bonus_label.clone()),
        LinkClass::Classified(BonusLabel {
            submarine_class: SubmarineClass::S,
            ..t.clone()
        }),
        LinkClass::Classified(t),
        LinkClass::Unclassified {
            reason: UnclassifiedReason::NoGeolocation,
        },
    ];
    let s = summarize(&maps, &classes, &dataset());
    assert_eq!((s.submarine_links, s.mapped_links), (2, 1));
    assert_eq!(s.links_mapped, 0.5);
    assert_eq!(s.categories["unclassified"], 1);
    assert_eq!(s.categories["T"], 1);
}

fn windows(before: &[u8], during: &[u8], after: Option<&[u8]>) -> FailureWindows {
    let set = |v: &[u8]| v.iter().map(|n| link(*n)).collect();
    FailureWindows {
        before: set(before),
        during: set(during),
        after: after.map(set),
    }
}

#[test]
fn affected_links_vanish_during_outage() {
    let maps = vec![
        mapping(1, SubmarineClass::S, &[("sea", 0.9)]),
        mapping(2, SubmarineClass::S, &[("sea", 0.8)]),
        mapping(3, SubmarineClass::U, &[("sea", 0.45)]),
        mapping(4, SubmarineClass::S, &[("peace", 0.9)]),
    ];
    let scenario = FailureScenario {
        failed_entity: "sea".into(),
        windows: windows(&[1, 2, 3, 4], &[4], Some(&[1, 2, 3, 4])),
    };
    let r = failure_diff(&maps, &dataset(), &scenario, &cfg()).unwrap();
    assert_eq!(r.counts, WindowCounts { before: 3, during: 0, after: Some(3) });
    assert!(r.survivors.is_empty());
    assert_eq!(r.confirmed_submarine, [link(3)]);
}

#[test]
fn landing_point_failure_with_low_score_survivor() {
    // Aden hosts two cables; one stray link keeps appearing during the outage.
    let mut maps: Vec<LinkMapping> = (1..=6).map(|i| mapping(i, SubmarineClass::S, &[("aae1", 0.8)])).collect();
    maps.extend((7..=9).map(|i| mapping(i, SubmarineClass::U, &[("peace", 0.4)])));
    maps.push(mapping(10, SubmarineClass::S, &[("sea", 0.9), ("aae1", 0.2)]));
    maps.push(mapping(11, SubmarineClass::S, &[("idle", 0.9)]));
    let all: Vec<u8> = (1..=11).collect();
    let scenario = FailureScenario {
        failed_entity: "aden".into(),
        windows: windows(&all, &[10, 11], Some(&all[..8])),
    };
    let r = failure_diff(&maps, &dataset(), &scenario, &cfg()).unwrap();
    assert_eq!(r.failed_cables, BTreeSet::from(["aae1".to_string(), "peace".to_string()]));
    assert_eq!(r.counts, WindowCounts { before: 10, during: 1, after: Some(8) });
    assert_eq!(r.survivors.len(), 1);
    assert_eq!(r.survivors[0].link, link(10));
    assert!(r.survivors[0].low_score);
    assert_eq!(r.confirmed_submarine, [link(7), link(8)]);
}

#[test]
fn no_after_window() {
    let maps = vec![mapping(1, SubmarineClass::U, &[("aae1", 0.4)])];
    let scenario = FailureScenario {
        failed_entity: "aae1".into(),
        windows: windows(&[1], &[], None),
    };
    let r = failure_diff(&maps, &dataset(), &scenario, &cfg()).unwrap();
    assert_eq!(r.counts.after, None);
    assert_eq!(r.confirmed_submarine, [link(1)]);
}

#[test]
fn unknown_entity_is_fatal() {
    let scenario = FailureScenario {
        failed_entity: "atlantis".into(),
        windows: FailureWindows::default(),
    };
    assert_eq!(
        failure_diff(&[], &dataset(), &scenario, &cfg()),
        Err(AnalyzeError::UnknownEntity("atlantis".into()))
    );
}

fn as_index() -> AsIndex {
    let rec = |asn, org: &str| AsRecord {
        asn: Asn(asn),
        org_name: org.into(),
        as_name: org.to_uppercase(),
        rank: 500,
        country: None,
        customers: BTreeSet::new(),
    };
    AsIndex::new([rec(100, "Acme Networks"), rec(200, "Globex")])
}

fn ip_asn() -> BTreeMap<IpAddr, Asn> {
    (1..=5u8)
        .map(|n| (link(n).a(), Asn(100)))
        .chain([(link(6).a(), Asn(200))])
        .collect()
}

#[test]
fn operator_overlap_reports_missing() {
    let maps = vec![
        mapping(1, SubmarineClass::S, &[("aae1", 0.9)]),
        mapping(2, SubmarineClass::S, &[("peace", 0.9), ("sea", 0.88)]),
        mapping(6, SubmarineClass::S, &[("idle", 0.9)]),
    ];
    let truth: Vec<String> = ["AAE-1", "peace cable", "SEA", "Idle", "Ghost"].map(String::from).to_vec();
    let r = operator_overlap("Acme", &maps, &ip_asn(), &as_index(), &dataset(), &truth, &cfg());
    assert_eq!((r.matched, r.total), (3, 5));
    assert_eq!(r.missing, ["Idle", "Ghost"]);
}

#[test]
fn operator_overlap_edges() {
    let maps = vec![mapping(1, SubmarineClass::S, &[("aae1", 0.9)])];
    let r = operator_overlap("Acme", &maps, &ip_asn(), &as_index(), &dataset(), &[], &cfg());
    assert_eq!((r.matched, r.total, r.missing.len()), (0, 0, 0));
    let truth = vec!["AAE-1".to_string()];
    let r = operator_overlap("Initech", &maps, &ip_asn(), &as_index(), &dataset(), &truth, &cfg());
    assert_eq!((r.matched, r.total), (0, 1));
    assert_eq!(r.missing, truth);
    let r = operator_overlap("Acme", &maps, &ip_asn(), &as_index(), &dataset(), &truth, &cfg());
    assert_eq!((r.matched, r.total), (1, 1));
}

proptest! {
    #[test]
    fn counts_shrink_with_windows(
        mapped in prop::collection::vec((prop::bool::ANY, 0.0f64..1.0), 12),
        before in prop::collection::btree_set(0u8..12, 0..12),
        during in prop::collection::btree_set(0u8..12, 0..12),
        removed in prop::collection::btree_set(0u8..12, 0..6),
    ) {
        let maps: Vec<LinkMapping> = mapped
            .iter()
            .enumerate()
            .map(|(i, (hit, s))| mapping(i as u8, SubmarineClass::U, &[(if *hit { "aae1" } else { "idle" }, *s)]))
            .collect();
        let b: Vec<u8> = before.iter().copied().collect();
        let d: Vec<u8> = during.iter().copied().collect();
        let full = FailureScenario { failed_entity: "aae1".into(), windows: windows(&b, &d, Some(&b)) };
        let keep = |v: &[u8]| v.iter().copied().filter(|n| !removed.contains(n)).collect::<Vec<_>>();
        let fewer = FailureScenario {
            failed_entity: "aae1".into(),
            windows: windows(&keep(&b), &keep(&d), Some(&keep(&b))),
        };
        let ds = dataset();
        let r1 = failure_diff(&maps, &ds, &full, &cfg()).unwrap();
        let r2 = failure_diff(&maps, &ds, &fewer, &cfg()).unwrap();
        prop_assert!(r2.counts.before <= r1.counts.before);
        prop_assert!(r2.counts.during <= r1.counts.during);
        prop_assert!(r2.counts.after <= r1.counts.after);
    }

    #[test]
    fn stats_ignore_order(
        mapped in prop::collection::vec((0usize..4, 0usize..4, 0.0f64..1.0), 0..15),
        seed in any::<u64>(),
    ) {
        let ids = ["aae1", "peace", "sea", "idle"];
        let maps: Vec<LinkMapping> = mapped
            .iter()
            .enumerate()
            .map(|(i, (a, b, s))| {
                let mut c = vec![(ids[*a], *s)];
                if a != b {
                    c.push((ids[*b], *s / 2.0));
                }
                mapping(i as u8, SubmarineClass::S, &c)
            })
            .collect();
        let classes: Vec<LinkClass> = maps.iter().map(|m| LinkClass::Classified(m.bonus_label.clone())).collect();
        let mut shuffled = maps.clone();
        let n = shuffled.len().max(1);
        shuffled.rotate_left((seed as usize) % n);
        shuffled.reverse();
        let ds = dataset();
        prop_assert_eq!(summarize(&maps, &classes, &ds), summarize(&shuffled, classes.iter().rev(), &ds));
    }
}

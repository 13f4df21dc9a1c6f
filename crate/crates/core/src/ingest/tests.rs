use std::collections::BTreeMap;
use std::io::Cursor;

use super::*;
use crate::model::{GeoPoint, Hop};

fn ip(s: &str) -> IpAddr {
    s.parse().unwrap()
}

fn trace(id: &str, hops: &[(u32, Option<&str>)]) -> TracerouteRecord {
    TracerouteRecord {
        id: id.to_string(),
        probe: GeoPoint::new(25.0, 121.5).unwrap(),
        hops: hops
            .iter()
            .map(|(idx, a)| Hop {
                idx: *idx,
                ip: a.map(ip),
                rtts: vec![1.0 + *idx as f64],
            })
            .collect(),
    }
}

const A: &str = "72.14.237.68";
const B: &str = "142.250.226.86";
const C: &str = "8.8.8.8";

#[test]
fn loop_is_dropped() {
    let line = serde_json::to_string(&trace("l", &[(1, Some(A)), (2, Some(B)), (3, Some(A))])).unwrap();
    assert_eq!(parse_canonical_line(&line), Err(TraceRejection::Loop));
    let parsed = read_traces(Cursor::new(line), TraceFormat::CanonicalJsonl, None).unwrap();
    assert!(parsed.records.is_empty());
    assert_eq!(parsed.stats.loops, 1);
}

#[test]
fn three_hop_trace() {
    let line = r#"{"id":"t1","probe":{"lat":25.0,"lon":121.5},"hops":[{"idx":1,"ip":"72.14.237.68","rtts":[1.2]},{"idx":2,"rtts":[]},{"idx":3,"ip":"8.8.8.8","rtts":[3.0,2.5]}]}"#;
    let t = parse_canonical_line(line).unwrap();
    assert_eq!(t.hops.len(), 3);
    assert_eq!(t.hops[1].ip, None);
}

#[test]
fn fixture_with_two_invalid() {
    let mut text = String::new();
    for i in 0..8 {
        let t = trace(&format!("ok{i}"), &[(1, Some(A)), (2, Some(B))]);
        text.push_str(&serde_json::to_string(&t).unwrap());
        text.push('\n');
    }
    text.push_str(r#"{"id":"empty","probe":{"lat":0,"lon":0},"hops":[]}"#);
    text.push('\n');
    text.push_str("{not json\n\n");
    let parsed = read_traces(Cursor::new(text), TraceFormat::CanonicalJsonl, None).unwrap();
    assert_eq!(parsed.records.len(), 8);
    assert_eq!(parsed.stats.dropped(), 2);
    assert_eq!((parsed.stats.invalid, parsed.stats.malformed), (1, 1));
}

#[test]
fn unreadable_file_is_fatal() {
    let src = RawTraceSource {
        format: TraceFormat::CanonicalJsonl,
        path: "/nonexistent/traces.jsonl".into(),
    };
    assert!(matches!(parse_traces(&src, None), Err(IngestError::Io { .. })));
}

#[test]
fn consecutive_public_hops_make_links() {
    let links = extract_links(&trace("t", &[(1, Some(A)), (2, Some(B)), (3, Some(C))]));
    assert_eq!(
        links,
        vec![LinkKey::new(ip(A), ip(B)).unwrap(), LinkKey::new(ip(B), ip(C)).unwrap()]
    );
}

#[test]
fn star_breaks_adjacency() {
    assert!(extract_links(&trace("t", &[(1, Some(A)), (2, None), (3, Some(C))])).is_empty());
    // A hop index missing from the record altogether also breaks adjacency.
    assert!(extract_links(&trace("t", &[(1, Some(A)), (3, Some(C))])).is_empty());
}

#[test]
fn private_hop_breaks_adjacency() {
    assert!(extract_links(&trace("t", &[(1, Some(A)), (2, Some("10.0.0.1")), (3, Some(C))])).is_empty());
}

#[test]
fn reversed_links_merge() {
    let table = collect_unique([LinkKey::new(ip(A), ip(B)).unwrap(), LinkKey::new(ip(B), ip(A)).unwrap()]);
    let links: Vec<_> = table.links().collect();
    assert_eq!(links.len(), 1);
    assert_eq!(links[0].occurrences, 2);
    assert!(collect_unique([]).is_empty());
}

#[test]
fn atlas_array_and_lines() {
    let mut probes = ProbeTable::default();
    probes.insert(1, GeoPoint::new(52.0, 4.0).unwrap());
    let one = r#"{"type":"traceroute","prb_id":1,"msm_id":5051,"timestamp":1,"result":[{"hop":1,"result":[{"from":"72.14.237.68","rtt":1.0}]},{"hop":2,"result":[{"from":"8.8.8.8","rtt":2.0}]}]}"#;
    let array = format!("  [{one}, {one}, {{\"prb_id\": 99, \"result\": []}}]");
    let parsed = read_traces(Cursor::new(array), TraceFormat::AtlasJson, Some(&probes)).unwrap();
    assert_eq!(parsed.records.len(), 2);
    assert_eq!(parsed.stats.invalid, 1);
    let lines = format!("{one}\n{one}\n");
    let parsed = read_traces(Cursor::new(lines), TraceFormat::AtlasJson, Some(&probes)).unwrap();
    assert_eq!(parsed.records.len(), 2);
    assert_eq!(extract_links(&parsed.records[0]).len(), 1);
}

#[test]
fn latency_table_uses_min_rtt_per_trace() {
    let mut t = trace("t", &[(1, Some(A)), (2, Some(B)), (3, Some("10.1.1.1"))]);
    t.hops[0].rtts = vec![3.0, 1.5, 2.0];
    let mut table = LatencyTable::default();
    table.add_trace(&t);
    table.add_trace(&t);
    let ev = table.evidence_for([&ip(A), &ip("10.1.1.1")]);
    assert_eq!(ev.len(), 1);
    assert_eq!(ev[0].samples.len(), 2);
    assert_eq!(ev[0].samples[0].min_rtt_ms, 1.5);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    const POOL: [&str; 8] = [
        "8.8.8.8", "1.1.1.1", "9.9.9.9", "72.14.237.68", "10.0.0.1", "192.168.0.9", "2001:4860::1", "fe80::1",
    ];

    fn arb_trace() -> impl Strategy<Value = TracerouteRecord> {
        prop::collection::vec((1u32..3, prop::option::weighted(0.8, 0usize..POOL.len())), 1..10).prop_map(
            |steps| {
                let mut idx = 0;
                let hops = steps
                    .into_iter()
                    .map(|(gap, slot)| {
                        idx += gap;
                        Hop {
                            idx,
                            ip: slot.map(|i| ip(POOL[i])),
                            rtts: vec![1.0],
                        }
                    })
                    .collect();
                TracerouteRecord {
                    id: "p".into(),
                    probe: GeoPoint::new(0.0, 0.0).unwrap(),
                    hops,
                }
            },
        )
    }

    proptest! {
        #[test]
        fn table_matches_brute_force_recount(traces in prop::collection::vec(arb_trace(), 0..20)) {
            let traces: Vec<_> = traces.into_iter().filter(|t| !t.has_loop()).collect();
            let mut table = LinkTable::default();
            let mut per_trace_total = 0u64;
            for t in &traces {
                per_trace_total += extract_links(t).len() as u64;
                table.add_trace(t);
            }
            // Independent recount straight from the hop lists.
            let mut oracle: BTreeMap<(IpAddr, IpAddr), u64> = BTreeMap::new();
            for t in &traces {
                for i in 0..t.hops.len().saturating_sub(1) {
                    let (h1, h2) = (&t.hops[i], &t.hops[i + 1]);
                    if h2.idx != h1.idx + 1 { continue; }
                    if let (Some(x), Some(y)) = (h1.ip, h2.ip) {
                        if is_public(x) && is_public(y) && x != y {
                            *oracle.entry((x.min(y), x.max(y))).or_default() += 1;
                        }
                    }
                }
            }
            let got: BTreeMap<(IpAddr, IpAddr), u64> =
                table.links().map(|l| ((l.key.a(), l.key.b()), l.occurrences)).collect();
            prop_assert_eq!(&got, &oracle);
            prop_assert_eq!(table.observed(), per_trace_total);
            for l in table.links() {
                prop_assert!(table.unique_ips().contains(&l.key.a()));
                prop_assert!(table.unique_ips().contains(&l.key.b()));
                prop_assert!(is_public(l.key.a()) && is_public(l.key.b()));
            }
            let union: BTreeSet<IpAddr> = table.links().flat_map(|l| l.key.endpoints()).collect();
            prop_assert_eq!(&union, table.unique_ips());
        }

        #[test]
        fn merging_partial_tables_equals_one_pass(traces in prop::collection::vec(arb_trace(), 0..12), split in 0usize..12) {
            let traces: Vec<_> = traces.into_iter().filter(|t| !t.has_loop()).collect();
            let split = split.min(traces.len());
            let mut whole = LinkTable::default();
            traces.iter().for_each(|t| whole.add_trace(t));
            let (mut left, mut right) = (LinkTable::default(), LinkTable::default());
            traces[..split].iter().for_each(|t| left.add_trace(t));
            traces[split..].iter().for_each(|t| right.add_trace(t));
            left.merge(right);
            prop_assert_eq!(left, whole);
        }
    }
}

use super::*;
use crate::model::{RawCable, RawCableDataset, RawLandingPoint};
use crate::model::haversine_km;

fn p(lat: f64, lon: f64) -> GeoPoint {
    GeoPoint::new(lat, lon).unwrap()
}

fn cluster(at: GeoPoint, score: f64) -> GeoCluster {
    GeoCluster {
        centroid: at,
        country: None,
        score,
        members: Vec::new(),
    }
}

fn dataset(points: &[(&str, GeoPoint)], cables: &[(&str, &[&str])]) -> CableDataset {
    CableDataset::from_raw(RawCableDataset {
        cables: cables
            .iter()
            .map(|(id, lps)| RawCable {
                id: id.to_string(),
                name: id.to_uppercase(),
                owners: vec![],
                rfs: None,
                landing_points: lps.iter().map(|s| s.to_string()).collect(),
            })
            .collect(),
        landing_points: points
            .iter()
            .map(|(id, g)| RawLandingPoint {
                id: id.to_string(),
                lat: g.lat(),
                lon: g.lon(),
                country: "XA".into(),
            })
            .collect(),
    })
    .unwrap()
}

#[test]
fn query_at_landing_point_and_tiny_radius() {
    let lp = p(10.0, 10.0);
    let other = lp.destination(90.0, 5.0);
    let ds = dataset(&[("a", lp), ("b", other)], &[("c", &["a", "b"])]);
    let index = LandingPointIndex::new(&ds);
    let hits = index.radius_query(lp, 1.0);
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].0.id, "a");
    assert_eq!(hits[0].1, 0.0);
    assert!(index.radius_query(lp.destination(0.0, 5.0), 0.001).is_empty());
    let both = index.radius_query(lp, 10.0);
    assert_eq!(both.iter().map(|h| h.0.id.as_str()).collect::<Vec<_>>(), ["a", "b"]);
}

#[test]
fn endpoints_on_landing_points() {
    let (x, y) = (p(24.85, 121.82), p(33.86, -118.40));
    let ds = dataset(&[("x", x), ("y", y)], &[("plcn", &["x", "y"])]);
    let index = LandingPointIndex::new(&ds);
    let got = recursive_search(&index, &[cluster(x, 1.0)], &[cluster(y, 1.0)], &PipelineConfig::default());
    assert_eq!(got.len(), 1);
    assert_eq!(got[0].cable_id, "plcn");
    assert_eq!(got[0].d, [0.0, 0.0]);
    assert_eq!(got[0].radius_km, 500.0);
}

#[test]
fn expands_to_nine_hundred() {
    let (x, y) = (p(0.0, 0.0), p(0.0, 60.0));
    let ds = dataset(&[("x", x), ("y", y)], &[("c", &["x", "y"])]);
    let index = LandingPointIndex::new(&ds);
    // Constructed points land a hair past 900 km in floating point.
    let ea = x.destination(180.0, 900.0 - 1e-6);
    let eb = y.destination(0.0, 900.0 - 1e-6);
    let got = recursive_search(&index, &[cluster(ea, 1.0)], &[cluster(eb, 1.0)], &PipelineConfig::default());
    assert_eq!(got.len(), 1);
    assert_eq!(got[0].radius_km, 900.0);
    assert!((got[0].d[0] - 0.9).abs() < 1e-9);
    assert!((got[0].d[1] - 0.9).abs() < 1e-9);
}

#[test]
fn beyond_max_radius_yields_nothing() {
    let (x, y) = (p(0.0, 0.0), p(0.0, 60.0));
    let ds = dataset(&[("x", x), ("y", y)], &[("c", &["x", "y"])]);
    let index = LandingPointIndex::new(&ds);
    let ea = x.destination(180.0, 1100.0);
    let eb = y.destination(0.0, 1100.0);
    assert!(recursive_search(&index, &[cluster(ea, 1.0)], &[cluster(eb, 1.0)], &PipelineConfig::default()).is_empty());
}

#[test]
fn cable_near_one_end_only_is_not_a_match() {
    let (x, y, z) = (p(0.0, 0.0), p(0.0, 60.0), p(0.0, 2.0));
    let ds = dataset(&[("x", x), ("y", y), ("z", z)], &[("c", &["x", "z"]), ("d", &["x", "y"])]);
    let index = LandingPointIndex::new(&ds);
    let got = recursive_search(&index, &[cluster(x, 1.0)], &[cluster(y, 1.0)], &PipelineConfig::default());
    assert_eq!(got.iter().map(|c| c.cable_id.as_str()).collect::<Vec<_>>(), ["d"]);
}

#[test]
fn combinations_search_independently() {
    // Cluster 0 of endpoint A is 700 km from the landing point, cluster 1
    // sits on it.
    let (x, y) = (p(0.0, 0.0), p(0.0, 60.0));
    let ds = dataset(&[("x", x), ("y", y)], &[("c", &["x", "y"])]);
    let index = LandingPointIndex::new(&ds);
    let far = x.destination(270.0, 700.0);
    let got = recursive_search(
        &index,
        &[cluster(far, 0.6), cluster(x, 0.4)],
        &[cluster(y, 1.0)],
        &PipelineConfig::default(),
    );
    assert_eq!(got.len(), 2);
    assert_eq!(got[0].clusters, [0, 0]);
    assert_eq!(got[0].radius_km, 700.0);
    assert_eq!(got[1].clusters, [1, 0]);
    assert_eq!(got[1].radius_km, 500.0);
    let merged = per_cable_min(&got);
    assert_eq!(merged.len(), 1);
    assert_eq!(merged[0].d, [0.0, 0.0]);
    assert_eq!(merged[0].clusters, [1, 0]);
}

#[test]
fn nearest_landing_point_of_cable_wins() {
    let (x1, x2, y) = (p(0.0, 0.0), p(0.0, 1.0), p(0.0, 60.0));
    let ds = dataset(&[("x1", x1), ("x2", x2), ("y", y)], &[("c", &["x1", "x2", "y"])]);
    let index = LandingPointIndex::new(&ds);
    let got = recursive_search(&index, &[cluster(p(0.0, 0.9), 1.0)], &[cluster(y, 1.0)], &PipelineConfig::default());
    assert_eq!(got[0].landing[0].id, "x2");
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn pts() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-80.0f64..80.0, -179.0f64..179.0), 2..80)
    }

    fn build(raw: &[(f64, f64)], reverse: bool) -> CableDataset {
        let mut points: Vec<(String, GeoPoint)> =
            raw.iter().enumerate().map(|(i, (a, b))| (format!("lp{i:03}"), p(*a, *b))).collect();
        let ids: Vec<String> = points.iter().map(|(id, _)| id.clone()).collect();
        if reverse {
            points.reverse();
        }
        let cables: Vec<(String, Vec<String>)> =
            ids.chunks(2).filter(|c| c.len() == 2).enumerate().map(|(i, c)| (format!("c{i}"), c.to_vec())).collect();
        let lp_refs: Vec<(&str, GeoPoint)> = points.iter().map(|(id, g)| (id.as_str(), *g)).collect();
        let mut kept: Vec<(&str, GeoPoint)> = lp_refs
            .into_iter()
            .filter(|(id, _)| cables.iter().any(|(_, l)| l.iter().any(|x| x == id)))
            .collect();
        kept.dedup_by_key(|x| x.0);
        let cable_refs: Vec<(&str, Vec<&str>)> =
            cables.iter().map(|(id, l)| (id.as_str(), l.iter().map(String::as_str).collect())).collect();
        let cable_slices: Vec<(&str, &[&str])> = cable_refs.iter().map(|(id, l)| (*id, &l[..])).collect();
        dataset(&kept, &cable_slices)
    }

    proptest! {
        #[test]
        fn index_equals_brute_force(raw in pts(), lat in -80.0f64..80.0, lon in -179.0f64..179.0, r in 1.0f64..5000.0) {
            let ds = build(&raw, false);
            let index = LandingPointIndex::new(&ds);
            let c = p(lat, lon);
            let got: Vec<(String, f64)> = index.radius_query(c, r).into_iter().map(|(lp, d)| (lp.id.clone(), d)).collect();
            let mut oracle: Vec<(String, f64)> = ds
                .landing_points()
                .map(|lp| (lp.id.clone(), haversine_km(c, lp.location)))
                .filter(|(_, d)| *d <= r)
                .collect();
            oracle.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            prop_assert_eq!(got, oracle);
        }

        #[test]
        fn insertion_order_is_irrelevant(raw in pts(), a in (-80.0f64..80.0, -179.0f64..179.0), b in (-80.0f64..80.0, -179.0f64..179.0)) {
            let cfg = PipelineConfig::default();
            let fwd = LandingPointIndex::new(&build(&raw, false));
            let rev = LandingPointIndex::new(&build(&raw, true));
            let ca = [cluster(p(a.0, a.1), 1.0)];
            let cb = [cluster(p(b.0, b.1), 1.0)];
            prop_assert_eq!(recursive_search(&fwd, &ca, &cb, &cfg), recursive_search(&rev, &ca, &cb, &cfg));
        }

        #[test]
        fn distance_scores_in_unit_range(raw in pts(), a in (-80.0f64..80.0, -179.0f64..179.0), b in (-80.0f64..80.0, -179.0f64..179.0)) {
            let cfg = PipelineConfig::default();
            let index = LandingPointIndex::new(&build(&raw, false));
            for c in recursive_search(&index, &[cluster(p(a.0, a.1), 1.0)], &[cluster(p(b.0, b.1), 1.0)], &cfg) {
                for e in 0..2 {
                    prop_assert!((0.0..=1.0).contains(&c.d[e]));
                    prop_assert_eq!(c.d[e] == 0.0, c.landing[e].distance_km == 0.0);
                    prop_assert!(c.landing[e].distance_km <= c.radius_km);
                }
            }
        }

        #[test]
        fn larger_radius_finds_a_superset(raw in pts(), a in (-80.0f64..80.0, -179.0f64..179.0), r in 100.0f64..2000.0, extra in 0.0f64..2000.0) {
            let index = LandingPointIndex::new(&build(&raw, false));
            let c = p(a.0, a.1);
            let small: Vec<String> = index.radius_query(c, r).into_iter().map(|x| x.0.id.clone()).collect();
            let large: Vec<String> = index.radius_query(c, r + extra).into_iter().map(|x| x.0.id.clone()).collect();
            prop_assert!(small.iter().all(|s| large.contains(s)));
        }
    }
}

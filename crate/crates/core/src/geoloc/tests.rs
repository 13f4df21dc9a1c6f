use super::*;

fn p(lat: f64, lon: f64) -> GeoPoint {
    GeoPoint::new(lat, lon).unwrap()
}

fn ip() -> IpAddr {
    "142.250.226.86".parse().unwrap()
}

fn obs(source: &str, at: GeoPoint) -> GeoObservation {
    GeoObservation {
        ip: ip(),
        source: source.to_string(),
        location: at,
        city: None,
        country: None,
        continent: None,
    }
}

fn samples(probe: GeoPoint, rtts: &[f64]) -> LatencyEvidence {
    LatencyEvidence {
        ip: ip(),
        samples: rtts.iter().map(|&r| LatencySample { probe, min_rtt_ms: r }).collect(),
    }
}

// Brute-force connected components of the eps-graph, via union-find.
fn components(points: &[GeoPoint], eps: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut x = x;
        while parent[x] != r {
            let next = parent[x];
            parent[x] = r;
            x = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if haversine_km(points[i], points[j]) <= eps {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

#[test]
fn colocated_candidate_is_always_valid() {
    let probe = p(37.4, -122.08);
    let ev = samples(probe, &[0.01, 5.0]);
    let cfg = PipelineConfig::default();
    assert_eq!(sol_validate(&obs("a", probe), Some(&ev), &cfg), SolVerdict::Valid);
}

#[test]
fn far_candidate_with_short_rtt_is_invalid() {
    let probe = p(0.0, 0.0);
    let far = probe.destination(90.0, 3000.0);
    let ev = samples(probe, &[10.0; 100]);
    assert_eq!(sol_validate(&obs("a", far), Some(&ev), &PipelineConfig::default()), SolVerdict::Invalid);
}

#[test]
fn five_percent_boundary() {
    let probe = p(0.0, 0.0);
    let candidate = probe.destination(0.0, 3000.0);
    let cfg = PipelineConfig::default();
    // 10 ms -> 1000 km bound (violates); 100 ms -> 10000 km bound (fine).
    let mixed = |bad: usize| {
        let mut rtts = vec![10.0; bad];
        rtts.extend(std::iter::repeat_n(100.0, 100 - bad));
        samples(probe, &rtts)
    };
    assert_eq!(sol_validate(&obs("a", candidate), Some(&mixed(4)), &cfg), SolVerdict::Valid);
    assert_eq!(sol_validate(&obs("a", candidate), Some(&mixed(5)), &cfg), SolVerdict::Invalid);
    assert_eq!(sol_validate(&obs("a", candidate), None, &cfg), SolVerdict::Valid);
}

#[test]
fn zero_margin_requires_an_actual_violation() {
    let probe = p(0.0, 0.0);
    let near = probe.destination(0.0, 5.0);
    let ev = samples(probe, &[10.0; 10]);
    assert_eq!(sol_check(near, &ev.samples, Some(0.0), 2e8), SolVerdict::Valid);
    let far = probe.destination(0.0, 5000.0);
    assert_eq!(sol_check(far, &ev.samples, Some(0.0), 2e8), SolVerdict::Invalid);
    assert_eq!(sol_check(far, &ev.samples, None, 2e8), SolVerdict::Valid);
}

#[test]
fn six_three_one_split() {
    let cfg = PipelineConfig::default();
    let a = p(37.4, -122.08);
    let b = p(40.7, -74.0);
    let c = p(51.5, -0.12);
    let mut all = Vec::new();
    for i in 0..6 {
        all.push(obs(&format!("a{i}"), a.destination(i as f64 * 60.0, 2.0)));
    }
    for i in 0..3 {
        all.push(obs(&format!("b{i}"), b.destination(i as f64 * 90.0, 3.0)));
    }
    all.push(obs("c0", c));
    let clusters = cluster_observations(&all, &cfg);
    let scores: Vec<f64> = clusters.iter().map(|c| c.score).collect();
    assert_eq!(scores, vec![0.6, 0.3, 0.1]);
    assert!(haversine_km(clusters[0].centroid, a) < 2.5);
    assert_eq!(clusters[0].members.len(), 6);
}

#[test]
fn single_observation() {
    let clusters = cluster_observations(&[obs("x", p(1.0, 2.0))], &PipelineConfig::default());
    assert_eq!(clusters.len(), 1);
    assert_eq!(clusters[0].score, 1.0);
    assert!(cluster_observations(&[], &PipelineConfig::default()).is_empty());
}

#[test]
fn eps_boundary_against_union_find() {
    let cfg = PipelineConfig::default();
    let base = p(10.0, 10.0);
    for (sep, expected) in [(25.0, 2), (15.0, 1)] {
        let pts = [base, base.destination(45.0, sep)];
        assert_eq!(components(&pts, 20.0).len(), expected);
        let all: Vec<_> = pts.iter().enumerate().map(|(i, &q)| obs(&format!("s{i}"), q)).collect();
        let clusters = cluster_observations(&all, &cfg);
        assert_eq!(clusters.len(), expected);
        let want = 1.0 / expected as f64;
        assert!(clusters.iter().all(|c| c.score == want));
    }
}

#[test]
fn antimeridian_centroid() {
    let cfg = PipelineConfig::default();
    let all = vec![obs("a", p(0.0, 179.95)), obs("b", p(0.0, -179.95))];
    let clusters = cluster_observations(&all, &cfg);
    assert_eq!(clusters.len(), 1);
    assert!(clusters[0].centroid.lon().abs() > 179.9);
}

#[test]
fn modal_country() {
    let mut all = vec![obs("a", p(25.0, 121.5)), obs("b", p(25.01, 121.5)), obs("c", p(25.02, 121.5))];
    all[0].country = Some("TW".into());
    all[1].country = Some("tw".into());
    all[2].country = Some("CN".into());
    let clusters = cluster_observations(&all, &PipelineConfig::default());
    assert_eq!(clusters[0].country.as_ref().unwrap().as_str(), "TW");
}

#[test]
fn geolocate_ip_drops_invalid_before_clustering() {
    let cfg = PipelineConfig::default();
    let probe = p(25.03, 121.56);
    let ev = samples(probe, &[2.0; 20]);
    let mut all: Vec<_> = (0..2).map(|i| obs(&format!("tw{i}"), probe.destination(10.0, 3.0 + i as f64))).collect();
    all.extend((0..8).map(|i| obs(&format!("us{i}"), p(37.4, -122.08 + i as f64 * 0.01))));
    let geo = geolocate_ip(ip(), &all, Some(&ev), Some(0.05), &cfg);
    assert_eq!((geo.valid, geo.invalid), (2, 8));
    assert_eq!(geo.clusters.len(), 1);
    assert_eq!(geo.max_score(), Some(1.0));
    let baseline = geolocate_ip(ip(), &all, Some(&ev), None, &cfg);
    assert_eq!(baseline.max_score(), Some(0.8));
}

#[test]
fn duplicates_per_source_are_dropped() {
    let (groups, dups) = group_observations(vec![obs("a", p(0.0, 0.0)), obs("a", p(5.0, 5.0)), obs("b", p(0.0, 0.0))]);
    assert_eq!(dups, 1);
    assert_eq!(groups[&ip()].len(), 2);
    assert_eq!(groups[&ip()][0].location, p(0.0, 0.0));
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn cloud() -> impl Strategy<Value = Vec<GeoPoint>> {
        // Points scattered within a few tens of km so eps matters.
        (
            -60.0f64..60.0,
            -170.0f64..170.0,
            prop::collection::vec((0.0f64..360.0, 0.0f64..80.0), 1..60),
        )
            .prop_map(|(lat, lon, offs)| {
                let c = p(lat, lon);
                offs.into_iter().map(|(b, d)| c.destination(b, d)).collect()
            })
    }

    fn as_obs(points: &[GeoPoint]) -> Vec<GeoObservation> {
        points.iter().enumerate().map(|(i, &q)| obs(&format!("s{i:03}"), q)).collect()
    }

    fn partition(clusters: &[GeoCluster]) -> BTreeSet<BTreeSet<String>> {
        clusters.iter().map(|c| c.members.iter().map(|m| m.source.clone()).collect()).collect()
    }

    proptest! {
        #[test]
        fn equals_connected_components(points in cloud()) {
            let cfg = PipelineConfig::default();
            let clusters = cluster_observations(&as_obs(&points), &cfg);
            let oracle: BTreeSet<BTreeSet<String>> = components(&points, 20.0)
                .into_iter()
                .map(|g| g.into_iter().map(|i| format!("s{i:03}")).collect())
                .collect();
            prop_assert_eq!(partition(&clusters), oracle);
            let total: f64 = clusters.iter().map(|c| c.score).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }

        #[test]
        fn input_order_does_not_matter(points in cloud(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let cfg = PipelineConfig::default();
            let obs = as_obs(&points);
            let mut shuffled = obs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(cluster_observations(&obs, &cfg), cluster_observations(&shuffled, &cfg));
        }

        #[test]
        fn removing_a_source_never_grows_a_cluster(points in cloud(), drop in any::<prop::sample::Index>()) {
            let cfg = PipelineConfig::default();
            let obs = as_obs(&points);
            let removed = drop.index(obs.len());
            let rest: Vec<_> = obs.iter().enumerate().filter(|(i, _)| *i != removed).map(|(_, o)| o.clone()).collect();
            let before = partition(&cluster_observations(&obs, &cfg));
            for cluster in partition(&cluster_observations(&rest, &cfg)) {
                let sup = before.iter().find(|b| cluster.is_subset(b));
                prop_assert!(sup.is_some());
            }
        }
    }
}

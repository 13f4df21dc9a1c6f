//! Seeded synthetic worlds with known ground truth.
//!
//! A world is a set of cables between well separated landing sites, with
//! optional corridors of parallel cables whose landing points sit a few
//! kilometres apart. Every link runs over one known cable. Geolocation
//! sources report the true endpoint location with bounded noise, except a
//! poisoned group of sources that places some addresses thousands of
//! kilometres away and is caught by the speed-of-light check.

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::net::{IpAddr, Ipv4Addr};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analyze::WindowCounts;
use crate::classify::{Continent, CountryGeoData};
use crate::geoloc::{GeoObservation, GroundTruth};
use crate::model::{
    haversine_km, Asn, CountryCode, GeoPoint, Hop, LinkKey, RawCable, RawCableDataset, RawLandingPoint,
    TracerouteRecord,
};
use crate::ownermap::{AsRecord, AsnRecord};
use crate::pipeline::{io::to_json, io::to_jsonl, FailureSpec, OperatorTruth};

const OWNER_WORDS: [&str; 20] = [
    "Aurora", "Boreal", "Coral", "Delphin", "Equinox", "Fathom", "Gulfstream", "Halcyon", "Isobar", "Jetsam",
    "Kelp", "Lagoon", "Meridian", "Nautica", "Orca", "Pelagic", "Quay", "Riptide", "Skerry", "Tidewater",
];

/// Continent pairs with no land path between them.
const OCEAN_PAIRS: [(Continent, Continent); 6] = [
    (Continent::NA, Continent::EU),
    (Continent::SA, Continent::AF),
    (Continent::OC, Continent::AS),
    (Continent::NA, Continent::AS),
    (Continent::SA, Continent::EU),
    (Continent::OC, Continent::AF),
];

const HONEST_SOURCES: [&str; 4] = ["geo-a", "geo-b", "geo-c", "geo-d"];
const POISON_SOURCES: [&str; 3] = ["geo-x", "geo-y", "geo-z"];
const OFF_SOURCE: &str = "geo-e";
const ASN_SOURCES: [(&str, f64); 4] = [("caida", 0.6), ("cymru", 1.0), ("routinator", 0.9), ("radb", 0.5)];

/// Minimum separation between landing sites.
const SITE_SEPARATION_KM: f64 = 1400.0;
/// How far poisoned sources place an address from its true location.
const POISON_OFFSET_KM: f64 = 2500.0;
/// Distance of a stray link's endpoints from their landing points.
const STRAY_OFFSET_KM: f64 = 600.0;
const FIBER_KM_PER_MS: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub cables: usize,
    /// Regular links, spread round-robin over the cables.
    pub links: usize,
    pub corridors: usize,
    /// Parallel cables per corridor.
    pub corridor_width: usize,
    /// Largest distance of an honest observation from the true location.
    pub perturb_km: f64,
    /// Largest distance of an endpoint from its landing point.
    pub endpoint_spread_km: f64,
    /// Land a domestic cable on the same landing point as an
    /// intercontinental one; that landing point becomes the failed entity.
    pub shared_landing: bool,
    /// Low-scoring links on the shared domestic cable that stay up during
    /// the outage.
    pub strays: usize,
}

impl SynthSpec {
    /// 30 cables, two corridors of three, 60 landing points, 300 links.
    pub fn standard() -> Self {
        SynthSpec {
            seed: 7,
            cables: 30,
            links: 300,
            corridors: 2,
            corridor_width: 3,
            perturb_km: 10.0,
            endpoint_spread_km: 5.0,
            shared_landing: false,
            strays: 0,
        }
    }

    /// Standard world with a shared landing point and planted survivors.
    pub fn outage() -> Self {
        SynthSpec {
            seed: 11,
            shared_landing: true,
            strays: 2,
            ..Self::standard()
        }
    }

    /// 200-link world used for the bundled command-line fixture.
    pub fn fixture() -> Self {
        SynthSpec {
            seed: 2024,
            cables: 20,
            links: 198,
            corridors: 1,
            corridor_width: 3,
            shared_landing: true,
            strays: 2,
            ..Self::standard()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthLink {
    #[serde(flatten)]
    pub link: LinkKey,
    pub cable_id: String,
    /// Both endpoints belong to the true cable's owner.
    pub owner_disambiguated: bool,
    pub stray: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthFailure {
    pub failed_entity: String,
    pub failed_cables: BTreeSet<String>,
    pub before: Vec<TracerouteRecord>,
    pub during: Vec<TracerouteRecord>,
    pub after: Vec<TracerouteRecord>,
    /// Affected links per window when every link maps to its true cable.
    pub expected: WindowCounts,
    pub strays: Vec<LinkKey>,
    pub expected_confirmed: Vec<LinkKey>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthWorld {
    pub spec: SynthSpec,
    pub cables: RawCableDataset,
    pub countries: BTreeMap<CountryCode, CountryGeoData>,
    pub traces: Vec<TracerouteRecord>,
    pub observations: Vec<GeoObservation>,
    pub asn_records: Vec<AsnRecord>,
    pub as_info: Vec<AsRecord>,
    pub links: Vec<SynthLink>,
    pub ground_truth: Vec<GroundTruth>,
    pub failure: Option<SynthFailure>,
    pub operator: OperatorTruth,
    /// Entries of `operator.cables` that no mapping can produce.
    pub operator_missing: Vec<String>,
}

#[derive(Clone, Copy, PartialEq)]
enum Class {
    Ocean,
    Domestic,
}

struct CablePlan {
    id: String,
    name: String,
    owner: usize,
    lps: [usize; 2],
    sites: [usize; 2],
}

struct Lp {
    id: String,
    at: GeoPoint,
    country: usize,
}

fn country_code(n: usize) -> CountryCode {
    assert!(n < 78, "synthetic country space exhausted");
    let code = [b'X' + (n / 26) as u8, b'A' + (n % 26) as u8];
    CountryCode::new(std::str::from_utf8(&code).expect("ascii")).expect("valid code")
}

fn random_point(rng: &mut ChaCha8Rng) -> GeoPoint {
    let (lo, hi) = ((-55f64).to_radians().sin(), 60f64.to_radians().sin());
    let lat = rng.random_range(lo..hi).asin().to_degrees();
    let lon = rng.random_range(-180.0..180.0);
    GeoPoint::new(lat, lon).expect("in range")
}

fn jitter(rng: &mut ChaCha8Rng, at: GeoPoint, max_km: f64) -> GeoPoint {
    // Uniform over the disc.
    let r = max_km * rng.random::<f64>().sqrt();
    at.destination(rng.random_range(0.0..360.0), r)
}

fn bearing(from: GeoPoint, to: GeoPoint) -> f64 {
    let (p1, p2) = (from.lat().to_radians(), to.lat().to_radians());
    let dl = (to.lon() - from.lon()).to_radians();
    let y = dl.sin() * p2.cos();
    let x = p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos();
    y.atan2(x).to_degrees().rem_euclid(360.0)
}

fn rtt(rng: &mut ChaCha8Rng, probe: GeoPoint, target: GeoPoint) -> Vec<f64> {
    let base = 2.0 * haversine_km(probe, target) / FIBER_KM_PER_MS * 1.2 + 0.4;
    (0..3).map(|_| base + rng.random_range(0.0..0.3)).collect()
}

fn place_sites(rng: &mut ChaCha8Rng, n: usize) -> Vec<GeoPoint> {
    let mut sites: Vec<GeoPoint> = Vec::with_capacity(n);
    let mut attempts = 0;
    while sites.len() < n {
        attempts += 1;
        assert!(attempts < 1_000_000, "cannot place {n} separated sites");
        let p = random_point(rng);
        if sites.iter().all(|s| haversine_km(*s, p) >= SITE_SEPARATION_KM) {
            sites.push(p);
        }
    }
    sites
}

struct Builder {
    rng: ChaCha8Rng,
    spec: SynthSpec,
    continents: Vec<Continent>,
    lps: Vec<Lp>,
    cables: Vec<CablePlan>,
    site_country: Vec<usize>,
    traces: Vec<TracerouteRecord>,
    observations: Vec<GeoObservation>,
    asn_records: Vec<AsnRecord>,
    links: Vec<SynthLink>,
    ground_truth: Vec<GroundTruth>,
    ip_count: u32,
    /// Link traces by link, forward and reverse.
    link_traces: BTreeMap<LinkKey, Vec<usize>>,
}

impl Builder {
    fn new_country(&mut self, continent: Continent) -> usize {
        self.continents.push(continent);
        self.continents.len() - 1
    }

    fn next_ip(&mut self, side: u8) -> IpAddr {
        self.ip_count += 1;
        let base = u32::from(Ipv4Addr::new(if side == 0 { 41 } else { 81 }, 0, 0, 0));
        IpAddr::V4(Ipv4Addr::from(base + self.ip_count))
    }

    fn owner_asn(owner: usize) -> Asn {
        Asn(64600 + owner as u32)
    }

    fn access_asn(site: usize) -> Asn {
        Asn(65200 + site as u32)
    }

    fn observe(&mut self, ip: IpAddr, truth: GeoPoint, country: usize, poisoned: bool, off: bool) {
        let code = country_code(country).to_string();
        let continent = format!("{:?}", self.continents[country]);
        let honest = if poisoned { &HONEST_SOURCES[..2] } else { &HONEST_SOURCES[..] };
        for source in honest {
            let at = jitter(&mut self.rng, truth, self.spec.perturb_km);
            self.push_obs(ip, source, at, &code, &continent);
        }
        if poisoned {
            let far = truth.destination(self.rng.random_range(0.0..360.0), POISON_OFFSET_KM);
            let wrong = self.rng.random_range(0..self.continents.len());
            let wrong_code = country_code(wrong).to_string();
            let wrong_cont = format!("{:?}", self.continents[wrong]);
            for source in POISON_SOURCES {
                let at = jitter(&mut self.rng, far, 3.0);
                self.push_obs(ip, source, at, &wrong_code, &wrong_cont);
            }
        }
        if off {
            let km = self.rng.random_range(45.0..60.0);
            let at = truth.destination(self.rng.random_range(0.0..360.0), km);
            self.push_obs(ip, OFF_SOURCE, at, &code, &continent);
        }
        self.ground_truth.push(GroundTruth { ip, location: truth });
    }

    fn push_obs(&mut self, ip: IpAddr, source: &str, at: GeoPoint, country: &str, continent: &str) {
        self.observations.push(GeoObservation {
            ip,
            source: source.to_string(),
            location: at,
            city: None,
            country: Some(country.to_string()),
            continent: Some(continent.to_string()),
        });
    }

    fn resolve_records(&mut self, ip: IpAddr, asn: Asn, decoys: &[Asn]) {
        for (source, coverage) in ASN_SOURCES {
            if source != "cymru" && self.rng.random::<f64>() >= coverage {
                continue;
            }
            let reported = if source == "radb" && self.rng.random::<f64>() < 0.3 {
                decoys[self.rng.random_range(0..decoys.len())]
            } else {
                asn
            };
            self.asn_records.push(AsnRecord {
                ip,
                source: source.to_string(),
                asn: reported,
            });
        }
    }

    fn trace(&mut self, id: String, near: GeoPoint, hops: [(IpAddr, GeoPoint); 2]) {
        let probe = near.destination(self.rng.random_range(0.0..360.0), self.rng.random_range(5.0..30.0));
        let gateway = Hop {
            idx: 1,
            ip: Some(IpAddr::V4(Ipv4Addr::new(10, 0, 0, 1))),
            rtts: (0..3).map(|_| self.rng.random_range(0.3..0.8)).collect(),
        };
        let mut out = vec![gateway];
        for (i, (ip, at)) in hops.into_iter().enumerate() {
            out.push(Hop {
                idx: i as u32 + 2,
                ip: Some(ip),
                rtts: rtt(&mut self.rng, probe, at),
            });
        }
        let key = LinkKey::new(hops[0].0, hops[1].0).expect("distinct");
        self.link_traces.entry(key).or_default().push(self.traces.len());
        self.traces.push(TracerouteRecord { id, probe, hops: out });
    }

    fn link(&mut self, n: usize, cable: usize, ends: [GeoPoint; 2], owner: bool, stray: bool, decoys: &[Asn]) {
        let c = &self.cables[cable];
        let (sites, owner_idx, id) = (c.sites, c.owner, c.id.clone());
        let countries = [self.lps[c.lps[0]].country, self.lps[c.lps[1]].country];
        let ips = [self.next_ip(0), self.next_ip(1)];
        let ip_index = 2 * n;
        for side in 0..2 {
            let k = ip_index + side;
            let poisoned = !stray && k.is_multiple_of(6);
            let off = !stray && !poisoned && k % 5 == 1;
            if stray {
                // Two equally supported clusters about 80 km apart.
                let second = ends[side].destination(self.rng.random_range(0.0..360.0), 80.0);
                let code = country_code(countries[side]).to_string();
                let cont = format!("{:?}", self.continents[countries[side]]);
                for (i, source) in HONEST_SOURCES.iter().enumerate() {
                    let center = if i < 2 { ends[side] } else { second };
                    let at = jitter(&mut self.rng, center, 3.0);
                    self.push_obs(ips[side], source, at, &code, &cont);
                }
                self.ground_truth.push(GroundTruth {
                    ip: ips[side],
                    location: ends[side],
                });
            } else {
                self.observe(ips[side], ends[side], countries[side], poisoned, off);
            }
            let asn = if owner { Self::owner_asn(owner_idx) } else { Self::access_asn(sites[side]) };
            self.resolve_records(ips[side], asn, decoys);
        }
        self.trace(format!("syn-{n:04}-f"), ends[0], [(ips[0], ends[0]), (ips[1], ends[1])]);
        self.trace(format!("syn-{n:04}-r"), ends[1], [(ips[1], ends[1]), (ips[0], ends[0])]);
        self.links.push(SynthLink {
            link: LinkKey::new(ips[0], ips[1]).expect("distinct"),
            cable_id: id,
            owner_disambiguated: owner,
            stray,
        });
    }
}

impl SynthWorld {
    pub fn generate(spec: &SynthSpec) -> SynthWorld {
        let corridor_cables = spec.corridors * spec.corridor_width;
        assert!(spec.cables > corridor_cables + 4, "too few cables for the layout");
        let n_owners = spec.cables.div_ceil(2).max(corridor_cables);
        assert!(n_owners <= OWNER_WORDS.len(), "too many owners");
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

        let classes: Vec<Class> = (0..spec.cables)
            .map(|i| if i >= corridor_cables && i % 4 == 3 { Class::Domestic } else { Class::Ocean })
            .collect();
        // The shared landing point joins the first free ocean cable with the
        // first domestic one.
        let shared = spec.shared_landing.then(|| {
            let ocean = (corridor_cables..spec.cables).find(|i| classes[*i] == Class::Ocean).expect("ocean cable");
            let domestic = (corridor_cables..spec.cables)
                .find(|i| classes[*i] == Class::Domestic)
                .expect("domestic cable");
            (ocean, domestic)
        });
        let n_sites = 2 * spec.corridors + 2 * (spec.cables - corridor_cables) - usize::from(shared.is_some());
        let sites = place_sites(&mut rng, n_sites);

        let mut b = Builder {
            rng,
            spec: spec.clone(),
            continents: vec![],
            lps: vec![],
            cables: vec![],
            site_country: vec![usize::MAX; n_sites],
            traces: vec![],
            observations: vec![],
            asn_records: vec![],
            links: vec![],
            ground_truth: vec![],
            ip_count: 0,
            link_traces: BTreeMap::new(),
        };

        let mut next_site = 0;
        let mut take_site = || {
            next_site += 1;
            next_site - 1
        };
        let mut shared_lp: Option<(usize, usize)> = None;
        let mut corridor_sites = vec![];
        for k in 0..spec.corridors {
            let (x, y) = OCEAN_PAIRS[k % OCEAN_PAIRS.len()];
            let s = [take_site(), take_site()];
            b.site_country[s[0]] = b.new_country(x);
            b.site_country[s[1]] = b.new_country(y);
            corridor_sites.push(s);
        }
        let mut order: Vec<usize> = (0..spec.cables).collect();
        if let Some((ocean, domestic)) = shared {
            // Place the ocean cable before the domestic one that reuses its site.
            order.retain(|i| *i != domestic);
            let pos = order.iter().position(|i| *i == ocean).expect("present");
            order.insert(pos + 1, domestic);
        }
        let mut plans: BTreeMap<usize, CablePlan> = BTreeMap::new();
        for i in order {
            let id = format!("cable-{i:02}");
            let name = format!("{} {}", OWNER_WORDS[i % OWNER_WORDS.len()], ["Express", "Link", "Gateway", "Loop"][i % 4]);
            let owner = i % n_owners;
            let (site_pair, lps) = if i < corridor_cables {
                let s = corridor_sites[i / spec.corridor_width];
                let mut lps = [0; 2];
                for side in 0..2 {
                    let at = sites[s[side]].destination(b.rng.random_range(0.0..360.0), b.rng.random_range(2.0..12.0));
                    lps[side] = b.lps.len();
                    b.lps.push(Lp {
                        id: format!("lp-{:02}", b.lps.len()),
                        at,
                        country: b.site_country[s[side]],
                    });
                }
                (s, lps)
            } else {
                let reuse = match shared {
                    Some((_, d)) if d == i => shared_lp,
                    _ => None,
                };
                let s = match reuse {
                    Some((site, _)) => [site, take_site()],
                    None => [take_site(), take_site()],
                };
                match classes[i] {
                    Class::Ocean => {
                        let (x, y) = OCEAN_PAIRS[i % OCEAN_PAIRS.len()];
                        b.site_country[s[0]] = b.new_country(x);
                        b.site_country[s[1]] = b.new_country(y);
                    }
                    Class::Domestic => {
                        let c = match reuse {
                            Some(_) => b.site_country[s[0]],
                            None => b.new_country(OCEAN_PAIRS[i % OCEAN_PAIRS.len()].0),
                        };
                        b.site_country[s[0]] = c;
                        b.site_country[s[1]] = c;
                    }
                }
                let mut lps = [0; 2];
                for side in 0..2 {
                    if side == 0 {
                        if let Some((_, lp)) = reuse {
                            lps[0] = lp;
                            continue;
                        }
                    }
                    lps[side] = b.lps.len();
                    b.lps.push(Lp {
                        id: format!("lp-{:02}", b.lps.len()),
                        at: sites[s[side]],
                        country: b.site_country[s[side]],
                    });
                }
                if matches!(shared, Some((o, _)) if o == i) {
                    shared_lp = Some((s[0], lps[0]));
                }
                (s, lps)
            };
            plans.insert(
                i,
                CablePlan {
                    id,
                    name,
                    owner,
                    lps,
                    sites: site_pair,
                },
            );
        }
        b.cables = plans.into_values().collect();

        let decoys: Vec<Asn> = (0..n_sites).map(Builder::access_asn).collect();
        for n in 0..spec.links {
            let cable = n % spec.cables;
            let owner = (n / spec.cables).is_multiple_of(2);
            let lps = b.cables[cable].lps;
            let ends = [0, 1].map(|side| {
                let at = b.lps[lps[side]].at;
                let spread = spec.endpoint_spread_km;
                jitter(&mut b.rng, at, spread)
            });
            b.link(n, cable, ends, owner, false, &decoys);
        }
        let mut strays = vec![];
        if let Some((_, domestic)) = shared {
            let lps = b.cables[domestic].lps;
            let (pa, pb) = (b.lps[lps[0]].at, b.lps[lps[1]].at);
            for k in 0..spec.strays {
                // Beyond each landing point, facing away from the other end.
                let spin = b.rng.random_range(-30.0..30.0);
                let ends = [
                    pa.destination(bearing(pb, pa) + spin, STRAY_OFFSET_KM),
                    pb.destination(bearing(pa, pb) + spin, STRAY_OFFSET_KM),
                ];
                b.link(spec.links + k, domestic, ends, false, true, &decoys);
                strays.push(b.links.last().expect("pushed").link);
            }
        }

        let failure = shared.map(|(ocean, domestic)| {
            let failed: BTreeSet<String> = [ocean, domestic].iter().map(|i| b.cables[*i].id.clone()).collect();
            let affected: Vec<&SynthLink> = b.links.iter().filter(|l| failed.contains(&l.cable_id)).collect();
            let down: BTreeSet<LinkKey> = affected.iter().filter(|l| !l.stray).map(|l| l.link).collect();
            // Two ocean-cable links are also missing after the repair.
            let late: BTreeSet<LinkKey> = affected
                .iter()
                .filter(|l| !l.stray && l.cable_id == b.cables[ocean].id)
                .take(2)
                .map(|l| l.link)
                .collect();
            let window = |skip: &BTreeSet<LinkKey>| -> Vec<TracerouteRecord> {
                let mut idx: Vec<usize> = b
                    .link_traces
                    .iter()
                    .filter(|(k, _)| !skip.contains(k))
                    .flat_map(|(_, v)| v.iter().copied())
                    .collect();
                idx.sort();
                idx.into_iter().map(|i| b.traces[i].clone()).collect()
            };
            let expected_confirmed: Vec<LinkKey> = affected
                .iter()
                .filter(|l| !l.stray && l.cable_id == b.cables[domestic].id && !late.contains(&l.link))
                .map(|l| l.link)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            SynthFailure {
                failed_entity: b.lps[b.cables[ocean].lps[0]].id.clone(),
                failed_cables: failed,
                before: window(&BTreeSet::new()),
                during: window(&down),
                after: window(&late),
                expected: WindowCounts {
                    before: affected.len(),
                    during: strays.len(),
                    after: Some(affected.len() - late.len()),
                },
                strays: strays.clone(),
                expected_confirmed,
            }
        });

        let cables = RawCableDataset {
            cables: b
                .cables
                .iter()
                .map(|c| RawCable {
                    id: c.id.clone(),
                    name: c.name.clone(),
                    owners: vec![format!("{} Subsea", OWNER_WORDS[c.owner])],
                    rfs: Some(2000 + (c.lps[0] % 20) as i32),
                    landing_points: c.lps.iter().map(|i| b.lps[*i].id.clone()).collect(),
                })
                .collect(),
            landing_points: b
                .lps
                .iter()
                .map(|l| RawLandingPoint {
                    id: l.id.clone(),
                    lat: l.at.lat(),
                    lon: l.at.lon(),
                    country: country_code(l.country).to_string(),
                })
                .collect(),
        };
        let countries = b
            .continents
            .iter()
            .enumerate()
            .map(|(i, c)| {
                (
                    country_code(i),
                    CountryGeoData {
                        continent: *c,
                        neighbors: BTreeSet::new(),
                    },
                )
            })
            .collect();

        let mut as_info = vec![];
        for (o, word) in OWNER_WORDS.iter().copied().enumerate().take(n_owners) {
            let first = b.cables.iter().find(|c| c.owner == o).expect("every owner has a cable");
            let customers = if o == 0 { BTreeSet::from([Asn(64700)]) } else { BTreeSet::new() };
            as_info.push(AsRecord {
                asn: Builder::owner_asn(o),
                org_name: format!("{word} Subsea Ltd"),
                as_name: format!("{}SUBSEA-AS", word.to_uppercase()),
                rank: 10 + 9 * o as u32,
                country: Some(country_code(b.lps[first.lps[0]].country)),
                customers,
            });
            as_info.push(AsRecord {
                asn: Asn(65100 + o as u32),
                org_name: format!("{word} Foods Inc"),
                as_name: format!("{}-FOODS", word.to_uppercase()),
                rank: 3000 + o as u32,
                country: None,
                customers: BTreeSet::new(),
            });
        }
        as_info.push(AsRecord {
            asn: Asn(64700),
            org_name: format!("{} Subsea Pacific", OWNER_WORDS[0]),
            as_name: "SUBSEA-PACIFIC".into(),
            rank: 900,
            country: None,
            customers: BTreeSet::new(),
        });
        for (s, _) in sites.iter().enumerate() {
            as_info.push(AsRecord {
                asn: Builder::access_asn(s),
                org_name: format!("Metro Access {s}"),
                as_name: format!("METRO-ACCESS-{s}"),
                rank: 500 + s as u32,
                country: Some(country_code(b.site_country[s])),
                customers: BTreeSet::new(),
            });
        }
        as_info.sort_by_key(|r| r.asn);

        let owner_name = format!("{} Subsea", OWNER_WORDS[0]);
        let phantom = "Phantom Express".to_string();
        let mut truth_cables: Vec<String> = b.cables.iter().filter(|c| c.owner == 0).map(|c| c.name.clone()).collect();
        truth_cables.push(phantom.clone());

        SynthWorld {
            spec: spec.clone(),
            cables,
            countries,
            traces: b.traces,
            observations: b.observations,
            asn_records: b.asn_records,
            as_info,
            links: b.links,
            ground_truth: b.ground_truth,
            failure,
            operator: OperatorTruth {
                operator: owner_name,
                cables: truth_cables,
            },
            operator_missing: vec![phantom],
        }
    }

    /// Write the world as pipeline inputs. Outage windows go under
    /// `windows/`, referenced from `failure.json`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let w = |name: &str, bytes: Vec<u8>| std::fs::write(dir.join(name), bytes);
        w("traces.jsonl", to_jsonl(&self.traces))?;
        w("geo_observations.jsonl", to_jsonl(&self.observations))?;
        w("asn_records.jsonl", to_jsonl(&self.asn_records))?;
        w("as_info.jsonl", to_jsonl(&self.as_info))?;
        w("cables.json", to_json(&self.cables))?;
        w("country_geo.json", to_json(&self.countries))?;
        w("ground_truth.jsonl", to_jsonl(&self.ground_truth))?;
        w("truth_links.jsonl", to_jsonl(&self.links))?;
        w("operators.json", to_json(&vec![self.operator.clone()]))?;
        if let Some(f) = &self.failure {
            let windows = dir.join("windows");
            std::fs::create_dir_all(&windows)?;
            std::fs::write(windows.join("before.jsonl"), to_jsonl(&f.before))?;
            std::fs::write(windows.join("during.jsonl"), to_jsonl(&f.during))?;
            std::fs::write(windows.join("after.jsonl"), to_jsonl(&f.after))?;
            let spec = FailureSpec::new(
                &f.failed_entity,
                vec!["windows/before.jsonl".into()],
                vec!["windows/during.jsonl".into()],
                Some(vec!["windows/after.jsonl".into()]),
            );
            w("failure.json", to_json(&spec))?;
        }
        Ok(())
    }
}

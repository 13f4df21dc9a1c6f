//! Ball tree over points on the sphere.
//!
//! Points are embedded as unit vectors. Chord length is a monotone function
//! of great-circle distance, so Euclidean bounds on the embedding prune
//! exactly; final membership is decided with the haversine distance itself
//! so results match a linear scan.

use crate::model::{haversine_km, GeoPoint, EARTH_RADIUS_KM};

const LEAF_SIZE: usize = 16;
const PRUNE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Entry {
    vector: [f64; 3],
    point: GeoPoint,
    key: usize,
}

#[derive(Debug, Clone)]
struct Node {
    center: [f64; 3],
    radius: f64,
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Default)]
pub struct BallTree {
    entries: Vec<Entry>,
    nodes: Vec<Node>,
}

fn chord(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Chord length subtending a great-circle distance.
fn chord_for_km(km: f64) -> f64 {
    let angle = (km / EARTH_RADIUS_KM).min(std::f64::consts::PI);
    2.0 * (angle / 2.0).sin()
}

impl BallTree {
    /// Build from `(point, key)` pairs. Keys are returned by queries and
    /// break distance ties, so callers should assign them in a canonical
    /// order.
    pub fn new(points: impl IntoIterator<Item = (GeoPoint, usize)>) -> Self {
        let entries: Vec<Entry> = points
            .into_iter()
            .map(|(point, key)| Entry {
                vector: point.to_unit_vector(),
                point,
                key,
            })
            .collect();
        let mut tree = BallTree {
            entries,
            nodes: Vec::new(),
        };
        if !tree.entries.is_empty() {
            tree.build(0, tree.entries.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let slice = &mut self.entries[start..end];
        let n = slice.len() as f64;
        let mut center = [0.0; 3];
        for e in slice.iter() {
            for k in 0..3 {
                center[k] += e.vector[k] / n;
            }
        }
        let radius = slice.iter().map(|e| chord(&center, &e.vector)).fold(0.0, f64::max);
        let id = self.nodes.len();
        self.nodes.push(Node {
            center,
            radius,
            start,
            end,
            children: None,
        });
        if end - start > LEAF_SIZE {
            let slice = &mut self.entries[start..end];
            let dim = (0..3)
                .max_by(|&a, &b| {
                    let spread = |d: usize| {
                        let (lo, hi) = slice
                            .iter()
                            .fold((f64::MAX, f64::MIN), |(lo, hi), e| (lo.min(e.vector[d]), hi.max(e.vector[d])));
                        hi - lo
                    };
                    spread(a).total_cmp(&spread(b))
                })
                .unwrap_or(0);
            slice.sort_by(|x, y| x.vector[dim].total_cmp(&y.vector[dim]).then(x.key.cmp(&y.key)));
            let mid = start + (end - start) / 2;
            let left = self.build(start, mid);
            let right = self.build(mid, end);
            self.nodes[id].children = Some((left, right));
        }
        id
    }

    /// Keys within `radius_km` of `center` with their distances, sorted by
    /// (distance, key).
    pub fn within(&self, center: GeoPoint, radius_km: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        if self.nodes.is_empty() || !(radius_km >= 0.0) {
            return out;
        }
        let q = center.to_unit_vector();
        let bound = chord_for_km(radius_km) + PRUNE_SLACK;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if chord(&q, &node.center) - node.radius > bound {
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    stack.push(l);
                    stack.push(r);
                }
                None => {
                    for e in &self.entries[node.start..node.end] {
                        let d = haversine_km(center, e.point);
                        if d <= radius_km {
                            out.push((e.key, d));
                        }
                    }
                }
            }
        }
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }

    /// Closest key to `center` (lowest key on ties).
    pub fn nearest(&self, center: GeoPoint) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let q = center.to_unit_vector();
        let mut best: Option<(usize, f64)> = None;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let lower = chord(&q, &node.center) - node.radius;
            if let Some((_, best_km)) = best {
                if lower > chord_for_km(best_km) + PRUNE_SLACK {
                    continue;
                }
            }
            match node.children {
                Some((l, r)) => {
                    // Visit the nearer child first.
                    let dl = chord(&q, &self.nodes[l].center);
                    let dr = chord(&q, &self.nodes[r].center);
                    if dl <= dr {
                        stack.push(r);
                        stack.push(l);
                    } else {
                        stack.push(l);
                        stack.push(r);
                    }
                }
                None => {
                    for e in &self.entries[node.start..node.end] {
                        let d = haversine_km(center, e.point);
                        let better = match best {
                            None => true,
                            Some((k, b)) => d < b || (d == b && e.key < k),
                        };
                        if better {
                            best = Some((e.key, d));
                        }
                    }
                }
            }
        }
        best
    }
}

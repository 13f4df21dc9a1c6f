//! Density-based clustering over an arbitrary distance function.

/// Cluster assignment for each input point; `None` marks noise.
///
/// A point is a core point when at least `min_points` points (itself
/// included) lie within `eps`. Clusters grow from core points through
/// density reachability. With `min_points == 1` every point is core, so the
/// clusters are exactly the connected components of the `eps`-neighbourhood
/// graph and there is no noise.
pub fn dbscan<T, F>(points: &[T], eps: f64, min_points: usize, dist: F) -> Vec<Option<usize>>
where
    F: Fn(&T, &T) -> f64,
{
    let n = points.len();
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| dist(&points[i], &points[j]) <= eps).collect())
        .collect();
    let is_core: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= min_points.max(1)).collect();

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    for start in 0..n {
        if labels[start].is_some() || !is_core[start] {
            continue;
        }
        let cluster = next;
        next += 1;
        labels[start] = Some(cluster);
        let mut frontier = vec![start];
        while let Some(p) = frontier.pop() {
            if !is_core[p] {
                continue;
            }
            for &q in &neighbours[p] {
                if labels[q].is_none() {
                    labels[q] = Some(cluster);
                    frontier.push(q);
                }
            }
        }
    }
    labels
}

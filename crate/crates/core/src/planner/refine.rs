use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use super::{arc_length_timing, distance, trajectory_energy, PlanError, Scenario, SearchStats};
use crate::safety::{segment_is_safe, verify_trajectory, Segment, Trajectory};

/// Heap entry ordered by smallest `f`, ties broken by node ids.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    f: f64,
    g: f64,
    node: usize,
    pred: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then(other.node.cmp(&self.node)).then(other.pred.cmp(&self.pred))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lazy A*: an edge is certified only when its head is popped. Entries
/// whose `f` exceeds `bound` are never pushed. Returns the node sequence
/// from `source` to `target`.
fn lazy_astar(
    n: usize,
    source: usize,
    target: usize,
    bound: f64,
    neighbors: impl Fn(usize) -> Vec<(usize, f64)>,
    heuristic: impl Fn(usize) -> f64,
    mut edge_ok: impl FnMut(usize, usize) -> Result<bool, PlanError>,
) -> Result<Option<Vec<usize>>, PlanError> {
    let mut pred = vec![usize::MAX; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    heap.push(Entry { f: heuristic(source), g: 0.0, node: source, pred: source });
    while let Some(e) = heap.pop() {
        if settled[e.node] {
            continue;
        }
        if e.node != source && !edge_ok(e.pred, e.node)? {
            continue;
        }
        settled[e.node] = true;
        pred[e.node] = e.pred;
        if e.node == target {
            let mut path = vec![target];
            let mut cur = target;
            while cur != source {
                cur = pred[cur];
                path.push(cur);
            }
            path.reverse();
            return Ok(Some(path));
        }
        for (m, w) in neighbors(e.node) {
            if settled[m] {
                continue;
            }
            let g = e.g + w;
            let f = g + heuristic(m);
            if f <= bound {
                heap.push(Entry { f, g, node: m, pred: e.node });
            }
        }
    }
    Ok(None)
}

/// Shortest certified path over the complete graph on the tree vertices
/// and the goal, with Euclidean edge weights. The result is re-timed by
/// arc length and verified; `None` means the raw trajectory should be kept.
pub fn refine_shortest_path(
    sc: &Scenario,
    vertices: &[Vec<f64>],
    raw: &Trajectory,
    stats: &mut SearchStats,
) -> Result<Option<Trajectory>, PlanError> {
    let mut nodes = vertices.to_vec();
    nodes.push(sc.goal().to_vec());
    let n = nodes.len();
    let goal = n - 1;
    let raw_length: f64 = raw.segments().iter().map(|s| distance(&s.start(), &s.end())).sum();

    let mut cache: HashMap<(usize, usize), bool> = HashMap::new();
    let path = lazy_astar(
        n,
        0,
        goal,
        raw_length * (1.0 + 1e-9) + 1e-12,
        |i| (0..n).filter(|&j| j != i).map(|j| (j, distance(&nodes[i], &nodes[j]))).collect(),
        |i| distance(&nodes[i], &nodes[goal]),
        |a, b| {
            let key = (a.min(b), a.max(b));
            if let Some(&ok) = cache.get(&key) {
                return Ok(ok);
            }
            stats.refine_edge_checks += 1;
            let ok = segment_is_safe(sc.contours(), &Segment::linear(&nodes[a], &nodes[b], 0.0, 1.0)?)?;
            cache.insert(key, ok);
            Ok(ok)
        },
    )?;
    let Some(path) = path else {
        return Ok(None);
    };
    let waypoints: Vec<Vec<f64>> = path.iter().map(|&i| nodes[i].clone()).collect();
    let (t0, tf) = sc.horizon();
    let (pts, times) = arc_length_timing(&waypoints, t0, tf);
    let candidate = Trajectory::through(&pts, &times)?;
    accept_if_better(sc, candidate, raw)
}

/// Cheapest certified path through the layered graph with the layer knot
/// times held fixed. Weights are `|dx|^2`, so with uniform intervals the
/// minimizer is the minimum-energy path through the layers.
pub(crate) fn refine_layered(
    sc: &Scenario,
    layers: &[Vec<Vec<f64>>],
    times: &[f64],
    raw: &Trajectory,
    stats: &mut SearchStats,
) -> Result<Option<Trajectory>, PlanError> {
    // flatten: layer offsets, goal last
    let mut offset = Vec::with_capacity(layers.len() + 1);
    let mut nodes: Vec<Vec<f64>> = Vec::new();
    let mut layer_of: Vec<usize> = Vec::new();
    for (i, l) in layers.iter().enumerate() {
        offset.push(nodes.len());
        nodes.extend(l.iter().cloned());
        layer_of.extend(std::iter::repeat_n(i, l.len()));
    }
    offset.push(nodes.len());
    nodes.push(sc.goal().to_vec());
    layer_of.push(layers.len());
    let n = nodes.len();
    let goal = n - 1;
    let range = |layer: usize| if layer == layers.len() { goal..n } else { offset[layer]..offset[layer + 1] };

    let raw_cost: f64 = raw.segments().iter().map(|s| distance(&s.start(), &s.end()).powi(2)).sum();
    let path = lazy_astar(
        n,
        0,
        goal,
        raw_cost * (1.0 + 1e-9) + 1e-12,
        |i| {
            if i == goal {
                return Vec::new();
            }
            range(layer_of[i] + 1).map(|j| (j, distance(&nodes[i], &nodes[j]).powi(2))).collect()
        },
        |_| 0.0,
        |a, b| {
            stats.refine_edge_checks += 1;
            let l = layer_of[a];
            Ok(segment_is_safe(sc.contours(), &Segment::linear(&nodes[a], &nodes[b], times[l], times[l + 1])?)?)
        },
    )?;
    let Some(path) = path else {
        return Ok(None);
    };
    let waypoints: Vec<Vec<f64>> = path.iter().map(|&i| nodes[i].clone()).collect();
    let candidate = Trajectory::through(&waypoints, times)?;
    accept_if_better(sc, candidate, raw)
}

fn accept_if_better(sc: &Scenario, candidate: Trajectory, raw: &Trajectory) -> Result<Option<Trajectory>, PlanError> {
    if candidate == *raw {
        return Ok(None);
    }
    if trajectory_energy(&candidate) > trajectory_energy(raw) {
        return Ok(None);
    }
    if !verify_trajectory(sc.contours(), &candidate)?.is_safe() {
        return Ok(None);
    }
    Ok(Some(candidate))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::poly::VarSpace;

    fn free() -> Scenario {
        let sp = Arc::new(VarSpace::with_roles(&["x", "y"], &[], Some("t")).unwrap());
        Scenario::new(sp, (vec![-2.0, -2.0], vec![2.0, 2.0]), vec![], 0.1, vec![0.0, 0.0], vec![1.0, 1.0], (0.0, 2.0))
            .unwrap()
    }

    #[test]
    fn shortcut_replaces_detour() {
        let sc = free();
        let raw = Trajectory::through(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]], &[0.0, 1.0, 2.0]).unwrap();
        let verts = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let mut stats = SearchStats::default();
        let t = refine_shortest_path(&sc, &verts, &raw, &mut stats).unwrap().expect("shorter");
        assert_eq!(t.segments().len(), 1);
        assert!((trajectory_energy(&t) - 1.0).abs() < 1e-12);
        assert!(trajectory_energy(&t) <= trajectory_energy(&raw));
    }

    #[test]
    fn optimal_raw_is_kept() {
        let sc = free();
        let raw = Trajectory::through(&[vec![0.0, 0.0], vec![1.0, 1.0]], &[0.0, 2.0]).unwrap();
        let mut stats = SearchStats::default();
        assert!(refine_shortest_path(&sc, &[vec![0.0, 0.0]], &raw, &mut stats).unwrap().is_none());
    }

    #[test]
    fn layered_picks_cheapest_waypoint() {
        let sc = free();
        let layers = vec![vec![vec![0.0, 0.0]], vec![vec![2.0, -1.0], vec![0.5, 0.5]]];
        let times = [0.0, 1.0, 2.0];
        let raw = Trajectory::through(&[vec![0.0, 0.0], vec![2.0, -1.0], vec![1.0, 1.0]], &times).unwrap();
        let mut stats = SearchStats::default();
        let t = refine_layered(&sc, &layers, &times, &raw, &mut stats).unwrap().expect("cheaper");
        assert_eq!(t.waypoints()[1], vec![0.5, 0.5]);
        assert_eq!(t.knot_times(), times.to_vec());
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::refine::{refine_layered, refine_shortest_path};
use super::{arc_length_timing, distance, trajectory_energy, PlanError, PlanOutcome, PlanResult, PlannerParams, Scenario, SearchStats};
use crate::safety::{segment_is_safe, verify_trajectory, Segment, Trajectory};

/// Neighborhood schedule shared by both planners.
struct Sampler {
    rng: ChaCha8Rng,
    width: f64,
    max_width: f64,
    failures: usize,
    growth_factor: f64,
    growth_every: usize,
    line_init: bool,
}

impl Sampler {
    fn new(sc: &Scenario, pp: &PlannerParams) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(pp.seed),
            width: pp.neighborhood,
            max_width: sc.diagonal(),
            failures: 0,
            growth_factor: pp.growth_factor,
            growth_every: pp.growth_every,
            line_init: pp.line_init,
        }
    }

    fn fail(&mut self) {
        self.failures += 1;
        if self.failures >= self.growth_every {
            self.failures = 0;
            self.width = (self.width * self.growth_factor).min(self.max_width);
        }
    }

    fn uniform(&mut self, sc: &Scenario) -> Vec<f64> {
        (0..sc.dim()).map(|i| self.rng.random_range(sc.lower()[i]..=sc.upper()[i])).collect()
    }

    /// Box of half-width `width` around `center`, clamped to the workspace.
    fn around(&mut self, sc: &Scenario, center: &[f64]) -> Vec<f64> {
        let w = self.width;
        let mut x: Vec<f64> = center.iter().map(|c| c + self.rng.random_range(-w..=w)).collect();
        sc.clamp(&mut x);
        x
    }
}

fn nearest<'a>(points: impl Iterator<Item = &'a Vec<f64>>, x: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, p) in points.enumerate() {
        let d = distance(p, x);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

fn lerp(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
}

/// Static edges are time-invariant, so the unit interval stands in for
/// any timing.
fn static_edge(sc: &Scenario, a: &[f64], b: &[f64], stats: &mut SearchStats) -> Result<bool, PlanError> {
    stats.edge_checks += 1;
    Ok(segment_is_safe(sc.contours(), &Segment::linear(a, b, 0.0, 1.0)?)?)
}

fn timed_edge(sc: &Scenario, a: &[f64], b: &[f64], t1: f64, t2: f64, stats: &mut SearchStats) -> Result<bool, PlanError> {
    stats.edge_checks += 1;
    Ok(segment_is_safe(sc.contours(), &Segment::linear(a, b, t1, t2)?)?)
}

fn finish(sc: &Scenario, trajectory: Trajectory, stats: SearchStats) -> Result<PlanOutcome, PlanError> {
    let report = verify_trajectory(sc.contours(), &trajectory)?;
    if !report.is_safe() {
        // every edge was certified, so this only happens if re-timing broke
        // a dynamic constraint; callers fall back before reaching here
        return Ok(PlanOutcome::NoSolution(stats));
    }
    let (t0, tf) = sc.horizon();
    let energy = trajectory_energy(&trajectory);
    let straight_line_energy = distance(sc.start(), sc.goal()).powi(2) / (tf - t0);
    Ok(PlanOutcome::Found(PlanResult { trajectory, report, energy, straight_line_energy, stats }))
}

/// RRT over static contours. Tries the straight line first, then grows a
/// tree from the start until a certified connection to the goal exists.
pub fn plan_rrt_static(sc: &Scenario, pp: &PlannerParams) -> Result<PlanOutcome, PlanError> {
    pp.validate()?;
    if let Some(c) = sc.contours().iter().find(|c| c.is_dynamic()) {
        return Err(PlanError::DynamicObstacle(c.obstacle().to_string()));
    }
    let mut stats = SearchStats::default();
    let (start, goal) = (sc.start().to_vec(), sc.goal().to_vec());
    let mut vertices = vec![start.clone()];
    let mut parent: Vec<Option<usize>> = vec![None];

    stats.goal_attempts += 1;
    let mut reached = if static_edge(sc, &start, &goal, &mut stats)? { Some(0) } else { None };

    let mut sampler = Sampler::new(sc, pp);
    while reached.is_none() && stats.iterations < pp.max_iterations {
        stats.iterations += 1;
        let sample = if sampler.line_init {
            let s = sampler.rng.random_range(0.0..=1.0);
            sampler.around(sc, &lerp(&start, &goal, s))
        } else {
            sampler.uniform(sc)
        };
        let near = nearest(vertices.iter(), &sample);
        let d = distance(&vertices[near], &sample);
        if d < 1e-12 {
            continue;
        }
        let new = if d > pp.step_length { lerp(&vertices[near], &sample, pp.step_length / d) } else { sample };
        if !sc.point_is_member(&new, None) || !static_edge(sc, &vertices[near], &new, &mut stats)? {
            stats.rejected_edges += 1;
            sampler.fail();
            continue;
        }
        vertices.push(new);
        parent.push(Some(near));
        let id = vertices.len() - 1;
        if (vertices.len() - 1) % pp.goal_connect_period == 0 {
            stats.goal_attempts += 1;
            if static_edge(sc, &vertices[id], &goal, &mut stats)? {
                reached = Some(id);
            } else {
                sampler.fail();
            }
        }
    }
    stats.vertices = vertices.len();
    let Some(last) = reached else {
        return Ok(PlanOutcome::NoSolution(stats));
    };

    let mut path = vec![goal];
    let mut cur = Some(last);
    while let Some(i) = cur {
        path.push(vertices[i].clone());
        cur = parent[i];
    }
    path.reverse();
    let (t0, tf) = sc.horizon();
    let (pts, times) = arc_length_timing(&path, t0, tf);
    let mut trajectory = Trajectory::through(&pts, &times)?;

    if pp.refine && vertices.len() > 1 {
        if let Some(better) = refine_shortest_path(sc, &vertices, &trajectory, &mut stats)? {
            trajectory = better;
            stats.refined = true;
        }
    }
    finish(sc, trajectory, stats)
}

/// Layered RRT for time-varying contours. The horizon is tiled into
/// `pp.segments` equal intervals; layer `i` holds positions at knot time
/// `t_i` and each edge is certified over its own interval.
pub fn plan_rrt_dynamic(sc: &Scenario, pp: &PlannerParams) -> Result<PlanOutcome, PlanError> {
    pp.validate()?;
    let s = pp.segments;
    let (t0, tf) = sc.horizon();
    let knot = |i: usize| if i == s { tf } else { t0 + (tf - t0) * i as f64 / s as f64 };
    let mut stats = SearchStats::default();
    let (start, goal) = (sc.start().to_vec(), sc.goal().to_vec());

    // layers[i] = (position, parent in layer i - 1)
    let mut layers: Vec<Vec<(Vec<f64>, usize)>> = vec![Vec::new(); s];
    layers[0].push((start.clone(), 0));
    let mut reached: Option<usize> = None;

    if s == 1 {
        stats.goal_attempts += 1;
        if timed_edge(sc, &start, &goal, t0, tf, &mut stats)? {
            reached = Some(0);
        }
    }

    let mut sampler = Sampler::new(sc, pp);
    while s > 1 && reached.is_none() && stats.iterations < pp.max_iterations {
        stats.iterations += 1;
        let eligible: Vec<usize> = (1..s).filter(|&i| !layers[i - 1].is_empty()).collect();
        let i = eligible[sampler.rng.random_range(0..eligible.len())];
        let sample = if sampler.line_init {
            sampler.around(sc, &lerp(&start, &goal, i as f64 / s as f64))
        } else {
            sampler.uniform(sc)
        };
        let near = nearest(layers[i - 1].iter().map(|(p, _)| p), &sample);
        let from = layers[i - 1][near].0.clone();
        if !sc.point_is_member(&sample, Some(knot(i)))
            || !timed_edge(sc, &from, &sample, knot(i - 1), knot(i), &mut stats)?
        {
            stats.rejected_edges += 1;
            sampler.fail();
            continue;
        }
        layers[i].push((sample, near));
        if i == s - 1 {
            stats.goal_attempts += 1;
            let id = layers[i].len() - 1;
            if timed_edge(sc, &layers[i][id].0, &goal, knot(s - 1), tf, &mut stats)? {
                reached = Some(id);
            } else {
                sampler.fail();
            }
        }
    }
    stats.vertices = layers.iter().map(Vec::len).sum();
    let Some(last) = reached else {
        return Ok(PlanOutcome::NoSolution(stats));
    };

    let mut path = vec![goal];
    let mut idx = last;
    for i in (0..s).rev() {
        let (p, par) = &layers[i][idx];
        path.push(p.clone());
        idx = *par;
    }
    path.reverse();
    let times: Vec<f64> = (0..=s).map(knot).collect();
    let mut trajectory = Trajectory::through(&path, &times)?;

    if pp.refine && s > 1 {
        let positions: Vec<Vec<Vec<f64>>> = layers.iter().map(|l| l.iter().map(|(p, _)| p.clone()).collect()).collect();
        if let Some(better) = refine_layered(sc, &positions, &times, &trajectory, &mut stats)? {
            trajectory = better;
            stats.refined = true;
        }
    }
    finish(sc, trajectory, stats)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::contour::UncertainObstacle;
    use crate::poly::{MultiPoly, VarSpace};
    use crate::uncertainty::{Distribution, OmegaModel};

    fn space() -> Arc<VarSpace> {
        Arc::new(VarSpace::with_roles(&["x1", "x2"], &["w"], Some("t")).unwrap())
    }

    /// Disc of radius^2 `w ~ U[0.1, 0.2]` centred at `c`.
    fn disc(sp: &Arc<VarSpace>, c: (f64, f64)) -> UncertainObstacle {
        let p = MultiPoly::from_named_terms(
            sp.clone(),
            [
                (1.0, vec![("w", 1)]),
                (-1.0, vec![("x1", 2)]),
                (2.0 * c.0, vec![("x1", 1)]),
                (-c.0 * c.0, vec![]),
                (-1.0, vec![("x2", 2)]),
                (2.0 * c.1, vec![("x2", 1)]),
                (-c.1 * c.1, vec![]),
            ],
        )
        .unwrap();
        UncertainObstacle::new("disc", p, OmegaModel::new().with("w", Distribution::uniform(0.1, 0.2).unwrap())).unwrap()
    }

    fn scenario(obstacles: Vec<UncertainObstacle>) -> Scenario {
        Scenario::new(
            space(),
            (vec![-1.5, -1.5], vec![1.5, 1.5]),
            obstacles,
            0.1,
            vec![-1.0, -1.0],
            vec![1.0, 1.0],
            (0.0, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn free_space_gives_straight_line() {
        let sc = scenario(vec![]);
        let pp = PlannerParams::for_scenario(&sc, 1);
        let r = plan_rrt_static(&sc, &pp).unwrap().found().unwrap();
        assert_eq!(r.trajectory.segments().len(), 1);
        assert_eq!(r.stats.iterations, 0);
        assert!((r.energy - r.straight_line_energy).abs() < 1e-12);
    }

    #[test]
    fn detours_around_disc_deterministically() {
        let sp = space();
        let sc = scenario(vec![disc(&sp, (0.0, 0.0))]);
        let pp = PlannerParams::for_scenario(&sc, 3);
        let a = plan_rrt_static(&sc, &pp).unwrap().found().expect("plan");
        assert!(a.report.is_safe());
        assert!(a.trajectory.segments().len() > 1);
        assert!(a.energy > a.straight_line_energy);
        let b = plan_rrt_static(&sc, &pp).unwrap().found().unwrap();
        assert_eq!(a.trajectory, b.trajectory);
    }

    #[test]
    fn rejects_start_inside() {
        let sp = space();
        let err = Scenario::new(
            sp.clone(),
            (vec![-1.5, -1.5], vec![1.5, 1.5]),
            vec![disc(&sp, (-1.0, -1.0))],
            0.1,
            vec![-1.0, -1.0],
            vec![1.0, 1.0],
            (0.0, 1.0),
        )
        .unwrap_err();
        assert!(matches!(err, PlanError::RejectedInput { which: "start", .. }));
    }

    #[test]
    fn dynamic_planner_handles_static_obstacles() {
        let sp = space();
        let sc = scenario(vec![disc(&sp, (0.0, 0.0))]);
        let mut pp = PlannerParams::for_scenario(&sc, 5);
        pp.segments = 3;
        let r = plan_rrt_dynamic(&sc, &pp).unwrap().found().expect("plan");
        assert_eq!(r.trajectory.segments().len(), 3);
        assert_eq!(r.trajectory.knot_times(), vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
        let (t0, tf) = sc.horizon();
        let recheck = verify_trajectory(sc.contours(), &r.trajectory).unwrap();
        assert!(recheck.is_safe());
        assert_eq!((r.trajectory.t0(), r.trajectory.tf()), (t0, tf));
    }

    #[test]
    fn static_planner_refuses_dynamic_obstacle() {
        let sp = space();
        let p = MultiPoly::from_named_terms(
            sp.clone(),
            [(1.0, vec![("w", 1)]), (-1.0, vec![("x1", 2)]), (-1.0, vec![("x2", 2)]), (0.1, vec![("t", 1)])],
        )
        .unwrap();
        let o = UncertainObstacle::new("moving", p, OmegaModel::new().with("w", Distribution::uniform(0.1, 0.2).unwrap()))
            .unwrap();
        let sc = scenario(vec![o]);
        let pp = PlannerParams::for_scenario(&sc, 1);
        assert!(matches!(plan_rrt_static(&sc, &pp), Err(PlanError::DynamicObstacle(_))));
    }
}

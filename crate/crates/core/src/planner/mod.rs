//! Risk-bounded planners over risk contours.
//!
//! * [`plan_rrt_static`]: RRT whose edges are straight pieces admitted only
//!   after a continuous-time certificate, optionally followed by a
//!   shortest-path pass over every certified edge between tree vertices.
//! * [`plan_rrt_dynamic`]: layered RRT for time-varying contours; layer `i`
//!   holds positions at knot time `t_i` and edges are certified over their
//!   own time interval.
//! * [`optimize_local`]: waypoint descent on energy that only ever accepts
//!   certified moves.
//! * [`average_risk_bound`]: the time-averaged bound for a polynomial
//!   trajectory.

mod average;
mod optimize;
mod refine;
mod rrt;

use std::sync::Arc;

use thiserror::Error;

use crate::contour::{build_contour, ContourError, Membership, RiskContour, UncertainObstacle};
use crate::poly::VarSpace;
use crate::safety::{SafetyError, SafetyReport, Trajectory};

pub use average::{average_risk_bound, AverageRisk};
pub use optimize::{optimize_local, OptimizeParams};
pub use refine::refine_shortest_path;
pub use rrt::{plan_rrt_dynamic, plan_rrt_static};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("{which} point {point:?} is not inside the risk contour of obstacle `{obstacle}` ({membership})")]
    RejectedInput { which: &'static str, point: Vec<f64>, obstacle: String, membership: Membership },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid planner parameters: {0}")]
    InvalidParams(String),
    #[error("obstacle `{0}` is time-varying; use the dynamic planner")]
    DynamicObstacle(String),
    #[error("trajectory must be piecewise linear")]
    NotPiecewiseLinear,
    #[error("input trajectory is not certified safe")]
    UnsafeInput,
    #[error(transparent)]
    Safety(#[from] SafetyError),
    #[error(transparent)]
    Contour(#[from] ContourError),
}

/// Planning problem: workspace box, obstacles, risk level, endpoints and
/// horizon. Contours are built once at construction.
#[derive(Debug, Clone)]
pub struct Scenario {
    space: Arc<VarSpace>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    obstacles: Vec<UncertainObstacle>,
    contours: Vec<RiskContour>,
    delta: f64,
    start: Vec<f64>,
    goal: Vec<f64>,
    t0: f64,
    tf: f64,
}

impl Scenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        space: Arc<VarSpace>,
        workspace: (Vec<f64>, Vec<f64>),
        obstacles: Vec<UncertainObstacle>,
        delta: f64,
        start: Vec<f64>,
        goal: Vec<f64>,
        horizon: (f64, f64),
    ) -> Result<Self, PlanError> {
        let dim = space.state_dim();
        let (lower, upper) = workspace;
        if dim == 0 {
            return Err(PlanError::InvalidScenario("no state variables".into()));
        }
        for (what, v) in [("workspace min", &lower), ("workspace max", &upper), ("start", &start), ("goal", &goal)] {
            if v.len() != dim {
                return Err(PlanError::InvalidScenario(format!("{what} has {} entries, expected {dim}", v.len())));
            }
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(PlanError::InvalidScenario("workspace min must be below max on every axis".into()));
        }
        let (t0, tf) = horizon;
        if !(t0 < tf) {
            return Err(PlanError::InvalidScenario(format!("horizon [{t0}, {tf}] is empty")));
        }
        for (what, p) in [("start", &start), ("goal", &goal)] {
            if p.iter().zip(lower.iter().zip(&upper)).any(|(x, (l, u))| x < l || x > u) {
                return Err(PlanError::InvalidScenario(format!("{what} lies outside the workspace")));
            }
        }
        for o in &obstacles {
            if **o.poly().space() != *space {
                return Err(PlanError::InvalidScenario(format!("obstacle `{}` uses a different variable space", o.name())));
            }
        }
        let contours = obstacles.iter().map(|o| build_contour(o, delta)).collect::<Result<Vec<_>, _>>()?;
        let sc = Self { space, lower, upper, obstacles, contours, delta, start, goal, t0, tf };
        sc.check_endpoint("start", &sc.start, sc.t0)?;
        sc.check_endpoint("goal", &sc.goal, sc.tf)?;
        Ok(sc)
    }

    fn check_endpoint(&self, which: &'static str, p: &[f64], t: f64) -> Result<(), PlanError> {
        for c in &self.contours {
            let e = c.risk_bound_at(p, Some(t))?;
            if !e.is_member() {
                return Err(PlanError::RejectedInput {
                    which,
                    point: p.to_vec(),
                    obstacle: c.obstacle().to_string(),
                    membership: e.membership,
                });
            }
        }
        Ok(())
    }

    pub fn space(&self) -> &Arc<VarSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn obstacles(&self) -> &[UncertainObstacle] {
        &self.obstacles
    }

    pub fn contours(&self) -> &[RiskContour] {
        &self.contours
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn goal(&self) -> &[f64] {
        &self.goal
    }

    pub fn horizon(&self) -> (f64, f64) {
        (self.t0, self.tf)
    }

    pub fn has_dynamic_obstacles(&self) -> bool {
        self.contours.iter().any(RiskContour::is_dynamic)
    }

    pub(crate) fn diagonal(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| (u - l).powi(2)).sum::<f64>().sqrt()
    }

    /// Member of every contour at time `t`.
    pub fn point_is_member(&self, x: &[f64], t: Option<f64>) -> bool {
        self.contours.iter().all(|c| c.risk_bound_at(x, t).map(|e| e.is_member()).unwrap_or(false))
    }

    pub(crate) fn clamp(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }
}

/// Search knobs. Every numeric field must be positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerParams {
    pub seed: u64,
    pub max_iterations: usize,
    /// Longest tree extension in the static planner.
    pub step_length: f64,
    /// Try to connect to the goal after every `goal_connect_period`-th new
    /// vertex.
    pub goal_connect_period: usize,
    /// Sample around the straight start-goal line instead of the whole box.
    pub line_init: bool,
    /// Initial half-width of the sampling neighborhood.
    pub neighborhood: f64,
    /// Multiplier applied to the half-width every `growth_every` failed
    /// extensions or goal connections.
    pub growth_factor: f64,
    pub growth_every: usize,
    /// Number of linear pieces in dynamic mode.
    pub segments: usize,
    pub refine: bool,
}

impl PlannerParams {
    /// Defaults scaled to the scenario's workspace.
    pub fn for_scenario(sc: &Scenario, seed: u64) -> Self {
        let diag = sc.diagonal();
        Self {
            seed,
            max_iterations: 5000,
            step_length: 0.15 * diag,
            goal_connect_period: 1,
            line_init: true,
            neighborhood: 0.05 * diag,
            growth_factor: 1.5,
            growth_every: 10,
            segments: 4,
            refine: true,
        }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: &str| Err(PlanError::InvalidParams(m.to_string()));
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.step_length > 0.0) {
            return bad("step_length must be positive");
        }
        if self.goal_connect_period == 0 {
            return bad("goal_connect_period must be positive");
        }
        if !(self.neighborhood > 0.0) || !(self.growth_factor >= 1.0) || self.growth_every == 0 {
            return bad("neighborhood, growth_factor (>= 1) and growth_every must be positive");
        }
        if self.segments == 0 {
            return bad("segments must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub iterations: usize,
    pub vertices: usize,
    pub edge_checks: usize,
    pub rejected_edges: usize,
    pub goal_attempts: usize,
    pub refine_edge_checks: usize,
    /// Whether the returned trajectory came from the refinement pass.
    pub refined: bool,
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub trajectory: Trajectory,
    /// Fresh verification of `trajectory`; always safe.
    pub report: SafetyReport,
    pub energy: f64,
    /// `|goal - start|^2 / (tf - t0)`, the energy of the straight line.
    pub straight_line_energy: f64,
    pub stats: SearchStats,
}

#[derive(Debug, Clone)]
pub enum PlanOutcome {
    Found(PlanResult),
    NoSolution(SearchStats),
}

impl PlanOutcome {
    pub fn found(self) -> Option<PlanResult> {
        match self {
            PlanOutcome::Found(r) => Some(r),
            PlanOutcome::NoSolution(_) => None,
        }
    }

    pub fn stats(&self) -> &SearchStats {
        match self {
            PlanOutcome::Found(r) => &r.stats,
            PlanOutcome::NoSolution(s) => s,
        }
    }
}

/// `sum over pieces of the integral of |x'(t)|^2`, exact.
pub fn trajectory_energy(traj: &Trajectory) -> f64 {
    traj.segments()
        .iter()
        .map(|s| {
            s.curves()
                .iter()
                .map(|c| {
                    let d = c.derivative();
                    d.mul(&d).integrate(s.t1(), s.t2())
                })
                .sum::<f64>()
        })
        .sum()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Knot times proportional to cumulative arc length over `[t0, tf]`.
/// Consecutive duplicate waypoints are dropped first.
pub(crate) fn arc_length_timing(waypoints: &[Vec<f64>], t0: f64, tf: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(waypoints.len());
    for w in waypoints {
        if pts.last().is_none_or(|p| distance(p, w) > 1e-12) {
            pts.push(w.clone());
        }
    }
    if pts.len() == 1 {
        // stationary: hold position over the whole horizon
        pts.push(pts[0].clone());
        return (pts, vec![t0, tf]);
    }
    let mut cum = vec![0.0];
    for w in pts.windows(2) {
        let last = *cum.last().expect("nonempty");
        cum.push(last + distance(&w[0], &w[1]));
    }
    let total = *cum.last().expect("nonempty");
    let mut times: Vec<f64> = cum.iter().map(|c| t0 + (tf - t0) * c / total).collect();
    *times.last_mut().expect("nonempty") = tf;
    (pts, times)
}

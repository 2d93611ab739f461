use super::PlanError;
use crate::contour::{UncertainObstacle, EPS_PSD};
use crate::poly::PolyError;
use crate::safety::Trajectory;
use crate::uncertainty::{expectation, Distribution};

/// Time-averaged risk inequalities for one obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageRisk {
    /// `(1 - delta) E[P^2] - E[P]^2`, expectation over `omega` and uniform `t`.
    pub bound_lhs: f64,
    /// `E[P]`.
    pub sign_lhs: f64,
    /// `E[P^2]`.
    pub ep2: f64,
    pub holds: bool,
}

/// Treat `t` as uniform over the trajectory's horizon and check whether
/// the averaged moments satisfy the contour inequalities. Each piece is
/// weighted by its share of the horizon.
pub fn average_risk_bound(traj: &Trajectory, obstacle: &UncertainObstacle, delta: f64) -> Result<AverageRisk, PlanError> {
    if obstacle.is_dynamic() {
        return Err(PlanError::DynamicObstacle(obstacle.name().to_string()));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(crate::contour::ContourError::InvalidDelta(delta).into());
    }
    let poly = obstacle.poly();
    let space = poly.space();
    let time = space.time_index().ok_or(PolyError::NoTimeVariable).map_err(crate::contour::ContourError::from)?;
    let span = traj.tf() - traj.t0();
    let (mut e1, mut e2) = (0.0, 0.0);
    for seg in traj.segments() {
        let q = poly.substitute_trajectory(seg.curves()).map_err(crate::contour::ContourError::from)?;
        let q2 = q.square().map_err(crate::contour::ContourError::from)?;
        let wrap = |e| crate::contour::ContourError::Uncertainty(obstacle.name().to_string(), e);
        let t_dist = Distribution::uniform(seg.t1(), seg.t2()).map_err(wrap)?;
        let model = obstacle.omega().clone().with(space.name(time), t_dist);
        let w = (seg.t2() - seg.t1()) / span;
        e1 += w * expectation(&q, &model).map_err(wrap)?.constant_term();
        e2 += w * expectation(&q2, &model).map_err(wrap)?.constant_term();
    }
    let bound_lhs = (1.0 - delta) * e2 - e1 * e1;
    Ok(AverageRisk { bound_lhs, sign_lhs: e1, ep2: e2, holds: bound_lhs <= 0.0 && e1 <= 0.0 && e2 >= EPS_PSD })
}

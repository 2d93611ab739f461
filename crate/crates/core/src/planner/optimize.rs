use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{arc_length_timing, distance, trajectory_energy, PlanError, Scenario};
use crate::safety::{segment_is_safe, verify_trajectory, Segment, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeParams {
    /// Number of passes over all moves.
    pub iterations: usize,
    pub initial_step: f64,
    /// Step multiplier after a pass without an accepted move.
    pub decay: f64,
    pub min_step: f64,
    pub seed: u64,
}

impl OptimizeParams {
    pub fn for_scenario(sc: &Scenario, seed: u64) -> Self {
        Self { iterations: 200, initial_step: 0.05 * sc.diagonal(), decay: 0.5, min_step: 1e-6 * sc.diagonal(), seed }
    }
}

fn piece_energy(a: &[f64], b: &[f64], t1: f64, t2: f64) -> f64 {
    distance(a, b).powi(2) / (t2 - t1)
}

/// Coordinate descent on the interior waypoints of a piecewise-linear
/// trajectory with knot times held fixed. A move is kept only if it
/// strictly lowers the energy and both touched pieces certify safe.
/// When every obstacle is static the result is finally re-timed by arc
/// length if that lowers the energy further.
pub fn optimize_local(traj: &Trajectory, sc: &Scenario, op: &OptimizeParams) -> Result<Trajectory, PlanError> {
    if traj.segments().iter().any(|s| s.curves().iter().any(|c| c.degree().unwrap_or(0) > 1)) {
        return Err(PlanError::NotPiecewiseLinear);
    }
    if op.iterations == 0 {
        return Ok(traj.clone());
    }
    if !verify_trajectory(sc.contours(), traj)?.is_safe() {
        return Err(PlanError::UnsafeInput);
    }
    let mut w = traj.waypoints();
    let times = traj.knot_times();
    let n = w.len();
    let dim = traj.dim();
    let mut moves: Vec<(usize, usize, f64)> = Vec::new();
    for k in 1..n.saturating_sub(1) {
        for d in 0..dim {
            moves.push((k, d, 1.0));
            moves.push((k, d, -1.0));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(op.seed);
    let mut h = op.initial_step;
    for _ in 0..op.iterations {
        if moves.is_empty() || h < op.min_step {
            break;
        }
        moves.shuffle(&mut rng);
        let mut accepted = false;
        for &(k, d, sign) in &moves {
            let mut cand = w[k].clone();
            cand[d] = (cand[d] + sign * h).clamp(sc.lower()[d], sc.upper()[d]);
            let before = piece_energy(&w[k - 1], &w[k], times[k - 1], times[k])
                + piece_energy(&w[k], &w[k + 1], times[k], times[k + 1]);
            let after = piece_energy(&w[k - 1], &cand, times[k - 1], times[k])
                + piece_energy(&cand, &w[k + 1], times[k], times[k + 1]);
            if !(after < before) {
                continue;
            }
            let safe = segment_is_safe(sc.contours(), &Segment::linear(&w[k - 1], &cand, times[k - 1], times[k])?)?
                && segment_is_safe(sc.contours(), &Segment::linear(&cand, &w[k + 1], times[k], times[k + 1])?)?;
            if safe {
                w[k] = cand;
                accepted = true;
            }
        }
        if !accepted {
            h *= op.decay;
        }
    }
    let out = Trajectory::through(&w, &times)?;
    if sc.has_dynamic_obstacles() {
        return Ok(out);
    }
    let (pts, t) = arc_length_timing(&w, traj.t0(), traj.tf());
    let retimed = Trajectory::through(&pts, &t)?;
    if trajectory_energy(&retimed) < trajectory_energy(&out) && verify_trajectory(sc.contours(), &retimed)?.is_safe() {
        return Ok(retimed);
    }
    Ok(out)
}

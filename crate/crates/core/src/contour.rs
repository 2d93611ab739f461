//! Static and dynamic risk contours.
//!
//! For an obstacle `{x : P(x, w[, t]) >= 0}` the set
//!
//! ```text
//! { x : (E[P^2] - E[P]^2) / E[P^2] <= delta,  E[P] <= 0 }
//! ```
//!
//! is contained in the true set of points with collision probability at most
//! `delta` (one-sided Chebyshev bound applied to the scalar `z = P(x, w)`).
//! Both `E[P]` and `E[P^2]` are ordinary polynomials in `x` (and `t`), so
//! membership is cheap to evaluate pointwise and, after substituting a
//! polynomial trajectory, reduces to three univariate sign conditions.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::poly::{MultiPoly, PolyError, UniPoly, VarClass};
use crate::uncertainty::{expectation, OmegaModel, UncertaintyError};

/// Below this `E[P^2]` the point is classified degenerate (not a member).
pub const EPS_PSD: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContourError {
    #[error("risk level {0} outside [0, 1]")]
    InvalidDelta(f64),
    #[error("obstacle `{0}`: {1}")]
    Uncertainty(String, UncertaintyError),
    #[error("expected {expected} state coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("grid is empty or malformed: {0}")]
    BadGrid(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// An obstacle `{x : P(x, w[, t]) >= 0}` with random parameters `w`.
#[derive(Debug, Clone)]
pub struct UncertainObstacle {
    name: String,
    poly: MultiPoly,
    omega: OmegaModel,
}

impl UncertainObstacle {
    pub fn new(name: impl Into<String>, poly: MultiPoly, omega: OmegaModel) -> Result<Self, ContourError> {
        let name = name.into();
        omega.check_covers(&poly).map_err(|e| ContourError::Uncertainty(name.clone(), e))?;
        for (_, d) in omega.iter() {
            d.validate().map_err(|e| ContourError::Uncertainty(name.clone(), e))?;
        }
        Ok(Self { name, poly, omega })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn poly(&self) -> &MultiPoly {
        &self.poly
    }

    pub fn omega(&self) -> &OmegaModel {
        &self.omega
    }

    /// Whether `P` depends on time.
    pub fn is_dynamic(&self) -> bool {
        self.poly.uses_class(VarClass::Time)
    }
}

/// Deterministic inner approximation of the `delta`-risk contour.
#[derive(Debug, Clone)]
pub struct RiskContour {
    obstacle: String,
    dynamic: bool,
    ep: MultiPoly,
    ep2: MultiPoly,
    delta: f64,
    eps_psd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Member,
    /// `E[P] > 0`: no bound is claimed at this point.
    ExcludedBySign,
    ExcludedByBound,
    /// `E[P^2]` below `EPS_PSD`: `P` vanishes almost surely here.
    Degenerate,
}

impl fmt::Display for Membership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Membership::Member => "member",
            Membership::ExcludedBySign => "excluded-by-sign",
            Membership::ExcludedByBound => "excluded-by-bound",
            Membership::Degenerate => "degenerate",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskEvaluation {
    pub point: Vec<f64>,
    pub time: Option<f64>,
    pub ep: f64,
    pub ep2: f64,
    /// Upper bound on the collision probability; `None` unless
    /// `ep <= 0` and `ep2 >= eps_psd`.
    pub bound: Option<f64>,
    pub membership: Membership,
}

impl RiskEvaluation {
    pub fn is_member(&self) -> bool {
        self.membership == Membership::Member
    }

    /// `(ep2 - ep^2) / ep2` whenever `ep2 >= eps_psd`, regardless of sign.
    /// Used for raster output where a value is wanted at every pixel.
    pub fn raw_ratio(&self) -> Option<f64> {
        (self.ep2 >= EPS_PSD).then(|| ((self.ep2 - self.ep * self.ep) / self.ep2).clamp(0.0, 1.0))
    }
}

/// The three curves that must stay non-positive along a trajectory piece.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCurves {
    /// `(1 - delta) E[P^2](x(t)) - E[P](x(t))^2`
    pub bound: UniPoly,
    /// `E[P](x(t))`
    pub sign: UniPoly,
    /// `eps_psd - E[P^2](x(t))`
    pub psd: UniPoly,
}

impl ConstraintCurves {
    pub fn iter(&self) -> impl Iterator<Item = (CurveKind, &UniPoly)> {
        [(CurveKind::Bound, &self.bound), (CurveKind::Sign, &self.sign), (CurveKind::Psd, &self.psd)].into_iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CurveKind {
    Bound,
    Sign,
    Psd,
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveKind::Bound => "bound",
            CurveKind::Sign => "sign",
            CurveKind::Psd => "psd",
        })
    }
}

/// Compute `E[P]` and `E[P^2]` for `o` and attach the risk level.
pub fn build_contour(o: &UncertainObstacle, delta: f64) -> Result<RiskContour, ContourError> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(ContourError::InvalidDelta(delta));
    }
    let wrap = |e| ContourError::Uncertainty(o.name.clone(), e);
    let ep = expectation(&o.poly, &o.omega).map_err(wrap)?;
    let ep2 = expectation(&o.poly.square()?, &o.omega).map_err(wrap)?;
    Ok(RiskContour { obstacle: o.name.clone(), dynamic: o.is_dynamic(), ep, ep2, delta, eps_psd: EPS_PSD })
}

impl RiskContour {
    pub fn obstacle(&self) -> &str {
        &self.obstacle
    }

    pub fn is_dynamic(&self) -> bool {
        self.dynamic
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eps_psd(&self) -> f64 {
        self.eps_psd
    }

    /// `E[P]` as a polynomial in state (and time) variables.
    pub fn ep(&self) -> &MultiPoly {
        &self.ep
    }

    /// `E[P^2]` as a polynomial in state (and time) variables.
    pub fn ep2(&self) -> &MultiPoly {
        &self.ep2
    }

    /// Same contour at a different risk level; the moment polynomials are
    /// shared.
    pub fn with_delta(&self, delta: f64) -> Result<Self, ContourError> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(ContourError::InvalidDelta(delta));
        }
        Ok(Self { delta, ..self.clone() })
    }

    fn state_dim(&self) -> usize {
        self.ep.space().state_dim()
    }

    fn assignment(&self, x: &[f64], t: Option<f64>) -> Vec<f64> {
        let space = self.ep.space();
        let mut vals = vec![0.0; space.len()];
        for (slot, idx) in space.state_indices().into_iter().enumerate() {
            vals[idx] = x[slot];
        }
        if let (Some(ti), Some(t)) = (space.time_index(), t) {
            vals[ti] = t;
        }
        vals
    }

    /// Evaluate the bound and membership at `x` (and `t` for dynamic
    /// contours; ignored for static ones).
    pub fn risk_bound_at(&self, x: &[f64], t: Option<f64>) -> Result<RiskEvaluation, ContourError> {
        if x.len() != self.state_dim() {
            return Err(ContourError::Dimension { expected: self.state_dim(), got: x.len() });
        }
        let t = if self.dynamic { Some(t.ok_or(PolyError::MissingValue("t".into()))?) } else { t };
        let vals = self.assignment(x, t);
        let ep = self.ep.eval_unchecked(|i| vals[i]);
        let ep2 = self.ep2.eval_unchecked(|i| vals[i]);
        Ok(self.classify(x.to_vec(), t, ep, ep2))
    }

    fn classify(&self, point: Vec<f64>, time: Option<f64>, ep: f64, ep2: f64) -> RiskEvaluation {
        let (bound, membership) = if ep2 < self.eps_psd {
            (None, Membership::Degenerate)
        } else if ep > 0.0 {
            (None, Membership::ExcludedBySign)
        } else {
            let b = ((ep2 - ep * ep) / ep2).clamp(0.0, 1.0);
            let m = if b <= self.delta { Membership::Member } else { Membership::ExcludedByBound };
            (Some(b), m)
        };
        RiskEvaluation { point, time, ep, ep2, bound, membership }
    }

    /// Constraint curves along `x(t)` for `t` in `[t1, t2]`. Curves are
    /// polynomials in absolute time.
    pub fn constraint_curves(&self, curves: &[UniPoly]) -> Result<ConstraintCurves, ContourError> {
        if curves.len() != self.state_dim() {
            return Err(ContourError::Dimension { expected: self.state_dim(), got: curves.len() });
        }
        let ep = self.ep.substitute_trajectory(curves)?.to_univariate()?;
        let ep2 = self.ep2.substitute_trajectory(curves)?.to_univariate()?;
        let bound = ep2.scale(1.0 - self.delta).sub(&ep.mul(&ep));
        let psd = UniPoly::constant(self.eps_psd).sub(&ep2);
        Ok(ConstraintCurves { bound, sign: ep, psd })
    }

    /// Evaluate every node of `grid`, row-major with the last axis fastest.
    pub fn rasterize(&self, grid: &Grid, t: Option<f64>) -> Result<Raster, ContourError> {
        if grid.dim() != self.state_dim() {
            return Err(ContourError::Dimension { expected: self.state_dim(), got: grid.dim() });
        }
        if self.dynamic && t.is_none() {
            return Err(PolyError::MissingValue("t".into()).into());
        }
        let cells: Vec<RiskEvaluation> = (0..grid.len())
            .into_par_iter()
            .map(|k| self.risk_bound_at(&grid.point(k), t).expect("dimension checked"))
            .collect();
        Ok(Raster { grid: grid.clone(), time: t, delta: self.delta, cells })
    }
}

/// Axis-aligned lattice of points, `resolution[i]` nodes on axis `i`
/// including both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: Vec<usize>,
}

impl Grid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, resolution: Vec<usize>) -> Result<Self, ContourError> {
        if lower.len() != upper.len() || lower.len() != resolution.len() || lower.is_empty() {
            return Err(ContourError::BadGrid("axis count mismatch".into()));
        }
        for i in 0..lower.len() {
            if !(lower[i] <= upper[i]) || resolution[i] == 0 {
                return Err(ContourError::BadGrid(format!("axis {i}")));
            }
        }
        Ok(Self { lower, upper, resolution })
    }

    /// Same number of nodes `n` on every axis.
    pub fn uniform(lower: Vec<f64>, upper: Vec<f64>, n: usize) -> Result<Self, ContourError> {
        let d = lower.len();
        Self::new(lower, upper, vec![n; d])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        let n = self.resolution[axis];
        if n == 1 {
            return 0.5 * (self.lower[axis] + self.upper[axis]);
        }
        self.lower[axis] + (self.upper[axis] - self.lower[axis]) * i as f64 / (n - 1) as f64
    }

    /// Multi-index of flat node `k`.
    pub fn index(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            idx[axis] = k % self.resolution[axis];
            k /= self.resolution[axis];
        }
        idx
    }

    pub fn point(&self, k: usize) -> Vec<f64> {
        self.index(k).iter().enumerate().map(|(axis, &i)| self.coord(axis, i)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Raster {
    pub grid: Grid,
    pub time: Option<f64>,
    pub delta: f64,
    pub cells: Vec<RiskEvaluation>,
}

impl Raster {
    pub fn member_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_member()).count()
    }

    pub fn members(&self) -> Vec<bool> {
        self.cells.iter().map(RiskEvaluation::is_member).collect()
    }
}

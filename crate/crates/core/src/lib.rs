//! Risk-bounded continuous-time trajectory planning around uncertain
//! polynomial obstacles.
//!
//! Obstacles are semialgebraic sets `{x : P(x, w[, t]) >= 0}` whose
//! parameters `w` are random. A [`contour::RiskContour`] turns the first two
//! moments of `P` into a deterministic inner approximation of the set of
//! points whose collision probability is at most `delta`. Trajectory pieces
//! are polynomial in time, so membership over a whole interval reduces to
//! univariate sign certificates ([`poly::certify_nonpositive`]), which the
//! RRT planners in [`planner`] use as their edge check. The [`oracle`]
//! module provides seeded Monte Carlo estimates used to validate all of it.

pub mod contour;
pub mod oracle;
pub mod planner;
pub mod poly;
pub mod safety;
pub mod uncertainty;

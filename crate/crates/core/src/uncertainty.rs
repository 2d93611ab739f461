//! Distributions of uncertain parameters, their raw moments, and the
//! expectation operator that integrates uncertain variables out of a
//! polynomial.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::poly::{MultiPoly, PolyError, VarClass};

/// Tolerance on the smallest Hankel eigenvalue of a user moment table.
pub const HANKEL_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UncertaintyError {
    #[error("invalid {family} parameters: {reason}")]
    InvalidParameters { family: &'static str, reason: String },
    #[error("moment of order {order} requested but the table only reaches order {max}")]
    MomentOrderExceeded { order: usize, max: usize },
    #[error("moment table is not a valid moment sequence: {0}")]
    InvalidMomentTable(String),
    #[error("uncertain variable `{0}` has no distribution")]
    Uncovered(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Probability law of one scalar uncertain parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Uniform { lower: f64, upper: f64 },
    /// Parameterized by variance, not standard deviation.
    Normal { mean: f64, variance: f64 },
    /// Beta law on `[0, 1]`.
    Beta { a: f64, b: f64 },
    /// Raw moments `m_0 = 1, m_1, ..., m_K` of an arbitrary law.
    MomentTable(Vec<f64>),
}

impl Distribution {
    pub fn uniform(lower: f64, upper: f64) -> Result<Self, UncertaintyError> {
        Self::Uniform { lower, upper }.validated()
    }

    pub fn normal(mean: f64, variance: f64) -> Result<Self, UncertaintyError> {
        Self::Normal { mean, variance }.validated()
    }

    pub fn beta(a: f64, b: f64) -> Result<Self, UncertaintyError> {
        Self::Beta { a, b }.validated()
    }

    pub fn moment_table(moments: Vec<f64>) -> Result<Self, UncertaintyError> {
        Self::MomentTable(moments).validated()
    }

    pub fn validated(self) -> Result<Self, UncertaintyError> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), UncertaintyError> {
        let bad = |family: &'static str, reason: String| Err(UncertaintyError::InvalidParameters { family, reason });
        match *self {
            Self::Uniform { lower, upper } => {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return bad("uniform", format!("need lower < upper, got [{lower}, {upper}]"));
                }
            }
            Self::Normal { mean, variance } => {
                if !(mean.is_finite() && variance.is_finite() && variance > 0.0) {
                    return bad("normal", format!("need finite mean and variance > 0, got ({mean}, {variance})"));
                }
            }
            Self::Beta { a, b } => {
                if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
                    return bad("beta", format!("need a > 0 and b > 0, got ({a}, {b})"));
                }
            }
            Self::MomentTable(ref m) => check_moment_table(m)?,
        }
        Ok(())
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Uniform { .. } => "uniform",
            Self::Normal { .. } => "normal",
            Self::Beta { .. } => "beta",
            Self::MomentTable(_) => "moments",
        }
    }

    /// Raw moment `E[w^order]`.
    pub fn moment(&self, order: usize) -> Result<f64, UncertaintyError> {
        Ok(self.moments(order)?[order])
    }

    /// Raw moments of orders `0..=max_order`.
    pub fn moments(&self, max_order: usize) -> Result<Vec<f64>, UncertaintyError> {
        let mut m = Vec::with_capacity(max_order + 1);
        m.push(1.0);
        match *self {
            Self::Uniform { lower, upper } => {
                for k in 1..=max_order {
                    let k1 = k as f64 + 1.0;
                    m.push((upper.powi(k as i32 + 1) - lower.powi(k as i32 + 1)) / (k1 * (upper - lower)));
                }
            }
            Self::Normal { mean, variance } => {
                // M_k = mean M_{k-1} + (k-1) variance M_{k-2}
                for k in 1..=max_order {
                    let prev2 = if k >= 2 { m[k - 2] } else { 0.0 };
                    m.push(mean * m[k - 1] + (k as f64 - 1.0) * variance * prev2);
                }
            }
            Self::Beta { a, b } => {
                for k in 1..=max_order {
                    let kf = k as f64;
                    m.push((a + kf - 1.0) / (a + b + kf - 1.0) * m[k - 1]);
                }
            }
            Self::MomentTable(ref table) => {
                if max_order >= table.len() {
                    return Err(UncertaintyError::MomentOrderExceeded {
                        order: max_order,
                        max: table.len().saturating_sub(1),
                    });
                }
                return Ok(table[..=max_order].to_vec());
            }
        }
        Ok(m)
    }

    pub fn mean(&self) -> f64 {
        self.moment(1).unwrap_or(f64::NAN)
    }
}

fn check_moment_table(m: &[f64]) -> Result<(), UncertaintyError> {
    if m.is_empty() || (m[0] - 1.0).abs() > 1e-12 {
        return Err(UncertaintyError::InvalidMomentTable("m_0 must equal 1".into()));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(UncertaintyError::InvalidMomentTable("non-finite entry".into()));
    }
    let half = (m.len() - 1) / 2;
    let hankel = DMatrix::from_fn(half + 1, half + 1, |i, j| m[i + j]);
    let min_eig = hankel.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -HANKEL_TOL {
        return Err(UncertaintyError::InvalidMomentTable(format!(
            "Hankel matrix of order {half} has eigenvalue {min_eig:e}"
        )));
    }
    Ok(())
}

/// Distributions of the uncertain variables of one obstacle, keyed by
/// variable name. Different variables are independent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OmegaModel {
    dists: BTreeMap<String, Distribution>,
}

impl OmegaModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, dist: Distribution) -> Self {
        self.insert(name, dist);
        self
    }

    pub fn insert(&mut self, name: impl Into<String>, dist: Distribution) {
        self.dists.insert(name.into(), dist);
    }

    pub fn get(&self, name: &str) -> Option<&Distribution> {
        self.dists.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Distribution)> {
        self.dists.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.dists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dists.is_empty()
    }

    /// Every uncertain variable used by `p` must have a distribution.
    pub fn check_covers(&self, p: &MultiPoly) -> Result<(), UncertaintyError> {
        let space = p.space();
        for i in space.uncertain_indices() {
            if p.uses(i) && !self.dists.contains_key(space.name(i)) {
                return Err(UncertaintyError::Uncovered(space.name(i).to_string()));
            }
        }
        Ok(())
    }
}

/// `E[p]` over every variable that has an entry in `model`.
///
/// Uncertain variables used by `p` must all be covered. Non-uncertain
/// variables (such as time, for average-risk bounds) are integrated out too
/// when the model names them.
pub fn expectation(p: &MultiPoly, model: &OmegaModel) -> Result<MultiPoly, UncertaintyError> {
    model.check_covers(p)?;
    let space = p.space().clone();
    let mut out = p.clone();
    for i in 0..space.len() {
        let Some(dist) = model.get(space.name(i)) else {
            continue;
        };
        if space.class(i) != VarClass::Uncertain && !out.uses(i) {
            continue;
        }
        let deg = out.degree_in(i) as usize;
        let moments = dist.moments(deg)?;
        out = out.integrate_out(i, &moments);
    }
    Ok(out)
}

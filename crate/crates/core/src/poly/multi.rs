use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::uni::UniPoly;
use super::varspace::{VarClass, VarSpace};
use super::{PolyError, CANON_EPS, MAX_TOTAL_DEGREE};

type Exponents = Vec<u32>;

/// Sparse real polynomial over a [`VarSpace`].
///
/// Terms are kept in a `BTreeMap` keyed by exponent vector so iteration order
/// (and therefore every floating-point sum built from it) is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    space: Arc<VarSpace>,
    terms: BTreeMap<Exponents, f64>,
}

impl MultiPoly {
    pub fn zero(space: Arc<VarSpace>) -> Self {
        Self { space, terms: BTreeMap::new() }
    }

    pub fn constant(space: Arc<VarSpace>, c: f64) -> Self {
        let n = space.len();
        let mut p = Self::zero(space);
        p.accumulate(vec![0; n], c);
        p.canonicalize();
        p
    }

    /// The polynomial consisting of the single variable `name`.
    pub fn var(space: Arc<VarSpace>, name: &str) -> Result<Self, PolyError> {
        let idx = space.require(name)?;
        let mut e = vec![0; space.len()];
        e[idx] = 1;
        Self::from_terms(space, [(e, 1.0)])
    }

    pub fn from_terms<I>(space: Arc<VarSpace>, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Exponents, f64)>,
    {
        let mut p = Self::zero(space);
        for (e, c) in terms {
            if e.len() != p.space.len() {
                return Err(PolyError::Arity { expected: p.space.len(), got: e.len() });
            }
            let deg: u32 = e.iter().sum();
            if deg > MAX_TOTAL_DEGREE {
                return Err(PolyError::DegreeOverflow(deg));
            }
            p.accumulate(e, c);
        }
        p.canonicalize();
        Ok(p)
    }

    /// Build from `(coefficient, [(variable name, exponent)])` pairs.
    pub fn from_named_terms<'a, I>(space: Arc<VarSpace>, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (f64, Vec<(&'a str, u32)>)>,
    {
        let mut resolved = Vec::new();
        for (c, powers) in terms {
            let mut e = vec![0; space.len()];
            for (name, k) in powers {
                e[space.require(name)?] += k;
            }
            resolved.push((e, c));
        }
        Self::from_terms(space, resolved)
    }

    pub fn space(&self) -> &Arc<VarSpace> {
        &self.space
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exps: &[u32]) -> f64 {
        self.terms.get(exps).copied().unwrap_or(0.0)
    }

    /// Coefficient of the monomial given by `(name, exponent)` pairs.
    pub fn coeff_named(&self, powers: &[(&str, u32)]) -> Result<f64, PolyError> {
        let mut e = vec![0; self.space.len()];
        for &(name, k) in powers {
            e[self.space.require(name)?] += k;
        }
        Ok(self.coeff(&e))
    }

    pub fn constant_term(&self) -> f64 {
        self.coeff(&vec![0; self.space.len()])
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e[var]).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Whether any term has a positive exponent on variable `var`.
    pub fn uses(&self, var: usize) -> bool {
        self.terms.keys().any(|e| e[var] > 0)
    }

    pub fn uses_class(&self, class: VarClass) -> bool {
        (0..self.space.len()).any(|i| self.space.class(i) == class && self.uses(i))
    }

    fn check_space(&self, other: &Self) -> Result<(), PolyError> {
        if Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space {
            Ok(())
        } else {
            Err(PolyError::SpaceMismatch)
        }
    }

    fn accumulate(&mut self, e: Exponents, c: f64) {
        *self.terms.entry(e).or_insert(0.0) += c;
    }

    fn canonicalize(&mut self) {
        self.terms.retain(|_, c| c.abs() >= CANON_EPS);
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_space(other)?;
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.accumulate(e.clone(), c);
        }
        out.canonicalize();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_space(other)?;
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.accumulate(e.clone(), -c);
        }
        out.canonicalize();
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_space(other)?;
        let deg = self.total_degree() + other.total_degree();
        if !self.is_zero() && !other.is_zero() && deg > MAX_TOTAL_DEGREE {
            return Err(PolyError::DegreeOverflow(deg));
        }
        let mut out = Self::zero(self.space.clone());
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.accumulate(e, ca * cb);
            }
        }
        out.canonicalize();
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.space.clone());
        for (e, &c) in &self.terms {
            out.accumulate(e.clone(), c * s);
        }
        out.canonicalize();
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn square(&self) -> Result<Self, PolyError> {
        self.mul(self)
    }

    pub fn pow(&self, k: u32) -> Result<Self, PolyError> {
        let mut acc = Self::constant(self.space.clone(), 1.0);
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Evaluate with a value for every variable of the space.
    pub fn evaluate(&self, values: &[f64]) -> Result<f64, PolyError> {
        if values.len() != self.space.len() {
            return Err(PolyError::Arity { expected: self.space.len(), got: values.len() });
        }
        Ok(self.eval_unchecked(|i| values[i]))
    }

    /// Evaluate with values only for the variables that appear in `self`.
    pub fn evaluate_partial(&self, values: &[Option<f64>]) -> Result<f64, PolyError> {
        if values.len() != self.space.len() {
            return Err(PolyError::Arity { expected: self.space.len(), got: values.len() });
        }
        for i in 0..self.space.len() {
            if values[i].is_none() && self.uses(i) {
                return Err(PolyError::MissingValue(self.space.name(i).to_string()));
            }
        }
        Ok(self.eval_unchecked(|i| values[i].unwrap_or(0.0)))
    }

    pub(crate) fn eval_unchecked(&self, value: impl Fn(usize) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(e, &c)| {
                e.iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .fold(c, |acc, (i, &k)| acc * value(i).powi(k as i32))
            })
            .sum()
    }

    /// Replace every variable that has `Some(value)` by that number.
    pub fn fix(&self, values: &[Option<f64>]) -> Result<Self, PolyError> {
        if values.len() != self.space.len() {
            return Err(PolyError::Arity { expected: self.space.len(), got: values.len() });
        }
        let mut out = Self::zero(self.space.clone());
        for (e, &c) in &self.terms {
            let mut c = c;
            let mut rest = e.clone();
            for (i, v) in values.iter().enumerate() {
                if let Some(v) = v {
                    if rest[i] > 0 {
                        c *= v.powi(rest[i] as i32);
                        rest[i] = 0;
                    }
                }
            }
            out.accumulate(rest, c);
        }
        out.canonicalize();
        Ok(out)
    }

    /// Compose with a trajectory: each state variable is replaced by its
    /// curve in the space's time variable. `curves` is ordered like
    /// [`VarSpace::state_indices`]; missing trailing entries are only an
    /// error if the corresponding variable is used.
    pub fn substitute_trajectory(&self, curves: &[UniPoly]) -> Result<Self, PolyError> {
        let states = self.space.state_indices();
        for (slot, &idx) in states.iter().enumerate() {
            if slot >= curves.len() && self.uses(idx) {
                return Err(PolyError::MissingCurve(self.space.name(idx).to_string()));
            }
        }
        if !states.iter().any(|&i| self.uses(i)) {
            return Ok(self.clone());
        }
        let time = self.space.time_index().ok_or(PolyError::NoTimeVariable)?;

        // powers[slot][k] = curve_slot^k
        let mut powers: Vec<Vec<UniPoly>> = Vec::with_capacity(states.len());
        for (slot, &idx) in states.iter().enumerate() {
            let maxk = self.degree_in(idx) as usize;
            let mut list = vec![UniPoly::constant(1.0)];
            for k in 1..=maxk {
                let next = list[k - 1].mul(&curves[slot]);
                list.push(next);
            }
            powers.push(list);
        }

        let mut out = Self::zero(self.space.clone());
        for (e, &c) in &self.terms {
            let mut factor = UniPoly::constant(c);
            let mut rest = e.clone();
            for (slot, &idx) in states.iter().enumerate() {
                if e[idx] > 0 {
                    factor = factor.mul(&powers[slot][e[idx] as usize]);
                    rest[idx] = 0;
                }
            }
            for (j, &cj) in factor.coeffs().iter().enumerate() {
                let mut ej = rest.clone();
                ej[time] += j as u32;
                if ej.iter().sum::<u32>() > MAX_TOTAL_DEGREE {
                    return Err(PolyError::DegreeOverflow(ej.iter().sum()));
                }
                out.accumulate(ej, cj);
            }
        }
        out.canonicalize();
        Ok(out)
    }

    /// Dense univariate form; only the time variable may appear.
    pub fn to_univariate(&self) -> Result<UniPoly, PolyError> {
        let time = self.space.time_index();
        for i in 0..self.space.len() {
            if Some(i) != time && self.uses(i) {
                return Err(PolyError::NotUnivariate(self.space.name(i).to_string()));
            }
        }
        let deg = time.map(|t| self.degree_in(t) as usize).unwrap_or(0);
        let mut c = vec![0.0; deg + 1];
        for (e, &v) in &self.terms {
            let k = time.map(|t| e[t] as usize).unwrap_or(0);
            c[k] += v;
        }
        Ok(UniPoly::new(c))
    }

    /// Replace exponents of variable `var` by `moments[k]`. Used by the
    /// expectation operator; `moments` must cover `degree_in(var)`.
    pub(crate) fn integrate_out(&self, var: usize, moments: &[f64]) -> Self {
        let mut out = Self::zero(self.space.clone());
        for (e, &c) in &self.terms {
            let k = e[var] as usize;
            let mut rest = e.clone();
            rest[var] = 0;
            out.accumulate(rest, c * moments[k]);
        }
        out.canonicalize();
        out
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        // graded order: low total degree first
        let mut terms: Vec<(&Exponents, f64)> = self.terms.iter().map(|(e, &c)| (e, c)).collect();
        terms.sort_by_key(|(e, _)| (e.iter().sum::<u32>(), std::cmp::Reverse((*e).clone())));
        for (n, (e, c)) in terms.into_iter().enumerate() {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| {
                    if k == 1 {
                        self.space.name(i).to_string()
                    } else {
                        format!("{}^{}", self.space.name(i), k)
                    }
                })
                .collect();
            let mag = c.abs();
            let body = if mono.is_empty() {
                format!("{mag}")
            } else if mag == 1.0 {
                mono.join("*")
            } else {
                format!("{mag}*{}", mono.join("*"))
            };
            match (n, c < 0.0) {
                (0, false) => write!(f, "{body}")?,
                (0, true) => write!(f, "-{body}")?,
                (_, false) => write!(f, " + {body}")?,
                (_, true) => write!(f, " - {body}")?,
            }
        }
        Ok(())
    }
}

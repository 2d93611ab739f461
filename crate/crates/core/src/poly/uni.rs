use std::fmt;

use super::CANON_EPS;

/// Dense univariate polynomial `c[0] + c[1] t + ... + c[d] t^d`.
///
/// The leading coefficient is nonzero unless the polynomial is identically
/// zero, in which case the coefficient list is empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UniPoly {
    coeffs: Vec<f64>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last().is_some_and(|c| c.abs() < CANON_EPS) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `a + b t`.
    pub fn linear(a: f64, b: f64) -> Self {
        Self::new(vec![a, b])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, t: f64) -> f64 {
        horner(&self.coeffs, t)
    }

    pub fn derivative(&self) -> Self {
        Self::new(derivative(&self.coeffs))
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(mul(&self.coeffs, &other.coeffs))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(1.0);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// `p(offset + scale * tau)` as a polynomial in `tau`.
    pub fn compose_affine(&self, offset: f64, scale: f64) -> Self {
        // Horner in polynomial arithmetic: acc = acc * (offset + scale tau) + c_k
        let lin = [offset, scale];
        let mut acc: Vec<f64> = Vec::new();
        for &c in self.coeffs.iter().rev() {
            acc = mul(&acc, &lin);
            if acc.is_empty() {
                acc.push(c);
            } else {
                acc[0] += c;
            }
        }
        Self::new(acc)
    }

    /// Exact integral over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        let anti: Vec<f64> = std::iter::once(0.0)
            .chain(self.coeffs.iter().enumerate().map(|(k, c)| c / (k as f64 + 1.0)))
            .collect();
        horner(&anti, b) - horner(&anti, a)
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if first {
                write!(f, "{c}")?;
            } else if c < 0.0 {
                write!(f, " - {}", -c)?;
            } else {
                write!(f, " + {c}")?;
            }
            match k {
                0 => {}
                1 => f.write_str(" t")?,
                _ => write!(f, " t^{k}")?,
            }
            first = false;
        }
        Ok(())
    }
}

pub(crate) fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck)
}

pub(crate) fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, ck)| ck * k as f64).collect()
}

pub(crate) fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

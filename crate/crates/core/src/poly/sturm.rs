//! Sturm chains and the interval non-positivity certificate.
//!
//! A univariate polynomial is non-positive on `[a, b]` exactly when its
//! maximum there is non-positive. The maximum is attained at an endpoint or
//! at a critical point, and the sign pattern between consecutive real roots
//! is constant, so isolating the real roots of `p` and `p'` with Sturm chains
//! and probing those finitely many points decides the question without any
//! time discretization.

use super::uni::{derivative, horner, UniPoly};
use super::{PolyError, CANON_EPS, SIGN_TOL};

/// Result of [`certify_nonpositive`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    CertifiedNonpositive,
    Violated,
    /// All coefficients are below the canonicalization threshold.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalVerdict {
    pub outcome: Outcome,
    /// Present iff `outcome == Violated`; lies in the queried interval.
    pub witness: Option<f64>,
    /// Smallest slack `-p(t)` over the probed points (negative when violated).
    pub margin: f64,
}

impl IntervalVerdict {
    pub fn is_certified(&self) -> bool {
        self.outcome == Outcome::CertifiedNonpositive
    }
}

fn normalize(mut c: Vec<f64>) -> Vec<f64> {
    let m = c.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if m > 0.0 {
        for x in &mut c {
            *x /= m;
        }
    }
    c
}

fn trim_relative(mut c: Vec<f64>, scale: f64) -> Vec<f64> {
    let thresh = CANON_EPS * scale;
    while c.last().is_some_and(|x| x.abs() <= thresh) {
        c.pop();
    }
    c
}

/// Polynomial long division, returning `(quotient, remainder)`.
fn divide(num: &[f64], den: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let dd = den.len() - 1;
    let lead = den[dd];
    let mut rem = num.to_vec();
    if num.len() < den.len() {
        return (Vec::new(), rem);
    }
    let mut quot = vec![0.0; num.len() - dd];
    for k in (0..quot.len()).rev() {
        let q = rem[k + dd] / lead;
        quot[k] = q;
        for (j, d) in den.iter().enumerate() {
            rem[k + j] -= q * d;
        }
        rem[k + dd] = 0.0;
    }
    rem.truncate(dd);
    (quot, rem)
}

/// Remainder sequence `p, p', -rem(p, p'), ...`, each member normalized to
/// unit max-norm. Remainders below `CANON_EPS` relative to their dividend are
/// treated as zero.
fn remainder_sequence(p: &[f64]) -> Vec<Vec<f64>> {
    let mut seq = vec![normalize(p.to_vec())];
    let d = trim_relative(normalize(derivative(p)), 1.0);
    if d.is_empty() {
        return seq;
    }
    seq.push(d);
    loop {
        let n = seq.len();
        let (_, r) = divide(&seq[n - 2], &seq[n - 1]);
        let r = trim_relative(r, 1.0);
        if r.is_empty() {
            break;
        }
        seq.push(normalize(r.into_iter().map(|x| -x).collect()));
    }
    seq
}

/// Sturm chain of the square-free part of a polynomial.
struct Chain {
    seq: Vec<Vec<f64>>,
}

impl Chain {
    fn new(p: &[f64]) -> Self {
        let seq = remainder_sequence(p);
        let gcd = seq.last().expect("nonempty");
        if seq.len() > 1 && gcd.len() > 1 {
            // repeated roots: deflate by gcd(p, p') and rebuild
            let (sq_free, _) = divide(&seq[0], gcd);
            let sq_free = trim_relative(sq_free, 1.0);
            if !sq_free.is_empty() {
                return Self { seq: remainder_sequence(&sq_free) };
            }
        }
        Self { seq }
    }

    fn base(&self) -> &[f64] {
        &self.seq[0]
    }

    fn variations(&self, x: f64) -> usize {
        let mut count = 0;
        let mut last = 0.0_f64;
        for f in &self.seq {
            let v = horner(f, x);
            if v == 0.0 {
                continue;
            }
            if last != 0.0 && (v > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = v;
        }
        count
    }

    /// Distinct roots in `(a, b]`.
    fn count(&self, a: f64, b: f64) -> usize {
        self.variations(a).saturating_sub(self.variations(b))
    }

    fn isolate(&self, lo: f64, hi: f64, out: &mut Vec<f64>) {
        let n = self.count(lo, hi);
        self.isolate_counted(lo, hi, n, 0, out);
    }

    fn isolate_counted(&self, lo: f64, hi: f64, n: usize, depth: u32, out: &mut Vec<f64>) {
        if n == 0 {
            return;
        }
        if n == 1 {
            out.push(self.refine(lo, hi));
            return;
        }
        let mid = 0.5 * (lo + hi);
        if depth > 80 || mid <= lo || mid >= hi {
            // root cluster below floating-point resolution
            out.push(mid);
            return;
        }
        let left = self.count(lo, mid).min(n);
        self.isolate_counted(lo, mid, left, depth + 1, out);
        self.isolate_counted(mid, hi, n - left, depth + 1, out);
    }

    /// Refine the single root in `(lo, hi]`.
    fn refine(&self, mut lo: f64, mut hi: f64) -> f64 {
        let f = self.base();
        let mut flo = horner(f, lo);
        let fhi = horner(f, hi);
        if fhi == 0.0 {
            return hi;
        }
        let sign_change = flo != 0.0 && (flo > 0.0) != (fhi > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sign_change {
                let fm = horner(f, mid);
                if fm == 0.0 {
                    return mid;
                }
                if (fm > 0.0) == (flo > 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            } else if self.count(lo, mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn check_interval(a: f64, b: f64) -> Result<(), PolyError> {
    if a < b && a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(PolyError::EmptyInterval(a, b))
    }
}

/// Number of distinct real roots of `p` in `(a, b]`.
pub fn sturm_root_count(p: &UniPoly, a: f64, b: f64) -> Result<usize, PolyError> {
    check_interval(a, b)?;
    if p.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    let q = p.compose_affine(a, b - a);
    if q.is_zero() {
        return Ok(0);
    }
    Ok(Chain::new(q.coeffs()).count(0.0, 1.0))
}

/// Distinct real roots of `p` in `(a, b]`, ascending.
pub fn real_roots(p: &UniPoly, a: f64, b: f64) -> Result<Vec<f64>, PolyError> {
    check_interval(a, b)?;
    if p.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    let q = p.compose_affine(a, b - a);
    Ok(unit_roots(q.coeffs()).into_iter().map(|tau| a + (b - a) * tau).collect())
}

fn unit_roots(q: &[f64]) -> Vec<f64> {
    if q.len() < 2 {
        return Vec::new();
    }
    let chain = Chain::new(q);
    let mut out = Vec::new();
    chain.isolate(0.0, 1.0, &mut out);
    out.sort_by(f64::total_cmp);
    out
}

/// Decide whether `p(t) <= 0` for every `t` in `[a, b]`, up to
/// [`SIGN_TOL`]. A polynomial touching zero from below is certified.
pub fn certify_nonpositive(p: &UniPoly, a: f64, b: f64) -> Result<IntervalVerdict, PolyError> {
    check_interval(a, b)?;
    if p.max_abs_coeff() < CANON_EPS {
        return Ok(IntervalVerdict { outcome: Outcome::Degenerate, witness: None, margin: 0.0 });
    }
    let h = b - a;
    let q = p.compose_affine(a, h);
    let eval = |tau: f64| p.eval(a + h * tau);

    let mut probes = vec![0.0, 1.0];
    let roots = unit_roots(q.coeffs());
    let mut knots = Vec::with_capacity(roots.len() + 2);
    knots.push(0.0);
    knots.extend(roots.iter().copied());
    knots.push(1.0);
    probes.extend(knots.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    probes.extend(roots);
    let dq = derivative(q.coeffs());
    probes.extend(unit_roots(&dq));

    let (mut best_tau, mut best) = (0.0, f64::NEG_INFINITY);
    for &tau in &probes {
        let tau = tau.clamp(0.0, 1.0);
        let v = eval(tau);
        if v > best {
            best = v;
            best_tau = tau;
        }
    }
    if best > SIGN_TOL {
        Ok(IntervalVerdict {
            outcome: Outcome::Violated,
            witness: Some((a + h * best_tau).clamp(a, b)),
            margin: -best,
        })
    } else {
        Ok(IntervalVerdict { outcome: Outcome::CertifiedNonpositive, witness: None, margin: -best })
    }
}

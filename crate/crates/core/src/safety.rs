//! Continuous-time safety verification of polynomial trajectory pieces
//! against risk contours.

use std::fmt;

use thiserror::Error;

use crate::contour::{ContourError, CurveKind, RiskContour};
use crate::poly::{certify_nonpositive, IntervalVerdict, Outcome, PolyError, UniPoly};

/// Junction position mismatch tolerated between consecutive pieces.
pub const CONTINUITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SafetyError {
    #[error("segment has {got} curves, state dimension is {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("segment interval [{0}, {1}] is empty")]
    EmptyInterval(f64, f64),
    #[error("trajectory has no segments")]
    Empty,
    #[error("segment {index} starts at t = {start} but the previous one ends at t = {prev_end}")]
    TimeGap { index: usize, prev_end: f64, start: f64 },
    #[error("position jump of {gap:e} at the start of segment {index}")]
    Discontinuous { index: usize, gap: f64 },
    #[error(transparent)]
    Contour(#[from] ContourError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// One polynomial piece `x(t)`, `t` in `[t1, t2]`, in absolute time.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    curves: Vec<UniPoly>,
    t1: f64,
    t2: f64,
}

impl Segment {
    pub fn new(curves: Vec<UniPoly>, t1: f64, t2: f64) -> Result<Self, SafetyError> {
        if !(t1 < t2) || !t1.is_finite() || !t2.is_finite() {
            return Err(SafetyError::EmptyInterval(t1, t2));
        }
        Ok(Self { curves, t1, t2 })
    }

    /// Straight piece from `p` at `t1` to `q` at `t2` at constant velocity.
    pub fn linear(p: &[f64], q: &[f64], t1: f64, t2: f64) -> Result<Self, SafetyError> {
        if p.len() != q.len() {
            return Err(SafetyError::Dimension { expected: p.len(), got: q.len() });
        }
        if !(t1 < t2) {
            return Err(SafetyError::EmptyInterval(t1, t2));
        }
        let h = t2 - t1;
        let curves = p
            .iter()
            .zip(q)
            .map(|(&a, &b)| {
                let v = (b - a) / h;
                UniPoly::linear(a - v * t1, v)
            })
            .collect();
        Self::new(curves, t1, t2)
    }

    pub fn curves(&self) -> &[UniPoly] {
        &self.curves
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn dim(&self) -> usize {
        self.curves.len()
    }

    pub fn position(&self, t: f64) -> Vec<f64> {
        self.curves.iter().map(|c| c.eval(t)).collect()
    }

    pub fn start(&self) -> Vec<f64> {
        self.position(self.t1)
    }

    pub fn end(&self) -> Vec<f64> {
        self.position(self.t2)
    }

    /// Same geometric path traversed over `[s1, s2]` instead.
    pub fn retimed(&self, s1: f64, s2: f64) -> Result<Self, SafetyError> {
        if !(s1 < s2) {
            return Err(SafetyError::EmptyInterval(s1, s2));
        }
        // t = t1 + (s - s1) * k
        let k = (self.t2 - self.t1) / (s2 - s1);
        let curves = self.curves.iter().map(|c| c.compose_affine(self.t1 - s1 * k, k)).collect();
        Self::new(curves, s1, s2)
    }
}

/// Ordered pieces tiling `[t0, tf]` with a continuous path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    segments: Vec<Segment>,
}

impl Trajectory {
    pub fn new(segments: Vec<Segment>) -> Result<Self, SafetyError> {
        let first = segments.first().ok_or(SafetyError::Empty)?;
        let dim = first.dim();
        for (i, s) in segments.iter().enumerate() {
            if s.dim() != dim {
                return Err(SafetyError::Dimension { expected: dim, got: s.dim() });
            }
            if i == 0 {
                continue;
            }
            let prev = &segments[i - 1];
            if (prev.t2 - s.t1).abs() > CONTINUITY_TOL {
                return Err(SafetyError::TimeGap { index: i, prev_end: prev.t2, start: s.t1 });
            }
            let gap = prev
                .end()
                .iter()
                .zip(s.start())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if gap > CONTINUITY_TOL {
                return Err(SafetyError::Discontinuous { index: i, gap });
            }
        }
        Ok(Self { segments })
    }

    /// Piecewise-linear path through `waypoints` with the given knot times.
    pub fn through(waypoints: &[Vec<f64>], times: &[f64]) -> Result<Self, SafetyError> {
        if waypoints.len() < 2 || waypoints.len() != times.len() {
            return Err(SafetyError::Empty);
        }
        let segs = waypoints
            .windows(2)
            .zip(times.windows(2))
            .map(|(w, t)| Segment::linear(&w[0], &w[1], t[0], t[1]))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(segs)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn t0(&self) -> f64 {
        self.segments[0].t1
    }

    pub fn tf(&self) -> f64 {
        self.segments[self.segments.len() - 1].t2
    }

    pub fn dim(&self) -> usize {
        self.segments[0].dim()
    }

    /// Position at `t`, clamped to the horizon.
    pub fn position(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(self.t0(), self.tf());
        let seg = self.segments.iter().find(|s| t <= s.t2).unwrap_or(&self.segments[self.segments.len() - 1]);
        seg.position(t)
    }

    /// Segment endpoints: start of every piece plus the final point.
    pub fn waypoints(&self) -> Vec<Vec<f64>> {
        let mut w: Vec<Vec<f64>> = self.segments.iter().map(Segment::start).collect();
        w.push(self.segments[self.segments.len() - 1].end());
        w
    }

    pub fn knot_times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.segments.iter().map(|s| s.t1).collect();
        t.push(self.tf());
        t
    }
}

/// Verdict for one constraint curve of one obstacle on one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveCheck {
    pub segment: usize,
    pub obstacle: String,
    pub curve: CurveKind,
    pub t1: f64,
    pub t2: f64,
    pub verdict: IntervalVerdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafetyReport {
    pub checks: Vec<CurveCheck>,
}

impl SafetyReport {
    pub fn is_safe(&self) -> bool {
        self.checks.iter().all(|c| c.verdict.is_certified())
    }

    /// First failing check in segment order.
    pub fn first_violation(&self) -> Option<&CurveCheck> {
        self.checks.iter().find(|c| !c.verdict.is_certified())
    }

    fn merge(&mut self, other: SafetyReport) {
        self.checks.extend(other.checks);
    }
}

impl fmt::Display for SafetyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# safety report format_version=1")?;
        writeln!(f, "overall: {}", if self.is_safe() { "safe" } else { "violated" })?;
        if let Some(v) = self.first_violation() {
            match v.verdict.witness {
                Some(w) => writeln!(
                    f,
                    "first_violation: segment={} obstacle={} curve={} t={}",
                    v.segment, v.obstacle, v.curve, w
                )?,
                None => writeln!(
                    f,
                    "first_violation: segment={} obstacle={} curve={} degenerate",
                    v.segment, v.obstacle, v.curve
                )?,
            }
        }
        for c in &self.checks {
            let verdict = match c.verdict.outcome {
                Outcome::CertifiedNonpositive => "certified".to_string(),
                Outcome::Violated => format!("violated witness_t={}", c.verdict.witness.unwrap_or(f64::NAN)),
                Outcome::Degenerate => "degenerate".to_string(),
            };
            writeln!(
                f,
                "segment={} t=[{}, {}] obstacle={} curve={} verdict={} margin={:.6e}",
                c.segment, c.t1, c.t2, c.obstacle, c.curve, verdict, c.verdict.margin
            )?;
        }
        Ok(())
    }
}

/// Check every contour's constraint curves on `seg`.
pub fn verify_segment(contours: &[RiskContour], seg: &Segment) -> Result<SafetyReport, SafetyError> {
    verify_indexed(contours, seg, 0)
}

fn verify_indexed(contours: &[RiskContour], seg: &Segment, index: usize) -> Result<SafetyReport, SafetyError> {
    let mut checks = Vec::with_capacity(3 * contours.len());
    for c in contours {
        let curves = c.constraint_curves(seg.curves())?;
        for (kind, g) in curves.iter() {
            let verdict = certify_nonpositive(g, seg.t1, seg.t2)?;
            checks.push(CurveCheck {
                segment: index,
                obstacle: c.obstacle().to_string(),
                curve: kind,
                t1: seg.t1,
                t2: seg.t2,
                verdict,
            });
        }
    }
    Ok(SafetyReport { checks })
}

/// Fast yes/no variant used inside planners: stops at the first failure.
pub fn segment_is_safe(contours: &[RiskContour], seg: &Segment) -> Result<bool, SafetyError> {
    for c in contours {
        let curves = c.constraint_curves(seg.curves())?;
        for (_, g) in curves.iter() {
            if !certify_nonpositive(g, seg.t1, seg.t2)?.is_certified() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn verify_trajectory(contours: &[RiskContour], traj: &Trajectory) -> Result<SafetyReport, SafetyError> {
    let mut report = SafetyReport { checks: Vec::new() };
    for (i, seg) in traj.segments.iter().enumerate() {
        report.merge(verify_indexed(contours, seg, i)?);
    }
    Ok(report)
}

//! Seeded Monte Carlo estimates of collision probabilities.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)` and switched to `stream`; results are reproducible
//! across platforms. Uniform parameters are affine images of unit uniforms,
//! normal ones use the Box-Muller transform, beta ones are `X / (X + Y)` for
//! independent gamma draws.
//!
//! Estimates for many query points share one bank of parameter samples, so
//! a validation sweep over a grid costs one pass per point over the bank.

use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Gamma, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::contour::{Grid, RiskContour, UncertainObstacle};
use crate::poly::VarClass;
use crate::safety::Trajectory;
use crate::uncertainty::Distribution;

pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("at least {MIN_SAMPLES} samples required, got {0}")]
    TooFewSamples(usize),
    #[error("at least 10 time samples required, got {0}")]
    TooFewTimes(usize),
    #[error("obstacle `{obstacle}`: variable `{var}` has a moment-table law, which cannot be sampled")]
    Unsupported { obstacle: String, var: String },
    #[error("obstacle `{0}` is dynamic; a time is required")]
    MissingTime(String),
    #[error("expected {expected} state coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub stream: u64,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Result<Self, OracleError> {
        if samples < MIN_SAMPLES {
            return Err(OracleError::TooFewSamples(samples));
        }
        Ok(Self { samples, seed, stream: 0 })
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

impl McEstimate {
    fn from_count(hits: usize, n: usize, seed: u64) -> Self {
        let p = hits as f64 / n as f64;
        Self { p_hat: p, stderr: (p * (1.0 - p) / n as f64).sqrt(), n, seed }
    }

    /// `p_hat <= limit + k * stderr`.
    pub fn within(&self, limit: f64, k: f64) -> bool {
        self.p_hat <= limit + k * self.stderr
    }
}

/// Draw one value; callers must reject moment tables first.
pub(crate) fn draw(dist: &Distribution, rng: &mut ChaCha8Rng) -> f64 {
    match *dist {
        Distribution::Uniform { lower, upper } => lower + (upper - lower) * rng.random::<f64>(),
        Distribution::Normal { mean, variance } => Normal::new(mean, variance.sqrt()).expect("validated").sample(rng),
        Distribution::Beta { a, b } => {
            let x = Gamma::new(a, 1.0).expect("validated").sample(rng);
            let y = Gamma::new(b, 1.0).expect("validated").sample(rng);
            x / (x + y)
        }
        Distribution::MomentTable(_) => unreachable!("moment tables are rejected before sampling"),
    }
}

/// `n` samples of `dist` from a fresh stream; used by moment checks.
pub fn sample_distribution(dist: &Distribution, cfg: &McConfig) -> Result<Vec<f64>, OracleError> {
    if matches!(dist, Distribution::MomentTable(_)) {
        return Err(OracleError::Unsupported { obstacle: String::new(), var: "moments".into() });
    }
    let mut rng = cfg.rng();
    Ok((0..cfg.samples).map(|_| draw(dist, &mut rng)).collect())
}

/// Parameter samples for one obstacle with every uncertain monomial of its
/// polynomial precomputed per sample.
pub struct SampleBank<'a> {
    obstacle: &'a UncertainObstacle,
    n: usize,
    seed: u64,
    /// For each term of `P`, the index of its uncertain monomial.
    term_mono: Vec<usize>,
    n_mono: usize,
    /// `values[s * n_mono + m]` = monomial `m` at sample `s`.
    values: Vec<f64>,
}

impl<'a> SampleBank<'a> {
    pub fn new(obstacle: &'a UncertainObstacle, cfg: &McConfig) -> Result<Self, OracleError> {
        if cfg.samples < MIN_SAMPLES {
            return Err(OracleError::TooFewSamples(cfg.samples));
        }
        let poly = obstacle.poly();
        let space = poly.space();
        let used: Vec<usize> = space.uncertain_indices().into_iter().filter(|&i| poly.uses(i)).collect();
        let mut dists = Vec::with_capacity(used.len());
        for &i in &used {
            let d = obstacle.omega().get(space.name(i)).expect("coverage checked at construction");
            if matches!(d, Distribution::MomentTable(_)) {
                return Err(OracleError::Unsupported {
                    obstacle: obstacle.name().to_string(),
                    var: space.name(i).to_string(),
                });
            }
            dists.push(d.clone());
        }

        let mut monomials: Vec<Vec<u32>> = Vec::new();
        let mut term_mono = Vec::with_capacity(poly.num_terms());
        for (e, _) in poly.terms() {
            let key: Vec<u32> = used.iter().map(|&i| e[i]).collect();
            let m = match monomials.iter().position(|k| *k == key) {
                Some(m) => m,
                None => {
                    monomials.push(key);
                    monomials.len() - 1
                }
            };
            term_mono.push(m);
        }
        let n_mono = monomials.len();

        let mut rng = cfg.rng();
        let mut values = Vec::with_capacity(cfg.samples * n_mono);
        let mut w = vec![0.0; used.len()];
        for _ in 0..cfg.samples {
            for (slot, d) in dists.iter().enumerate() {
                w[slot] = draw(d, &mut rng);
            }
            for key in &monomials {
                values.push(key.iter().zip(&w).fold(1.0, |acc, (&k, &v)| acc * v.powi(k as i32)));
            }
        }
        Ok(Self { obstacle, n: cfg.samples, seed: cfg.seed, term_mono, n_mono, values })
    }

    /// Coefficients of `P(x, ., t)` on each uncertain monomial.
    fn reduced(&self, x: &[f64], t: Option<f64>) -> Result<Vec<f64>, OracleError> {
        let poly = self.obstacle.poly();
        let space = poly.space();
        let states = space.state_indices();
        if x.len() != states.len() {
            return Err(OracleError::Dimension { expected: states.len(), got: x.len() });
        }
        if self.obstacle.is_dynamic() && t.is_none() {
            return Err(OracleError::MissingTime(self.obstacle.name().to_string()));
        }
        let mut vals = vec![0.0; space.len()];
        for (slot, &i) in states.iter().enumerate() {
            vals[i] = x[slot];
        }
        if let (Some(ti), Some(t)) = (space.time_index(), t) {
            vals[ti] = t;
        }
        let mut coef = vec![0.0; self.n_mono];
        for ((e, c), &m) in poly.terms().zip(&self.term_mono) {
            let mut v = c;
            for (i, &k) in e.iter().enumerate() {
                if k > 0 && space.class(i) != VarClass::Uncertain {
                    v *= vals[i].powi(k as i32);
                }
            }
            coef[m] += v;
        }
        Ok(coef)
    }

    /// Fraction of samples with `P(x, w[, t]) >= 0`.
    pub fn risk_at(&self, x: &[f64], t: Option<f64>) -> Result<McEstimate, OracleError> {
        let coef = self.reduced(x, t)?;
        let hits = self
            .values
            .chunks_exact(self.n_mono.max(1))
            .take(self.n)
            .filter(|row| row.iter().zip(&coef).map(|(v, c)| v * c).sum::<f64>() >= 0.0)
            .count();
        // P identically zero: P >= 0 everywhere
        let hits = if self.n_mono == 0 { self.n } else { hits };
        Ok(McEstimate::from_count(hits, self.n, self.seed))
    }
}

/// Estimate `Prob(P(x, w[, t]) >= 0)`.
pub fn mc_point_risk(
    o: &UncertainObstacle,
    x: &[f64],
    t: Option<f64>,
    cfg: &McConfig,
) -> Result<McEstimate, OracleError> {
    SampleBank::new(o, cfg)?.risk_at(x, t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleTrajectoryRisk {
    pub obstacle: String,
    pub max: McEstimate,
    pub max_time: f64,
    pub average: f64,
    /// Mean of the per-time standard errors; bounds the spread of `average`.
    pub average_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRisk {
    pub times: usize,
    pub per_obstacle: Vec<ObstacleTrajectoryRisk>,
}

impl TrajectoryRisk {
    /// Every obstacle's worst time satisfies `p_hat <= delta + k stderr`.
    pub fn max_within(&self, delta: f64, k: f64) -> bool {
        self.per_obstacle.iter().all(|r| r.max.within(delta, k))
    }
}

impl fmt::Display for TrajectoryRisk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# trajectory risk format_version=1 time_samples={}", self.times)?;
        writeln!(f, "obstacle,max_p_hat,max_stderr,max_time,average_p_hat,average_stderr")?;
        for r in &self.per_obstacle {
            writeln!(
                f,
                "{},{},{},{},{},{}",
                r.obstacle, r.max.p_hat, r.max.stderr, r.max_time, r.average, r.average_stderr
            )?;
        }
        Ok(())
    }
}

/// Per-obstacle maximum and time average of the pointwise collision
/// probability at `m` evenly spaced times over the trajectory horizon.
/// Obstacle `i` uses stream `cfg.stream + i`.
pub fn mc_trajectory_risk(
    traj: &Trajectory,
    obstacles: &[UncertainObstacle],
    m: usize,
    cfg: &McConfig,
) -> Result<TrajectoryRisk, OracleError> {
    if m < 10 {
        return Err(OracleError::TooFewTimes(m));
    }
    let (t0, tf) = (traj.t0(), traj.tf());
    let times: Vec<f64> = (0..m).map(|i| t0 + (tf - t0) * i as f64 / (m - 1) as f64).collect();
    let mut per_obstacle = Vec::with_capacity(obstacles.len());
    for (i, o) in obstacles.iter().enumerate() {
        let bank = SampleBank::new(o, &cfg.with_stream(cfg.stream + i as u64))?;
        let estimates = times
            .par_iter()
            .map(|&t| bank.risk_at(&traj.position(t), Some(t)))
            .collect::<Result<Vec<_>, _>>()?;
        let (k, max) = estimates
            .iter()
            .enumerate()
            .fold((0, estimates[0]), |acc, (k, e)| if e.p_hat > acc.1.p_hat { (k, *e) } else { acc });
        let average = estimates.iter().map(|e| e.p_hat).sum::<f64>() / m as f64;
        let average_stderr = estimates.iter().map(|e| e.stderr).sum::<f64>() / m as f64;
        per_obstacle.push(ObstacleTrajectoryRisk {
            obstacle: o.name().to_string(),
            max,
            max_time: times[k],
            average,
            average_stderr,
        });
    }
    Ok(TrajectoryRisk { times: m, per_obstacle })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub point: Vec<f64>,
    pub bound: f64,
    pub estimate: McEstimate,
    pub violated: bool,
}

/// Outcome of checking a contour's member points against Monte Carlo.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourValidation {
    pub obstacle: String,
    pub delta: f64,
    pub time: Option<f64>,
    pub grid_points: usize,
    pub rows: Vec<ValidationRow>,
    /// Counts of `p_hat / bound` in tenths; the last bin collects ratios
    /// above one. Points with a zero bound are not binned.
    pub tightness: [usize; 11],
}

impl ContourValidation {
    pub fn violations(&self) -> Vec<&ValidationRow> {
        self.rows.iter().filter(|r| r.violated).collect()
    }

    pub fn member_points(&self) -> usize {
        self.rows.len()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let dim = self.rows.first().map_or(0, |r| r.point.len());
        let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
        header.extend(["bound", "p_hat", "stderr", "verdict"].map(String::from));
        let _ = writeln!(s, "{}", header.join(","));
        for r in &self.rows {
            let coords: Vec<String> = r.point.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                coords.join(","),
                r.bound,
                r.estimate.p_hat,
                r.estimate.stderr,
                if r.violated { "violated" } else { "ok" }
            );
        }
        s
    }
}

impl fmt::Display for ContourValidation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# contour validation format_version=1")?;
        writeln!(f, "obstacle: {}", self.obstacle)?;
        writeln!(f, "delta: {}", self.delta)?;
        if let Some(t) = self.time {
            writeln!(f, "time: {t}")?;
        }
        writeln!(f, "grid_points: {}", self.grid_points)?;
        writeln!(f, "member_points: {}", self.member_points())?;
        writeln!(f, "violations: {}", self.violations().len())?;
        writeln!(f, "tightness (p_hat / bound):")?;
        for (k, n) in self.tightness.iter().enumerate() {
            if k < 10 {
                writeln!(f, "  [{:.1}, {:.1}): {n}", k as f64 / 10.0, (k + 1) as f64 / 10.0)?;
            } else {
                writeln!(f, "  >= 1.0: {n}")?;
            }
        }
        Ok(())
    }
}

/// For every member node of `grid`, check `p_hat <= delta + 3 stderr`.
pub fn validate_contour(
    c: &RiskContour,
    o: &UncertainObstacle,
    grid: &Grid,
    t: Option<f64>,
    cfg: &McConfig,
) -> Result<ContourValidation, OracleError> {
    if o.is_dynamic() && t.is_none() {
        return Err(OracleError::MissingTime(o.name().to_string()));
    }
    let bank = SampleBank::new(o, cfg)?;
    let raster = c.rasterize(grid, t).map_err(|_| OracleError::Dimension {
        expected: o.poly().space().state_dim(),
        got: grid.dim(),
    })?;
    let members: Vec<_> = raster.cells.iter().filter(|e| e.is_member()).collect();
    let rows = members
        .par_iter()
        .map(|e| {
            let est = bank.risk_at(&e.point, t)?;
            let bound = e.bound.expect("members carry a bound");
            Ok(ValidationRow { point: e.point.clone(), bound, estimate: est, violated: !est.within(c.delta(), 3.0) })
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    let mut tightness = [0usize; 11];
    for r in &rows {
        if r.bound > 0.0 {
            let ratio = r.estimate.p_hat / r.bound;
            tightness[((ratio * 10.0).floor() as usize).min(10)] += 1;
        }
    }
    Ok(ContourValidation {
        obstacle: o.name().to_string(),
        delta: c.delta(),
        time: t,
        grid_points: grid.len(),
        rows,
        tightness,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::contour::build_contour;
    use crate::poly::{MultiPoly, VarSpace};
    use crate::uncertainty::OmegaModel;

    /// `w^2 - x1^2 - x2^2`, `w ~ U[0.3, 0.4]`.
    fn example1() -> UncertainObstacle {
        let sp = Arc::new(VarSpace::with_roles(&["x1", "x2"], &["w"], Some("t")).unwrap());
        let p = MultiPoly::from_named_terms(sp, [(1.0, vec![("w", 2)]), (-1.0, vec![("x1", 2)]), (-1.0, vec![("x2", 2)])])
            .unwrap();
        UncertainObstacle::new("ex1", p, OmegaModel::new().with("w", Distribution::uniform(0.3, 0.4).unwrap())).unwrap()
    }

    #[test]
    fn config_rejects_small_sample_counts() {
        assert_eq!(McConfig::new(10, 1), Err(OracleError::TooFewSamples(10)));
    }

    #[test]
    fn closed_form_half_risk() {
        // |x| = 0.35 is the median radius of U[0.3, 0.4]
        let o = example1();
        let e = mc_point_risk(&o, &[0.35, 0.0], None, &McConfig::new(20_000, 4).unwrap()).unwrap();
        assert!((e.p_hat - 0.5).abs() <= 3.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn zero_and_full_risk() {
        let o = example1();
        let cfg = McConfig::new(1000, 2).unwrap();
        assert_eq!(mc_point_risk(&o, &[1.0, 1.0], None, &cfg).unwrap().p_hat, 0.0);
        assert_eq!(mc_point_risk(&o, &[0.0, 0.0], None, &cfg).unwrap().p_hat, 1.0);
    }

    #[test]
    fn seeds_are_reproducible() {
        let o = example1();
        let cfg = McConfig::new(5000, 9).unwrap();
        let a = mc_point_risk(&o, &[0.33, 0.1], None, &cfg).unwrap();
        let b = mc_point_risk(&o, &[0.33, 0.1], None, &cfg).unwrap();
        assert_eq!(a, b);
        let c = mc_point_risk(&o, &[0.33, 0.1], None, &cfg.with_stream(1)).unwrap();
        assert_ne!(a.p_hat, c.p_hat);
    }

    #[test]
    fn sampled_moments_match() {
        for d in [Distribution::normal(0.1, 0.001).unwrap(), Distribution::beta(9.0, 0.5).unwrap()] {
            let xs = sample_distribution(&d, &McConfig::new(200_000, 3).unwrap()).unwrap();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
            let se = (var / xs.len() as f64).sqrt();
            assert!((m - d.mean()).abs() < 4.0 * se, "{d:?}");
        }
    }

    #[test]
    fn moment_tables_cannot_be_sampled() {
        let d = Distribution::moment_table(vec![1.0, 0.0, 1.0]).unwrap();
        assert!(sample_distribution(&d, &McConfig::new(100, 1).unwrap()).is_err());
    }

    #[test]
    fn parked_trajectory_risk() {
        let o = example1();
        let t = Trajectory::through(&[vec![1.0, 0.0], vec![1.0, 0.0]], &[0.0, 1.0]).unwrap();
        let r = mc_trajectory_risk(&t, std::slice::from_ref(&o), 20, &McConfig::new(500, 1).unwrap()).unwrap();
        assert_eq!(r.per_obstacle[0].max.p_hat, 0.0);
        assert_eq!(r.per_obstacle[0].average, 0.0);
        assert!(r.max_within(0.1, 3.0));
    }

    #[test]
    fn coarse_contour_validation_is_clean() {
        let o = example1();
        let c = build_contour(&o, 0.1).unwrap();
        let g = Grid::uniform(vec![-1.0, -1.0], vec![1.0, 1.0], 21).unwrap();
        let v = validate_contour(&c, &o, &g, None, &McConfig::new(2000, 5).unwrap()).unwrap();
        assert!(v.member_points() > 0);
        assert!(v.violations().is_empty());
        assert_eq!(v.grid_points, 441);
    }
}

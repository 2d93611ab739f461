//! Trajectory CSV.
//!
//! ```text
//! # riskbound trajectory format_version=1
//! segment,t_start,t_end,var,deg0,deg1
//! 0,0,0.5,x1,-1,2
//! 0,0,0.5,x2,-1,2
//! ...
//!
//! t,x1,x2
//! 0,-1,-1
//! ...
//! ```
//!
//! Coefficient rows are in absolute time and define the trajectory; the
//! sampled block after the blank line is for plotting and is ignored when
//! reading.

use std::fmt::Write as _;
use std::path::Path;

use riskbound_core::poly::UniPoly;
use riskbound_core::safety::{SafetyError, Segment, Trajectory};

use crate::error::CliError;

pub const TRAJECTORY_FORMAT_VERSION: u32 = 1;
pub const SAMPLES_PER_SEGMENT: usize = 200;

pub fn write_trajectory_csv(traj: &Trajectory, state_vars: &[String]) -> String {
    let ncoef = traj
        .segments()
        .iter()
        .flat_map(|s| s.curves().iter().map(|c| c.coeffs().len()))
        .max()
        .unwrap_or(1)
        .max(2);
    let mut out = format!("# riskbound trajectory format_version={TRAJECTORY_FORMAT_VERSION}\n");
    out.push_str("segment,t_start,t_end,var");
    for k in 0..ncoef {
        write!(out, ",deg{k}").unwrap();
    }
    out.push('\n');
    for (i, s) in traj.segments().iter().enumerate() {
        for (name, c) in state_vars.iter().zip(s.curves()) {
            write!(out, "{i},{},{},{name}", s.t1(), s.t2()).unwrap();
            for k in 0..ncoef {
                write!(out, ",{}", c.coeff(k)).unwrap();
            }
            out.push('\n');
        }
    }
    out.push('\n');
    out.push('t');
    for name in state_vars {
        write!(out, ",{name}").unwrap();
    }
    out.push('\n');
    for (i, s) in traj.segments().iter().enumerate() {
        // shared knots are written once
        let first = if i == 0 { 0 } else { 1 };
        for k in first..SAMPLES_PER_SEGMENT {
            let t = if k == SAMPLES_PER_SEGMENT - 1 {
                s.t2()
            } else {
                s.t1() + (s.t2() - s.t1()) * k as f64 / (SAMPLES_PER_SEGMENT - 1) as f64
            };
            write!(out, "{t}").unwrap();
            for v in s.position(t) {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

pub fn load_trajectory(path: &Path, state_vars: &[String]) -> Result<Trajectory, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    read_trajectory_csv(&text, path, state_vars)
}

pub fn read_trajectory_csv(text: &str, path: &Path, state_vars: &[String]) -> Result<Trajectory, CliError> {
    let err = |line: usize, field: Option<&str>, msg: String| CliError::input(path, Some(line), field.map(String::from), msg);
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

    // comments, then the header
    let (header_line, header) = loop {
        let Some((n, l)) = lines.next() else {
            return Err(CliError::input(path, None, None, "missing coefficient header"));
        };
        if let Some(c) = l.strip_prefix('#') {
            if let Some(v) = c.split_whitespace().find_map(|w| w.strip_prefix("format_version=")) {
                if v != TRAJECTORY_FORMAT_VERSION.to_string() {
                    return Err(err(n, Some("format_version"), format!("unsupported version {v}")));
                }
            }
            continue;
        }
        if l.trim().is_empty() {
            continue;
        }
        break (n, l);
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 5 || cols[..4] != ["segment", "t_start", "t_end", "var"] {
        return Err(err(header_line, None, "expected header `segment,t_start,t_end,var,deg0,...`".into()));
    }
    for (k, c) in cols[4..].iter().enumerate() {
        if *c != format!("deg{k}") {
            return Err(err(header_line, Some(c), format!("expected column `deg{k}`")));
        }
    }
    let ncoef = cols.len() - 4;

    // rows until the blank separator
    struct Piece {
        line: usize,
        t1: f64,
        t2: f64,
        curves: Vec<UniPoly>,
    }
    let mut pieces: Vec<Piece> = Vec::new();
    for (n, l) in lines {
        if l.trim().is_empty() {
            break;
        }
        let f: Vec<&str> = l.split(',').map(str::trim).collect();
        if f.len() != 4 + ncoef {
            return Err(err(n, None, format!("expected {} fields, found {}", 4 + ncoef, f.len())));
        }
        let num = |k: usize, name: &str| -> Result<f64, CliError> {
            f[k].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| err(n, Some(name), format!("`{}` is not a finite number", f[k])))
        };
        let seg: usize = f[0].parse().map_err(|_| err(n, Some("segment"), format!("`{}` is not a segment index", f[0])))?;
        let (t1, t2) = (num(1, "t_start")?, num(2, "t_end")?);
        let coeffs = (0..ncoef).map(|k| num(4 + k, cols[4 + k])).collect::<Result<Vec<_>, _>>()?;
        if seg == pieces.len() {
            pieces.push(Piece { line: n, t1, t2, curves: Vec::new() });
        } else if seg + 1 != pieces.len() {
            return Err(err(n, Some("segment"), format!("segment {seg} out of order")));
        }
        let p = pieces.last_mut().expect("pushed");
        if p.t1 != t1 || p.t2 != t2 {
            return Err(err(n, Some("t_start"), format!("segment {seg} rows disagree on the interval")));
        }
        let slot = p.curves.len();
        match state_vars.get(slot) {
            Some(v) if v == f[3] => {}
            Some(v) => return Err(err(n, Some("var"), format!("expected variable `{v}`, found `{}`", f[3]))),
            None => return Err(err(n, Some("var"), format!("segment {seg} has more rows than state variables"))),
        }
        p.curves.push(UniPoly::new(coeffs));
    }
    if pieces.is_empty() {
        return Err(err(header_line, None, "no coefficient rows".into()));
    }
    let mut segments = Vec::with_capacity(pieces.len());
    for (i, p) in pieces.iter().enumerate() {
        if p.curves.len() != state_vars.len() {
            return Err(err(p.line, Some("var"), format!("segment {i} has {} of {} variables", p.curves.len(), state_vars.len())));
        }
        segments.push(Segment::new(p.curves.clone(), p.t1, p.t2).map_err(|e| err(p.line, Some("t_end"), e.to_string()))?);
    }
    Trajectory::new(segments).map_err(|e| match e {
        SafetyError::TimeGap { index, .. } | SafetyError::Discontinuous { index, .. } => {
            err(pieces[index].line, None, format!("junction gap: {e}"))
        }
        other => CliError::input(path, None, None, other.to_string()),
    })
}

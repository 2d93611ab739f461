//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any fails.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskbound_cli::commands::{cmd_plan, cmd_verify, PlanArgs, VerifyArgs};
use riskbound_cli::scenario::{load_scenario, ScenarioFile};
use riskbound_cli::trajio::load_trajectory;
use riskbound_core::contour::{build_contour, Grid, UncertainObstacle};
use riskbound_core::oracle::{mc_point_risk, mc_trajectory_risk, sample_distribution, validate_contour, McConfig};
use riskbound_core::planner::average_risk_bound;
use riskbound_core::poly::{certify_nonpositive, MultiPoly, Outcome, UniPoly, VarSpace, SIGN_TOL};
use riskbound_core::safety::{Segment, Trajectory};
use riskbound_core::uncertainty::{Distribution, OmegaModel};

type Check = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.scn"))
}

fn scenario(name: &str) -> ScenarioFile {
    load_scenario(&fixture(name)).unwrap_or_else(|e| panic!("{e}"))
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Moment polynomials of the single-disc scenario against the printed values.
fn criterion_1() -> Check {
    let start = Instant::now();
    let sf = scenario("example1");
    let c = build_contour(&sf.obstacles[0], 0.1).map_err(|e| e.to_string())?;
    let expected_ep: &[(&[(&str, u32)], f64)] = &[(&[], 0.1233), (&[("x1", 2)], -1.0), (&[("x2", 2)], -1.0)];
    let expected_ep2: &[(&[(&str, u32)], f64)] = &[
        (&[], 0.0156),
        (&[("x1", 2)], -0.2466),
        (&[("x2", 2)], -0.2466),
        (&[("x1", 4)], 1.0),
        (&[("x1", 2), ("x2", 2)], 2.0),
        (&[("x2", 4)], 1.0),
    ];
    let mut worst: f64 = 0.0;
    for (poly, expected) in [(c.ep(), expected_ep), (c.ep2(), expected_ep2)] {
        for (powers, v) in expected {
            let got = poly.coeff_named(powers).map_err(|e| e.to_string())?;
            worst = worst.max((got - v).abs());
        }
        ensure(poly.num_terms() == expected.len(), format!("unexpected extra terms in {poly}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-3, format!("max coefficient error {worst:.2e}"))?;
    ensure(secs < 1.0, format!("took {secs:.2} s"))?;
    Ok(format!("max coefficient error {worst:.2e}, {secs:.3} s"))
}

/// Zero Monte Carlo violations over member points of a grid.
fn soundness(name: &str, deltas: &[f64], times: &[Option<f64>], n: usize, samples: usize) -> Check {
    let sf = scenario(name);
    let o = &sf.obstacles[0];
    let grid = Grid::uniform(sf.workspace.0.clone(), sf.workspace.1.clone(), n).map_err(|e| e.to_string())?;
    let cfg = McConfig::new(samples, 2024).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut total_violations = 0;
    for &t in times {
        for &d in deltas {
            let c = build_contour(o, d).map_err(|e| e.to_string())?;
            let v = validate_contour(&c, o, &grid, t, &cfg).map_err(|e| e.to_string())?;
            total_violations += v.violations().len();
            let label = t.map(|t| format!("t={t} ")).unwrap_or_default();
            parts.push(format!("{label}d={d}: {}/{} members, {} violations", v.member_points(), grid.len(), v.violations().len()));
            if let Some(r) = v.violations().first() {
                parts.push(format!("first violation at {:?}: p_hat={} stderr={}", r.point, r.estimate.p_hat, r.estimate.stderr));
            }
        }
    }
    ensure(total_violations == 0, parts.join("; "))?;
    Ok(parts.join("; "))
}

fn criterion_2() -> Check {
    soundness("example1", &[0.2, 0.1, 0.07, 0.05], &[None], 101, 100_000)
}

fn criterion_3() -> Check {
    soundness("example2", &[0.1], &[Some(0.0), Some(0.5), Some(1.0)], 101, 100_000)
}

fn criterion_4() -> Check {
    let a1 = soundness("expA1", &[0.3, 0.1, 0.05, 0.02, 0.01], &[None], 101, 100_000)?;
    let a2 = soundness("expA2", &[0.5, 0.3, 0.1, 0.05], &[None], 41, 100_000)?;
    Ok(format!("expA1 [{a1}]; expA2 [{a2}]"))
}

struct PlanRun {
    seed: u64,
    found: bool,
    note: String,
}

fn out_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("riskbound-acceptance-{}", std::process::id())).join(tag);
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn plan_args(name: &str, seed: u64, out: PathBuf) -> PlanArgs {
    PlanArgs {
        scenario: fixture(name),
        mode: None,
        seed: Some(seed),
        segments: None,
        refine: None,
        optimize: false,
        optimize_iterations: 200,
        max_iterations: None,
        delta: None,
        mc_samples: None,
        mc_times: 1000,
        out,
    }
}

/// Plan through the CLI, re-verify the written CSV, check it with Monte
/// Carlo at 1000 times, and record whether it was produced.
fn plan_and_validate(name: &str, seed: u64) -> Result<PlanRun, String> {
    let sf = scenario(name);
    let dir = out_dir(&format!("{name}-{seed}-a"));
    let mut sink = Vec::new();
    let code = cmd_plan(&plan_args(name, seed, dir.clone()), &mut sink).map_err(|e| e.to_string())?;
    if code != 0 {
        return Ok(PlanRun { seed, found: false, note: "no solution".into() });
    }
    let csv = dir.join("trajectory.csv");
    let verify = VerifyArgs { scenario: fixture(name), trajectory: csv.clone(), delta: None, out: None };
    let vcode = cmd_verify(&verify, &mut Vec::new()).map_err(|e| e.to_string())?;
    if vcode != 0 {
        return Err(format!("{name} seed {seed}: written plan fails verification"));
    }
    let traj = load_trajectory(&csv, &sf.state_vars).map_err(|e| e.to_string())?;
    let cfg = McConfig::new(10_000, 1000 + seed).map_err(|e| e.to_string())?;
    let risk = mc_trajectory_risk(&traj, &sf.obstacles, 1000, &cfg).map_err(|e| e.to_string())?;
    let delta = sf.delta.expect("planning fixtures set delta");
    let worst = risk.per_obstacle.iter().map(|r| r.max).max_by(|a, b| a.p_hat.total_cmp(&b.p_hat)).expect("obstacles");
    if !risk.max_within(delta, 3.0) {
        return Err(format!("{name} seed {seed}: MC max risk {} (stderr {}) exceeds {delta}", worst.p_hat, worst.stderr));
    }
    Ok(PlanRun { seed, found: true, note: format!("max p_hat {:.4}", worst.p_hat) })
}

fn planning(name: &str, need: usize) -> Check {
    let runs = (1..=10).map(|s| plan_and_validate(name, s)).collect::<Result<Vec<_>, _>>()?;
    let found = runs.iter().filter(|r| r.found).count();
    let failed: Vec<u64> = runs.iter().filter(|r| !r.found).map(|r| r.seed).collect();
    let worst = runs.iter().filter(|r| r.found).map(|r| r.note.clone()).max().unwrap_or_default();
    let msg = format!("{name}: {found}/10 seeds safe and MC-validated (worst {worst}); no plan for seeds {failed:?}");
    ensure(found >= need, msg.clone())?;
    Ok(msg)
}

fn criterion_5() -> Check {
    planning("example3", 9)
}

fn criterion_6() -> Check {
    let parts = ["example4", "lanechange", "delivery", "cluttered3d"]
        .iter()
        .map(|n| planning(n, 7))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(parts.join("; "))
}

/// Exact certificate against a 1e5-point grid on 1000 random polynomials.
fn criterion_7() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (a, b) = (-1.0, 1.0);
    let n = 100_000;
    let (mut compared, mut banded) = (0, 0);
    for i in 0..1000 {
        let deg = rng.random_range(0..=8);
        let p = UniPoly::new((0..=deg).map(|_| rng.random_range(-1.0..=1.0)).collect());
        let v = certify_nonpositive(&p, a, b).map_err(|e| e.to_string())?;
        let max = (0..=n).map(|k| p.eval(a + (b - a) * k as f64 / n as f64)).fold(f64::NEG_INFINITY, f64::max);
        if (max - SIGN_TOL).abs() <= 1e-9 {
            banded += 1;
            continue;
        }
        compared += 1;
        let expect = if max > SIGN_TOL { Outcome::Violated } else { Outcome::CertifiedNonpositive };
        ensure(v.outcome == expect, format!("instance {i}: {p} grid max {max:e}, verdict {:?}", v.outcome))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 30.0, format!("took {secs:.1} s"))?;
    Ok(format!("{compared} instances agree, {banded} inside the tolerance band, {secs:.1} s"))
}

/// Normal moment recursion against 1e7 samples.
fn criterion_8() -> Check {
    let d = Distribution::normal(0.1, 0.001).map_err(|e| e.to_string())?;
    let xs = sample_distribution(&d, &McConfig::new(10_000_000, 8).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let n = xs.len() as f64;
    let mut worst: f64 = 0.0;
    for k in 1..=8 {
        let exact = d.moment(k).map_err(|e| e.to_string())?;
        let (mut s, mut s2) = (0.0, 0.0);
        for x in &xs {
            let v = x.powi(k as i32);
            s += v;
            s2 += v * v;
        }
        let mean = s / n;
        let se = ((s2 / n - mean * mean).max(0.0) / n).sqrt();
        let z = (mean - exact).abs() / se;
        worst = worst.max(z);
        ensure(z <= 4.0, format!("order {k}: exact {exact:e}, sampled {mean:e}, {z:.2} standard errors"))?;
    }
    Ok(format!("orders 1-8 within {worst:.2} standard errors"))
}

/// Random uncertain obstacle in two state variables and two parameters.
fn random_obstacle(rng: &mut ChaCha8Rng, space: &std::sync::Arc<VarSpace>) -> UncertainObstacle {
    let families = |rng: &mut ChaCha8Rng| match rng.random_range(0..3) {
        0 => {
            let l = rng.random_range(-0.5..0.3);
            Distribution::uniform(l, l + rng.random_range(0.05..0.6)).unwrap()
        }
        1 => Distribution::normal(rng.random_range(-0.3..0.3), rng.random_range(0.001..0.05)).unwrap(),
        _ => Distribution::beta(rng.random_range(0.5..9.0), rng.random_range(0.5..9.0)).unwrap(),
    };
    // r^2 - (x - c1 - a w1)^2 - (y - c2 - b w2)^2 + e x y
    let (c1, c2) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
    let (a, b) = (rng.random_range(0.1..1.0), rng.random_range(0.1..1.0));
    let r2 = rng.random_range(0.02..0.3);
    let e = rng.random_range(-0.3..0.3);
    let v = |n: &str| MultiPoly::var(space.clone(), n).unwrap();
    let k = |c: f64| MultiPoly::constant(space.clone(), c);
    let dx = v("x").sub(&k(c1)).unwrap().sub(&v("w1").scale(a)).unwrap();
    let dy = v("y").sub(&k(c2)).unwrap().sub(&v("w2").scale(b)).unwrap();
    let p = k(r2)
        .sub(&dx.square().unwrap())
        .unwrap()
        .sub(&dy.square().unwrap())
        .unwrap()
        .add(&v("x").mul(&v("y")).unwrap().scale(e))
        .unwrap();
    let omega = OmegaModel::new().with("w1", families(rng)).with("w2", families(rng));
    UncertainObstacle::new("random", p, omega).unwrap()
}

/// Cantelli bound dominates the Monte Carlo estimate.
fn criterion_9() -> Check {
    let space = std::sync::Arc::new(VarSpace::with_roles(&["x", "y"], &["w1", "w2"], Some("t")).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut pairs, mut ok, mut nontrivial) = (0, 0, 0);
    while pairs < 500 {
        let o = random_obstacle(&mut rng, &space);
        let c = build_contour(&o, 1.0).map_err(|e| e.to_string())?;
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let e = c.risk_bound_at(&x, None).map_err(|e| e.to_string())?;
        let Some(bound) = e.bound else { continue };
        pairs += 1;
        let est = mc_point_risk(&o, &x, None, &McConfig::new(10_000, pairs as u64).unwrap()).map_err(|e| e.to_string())?;
        if est.p_hat > 0.0 {
            nontrivial += 1;
        }
        if est.within(bound, 3.0) {
            ok += 1;
        }
    }
    let frac = ok as f64 / pairs as f64;
    let msg = format!("{ok}/{pairs} pairs within bound + 3 stderr ({nontrivial} with nonzero estimate)");
    ensure(frac >= 0.99, msg.clone())?;
    Ok(msg)
}

/// Time-averaged bound for degree-2 curves around the single disc.
fn criterion_10() -> Check {
    let sf = scenario("example1");
    let o = &sf.obstacles[0];
    let delta = 0.1;
    // arc over the disc at radius about 1: (-0.7 + 1.4t, 0.7 + 1.16t(1-t)).
    // Time variation of P enters the averaged variance, so the clearance
    // must stay roughly constant for the averaged bound to hold.
    let avoid = Segment::new(vec![UniPoly::new(vec![-0.7, 1.4]), UniPoly::new(vec![0.7, 1.16, -1.16])], 0.0, 1.0)
        .and_then(|s| Trajectory::new(vec![s]))
        .map_err(|e| e.to_string())?;
    // lingers near the centre: (-0.1 + 0.2t^2, 0.1 - 0.2t^2)
    let through = Segment::new(vec![UniPoly::new(vec![-0.1, 0.0, 0.2]), UniPoly::new(vec![0.1, 0.0, -0.2])], 0.0, 1.0)
        .and_then(|s| Trajectory::new(vec![s]))
        .map_err(|e| e.to_string())?;
    let cfg = McConfig::new(10_000, 10).unwrap();
    let a = average_risk_bound(&avoid, o, delta).map_err(|e| e.to_string())?;
    let ma = mc_trajectory_risk(&avoid, std::slice::from_ref(o), 1000, &cfg).map_err(|e| e.to_string())?;
    let avg_a = ma.per_obstacle[0].average;
    ensure(a.holds, format!("bound fails for the avoiding curve: {a:?}"))?;
    ensure(avg_a <= delta, format!("MC time-averaged risk {avg_a} > {delta}"))?;
    let b = average_risk_bound(&through, o, delta).map_err(|e| e.to_string())?;
    let mb = mc_trajectory_risk(&through, std::slice::from_ref(o), 1000, &cfg).map_err(|e| e.to_string())?;
    ensure(!b.holds, format!("bound holds for the crossing curve: {b:?}"))?;
    Ok(format!(
        "avoiding: holds (lhs {:.3e}, {:.3e}), MC average {avg_a:.4}; crossing: fails (lhs {:.3e}, {:.3e}), MC average {:.4}",
        a.bound_lhs, a.sign_lhs, b.bound_lhs, b.sign_lhs, mb.per_obstacle[0].average
    ))
}

/// Rerunning the planning commands gives byte-identical outputs.
fn criterion_11() -> Check {
    let mut files = 0;
    for name in ["example3", "example4", "lanechange", "delivery", "cluttered3d"] {
        for seed in 1..=10 {
            let first = out_dir(&format!("{name}-{seed}-a"));
            if !first.join("manifest.json").exists() {
                cmd_plan(&plan_args(name, seed, first.clone()), &mut Vec::new()).map_err(|e| e.to_string())?;
            }
            let second = out_dir(&format!("{name}-{seed}-b"));
            cmd_plan(&plan_args(name, seed, second.clone()), &mut Vec::new()).map_err(|e| e.to_string())?;
            for f in ["trajectory.csv", "manifest.json", "summary.txt", "report.txt"] {
                let (p, q) = (first.join(f), second.join(f));
                if !p.exists() && !q.exists() {
                    continue;
                }
                let (x, y) = (std::fs::read(&p).map_err(|e| e.to_string())?, std::fs::read(&q).map_err(|e| e.to_string())?);
                ensure(x == y, format!("{name} seed {seed}: {f} differs between runs"))?;
                files += 1;
            }
        }
    }
    Ok(format!("{files} output files identical across reruns"))
}

fn main() {
    let criteria: Vec<(u32, &str, fn() -> Check)> = vec![
        (1, "moment polynomials of the single-disc obstacle", criterion_1),
        (2, "static contour soundness", criterion_2),
        (3, "dynamic contour soundness", criterion_3),
        (4, "soundness on nonconvex obstacles", criterion_4),
        (5, "static planning", criterion_5),
        (6, "dynamic planning", criterion_6),
        (7, "certificate exactness", criterion_7),
        (8, "normal moment recursion", criterion_8),
        (9, "Cantelli dominance", criterion_9),
        (10, "average-risk variant", criterion_10),
        (11, "determinism", criterion_11),
    ];
    // optional criterion numbers on the command line select a subset
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, label, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {id} ({label}) [{secs:.1} s]: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {id} ({label}) [{secs:.1} s]: {why}");
            }
        }
    }
    let _ = std::fs::remove_dir_all(std::env::temp_dir().join(format!("riskbound-acceptance-{}", std::process::id())));
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}

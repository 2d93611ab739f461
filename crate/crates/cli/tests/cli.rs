use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.scn"))
}

fn riskbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskbound")).args(args).output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const RING: &str = r#"
format_version = 1
name = "ring"
state_vars = ["x1", "x2"]
horizon = [0.0, 1.0]
delta = 0.1
start = [-1.0, -1.0]
goal = [0.0, 0.0]

[workspace]
min = [-1.0, -1.0]
max = [1.0, 1.0]

[planner]
seed = 1
max_iterations = 300

# 0.04 w - (x1^2 + x2^2 - 0.5)^2: a closed ring around the goal
[[obstacles]]
name = "ring"

[obstacles.uncertain_vars.w]
type = "uniform"
lower = 0.9
upper = 1.1

[[obstacles.terms]]
coeff = 0.04
powers = { "w" = 1 }

[[obstacles.terms]]
coeff = -0.25
powers = {}

[[obstacles.terms]]
coeff = 1.0
powers = { "x1" = 2 }

[[obstacles.terms]]
coeff = 1.0
powers = { "x2" = 2 }

[[obstacles.terms]]
coeff = -1.0
powers = { "x1" = 4 }

[[obstacles.terms]]
coeff = -2.0
powers = { "x1" = 2, "x2" = 2 }

[[obstacles.terms]]
coeff = -1.0
powers = { "x2" = 4 }
"#;

#[test]
fn plan_then_verify_round_trip() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("plan");
    let o = riskbound(&["plan", path(&fixture("example3")), "--seed", "4", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    for f in ["summary.txt", "trajectory.csv", "report.txt", "manifest.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let v = riskbound(&["verify", path(&fixture("example3")), path(&out.join("trajectory.csv"))]);
    assert_eq!(v.status.code(), Some(0), "{}", text(&v.stdout));
    assert!(text(&v.stdout).contains("overall: safe"));
}

#[test]
fn straight_line_through_disc_is_violated() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("line.csv");
    std::fs::write(&csv, "segment,t_start,t_end,var,deg0,deg1\n0,0,1,x1,-1,2\n0,0,1,x2,-1,2\n").unwrap();
    let v = riskbound(&["verify", path(&fixture("example3")), path(&csv)]);
    assert_eq!(v.status.code(), Some(1));
    let out = text(&v.stdout);
    assert!(out.contains("overall: violated"), "{out}");
    let t: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("first_violation:"))
        .and_then(|l| l.split_whitespace().find_map(|w| w.strip_prefix("t=")))
        .expect("witness time")
        .parse()
        .unwrap();
    assert!((0.0..=1.0).contains(&t));
    // the witness lies where the line is inside the excluded region
    let r = (2.0 * t - 1.0).abs() * 2f64.sqrt();
    assert!(r < 0.5, "witness at radius {r}");
}

#[test]
fn junction_gap_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("gap.csv");
    std::fs::write(
        &csv,
        "segment,t_start,t_end,var,deg0,deg1\n0,0,0.5,x1,-1,2\n0,0,0.5,x2,-1,0\n1,0.5,1,x1,0.5,0\n1,0.5,1,x2,-1,0\n",
    )
    .unwrap();
    let v = riskbound(&["verify", path(&fixture("example3")), path(&csv)]);
    assert_eq!(v.status.code(), Some(2));
    let err = text(&v.stderr);
    assert!(err.contains("gap.csv:4") && err.contains("junction gap"), "{err}");
}

#[test]
fn enclosed_goal_reports_no_solution() {
    let dir = TempDir::new().unwrap();
    let scn = dir.path().join("ring.scn");
    std::fs::write(&scn, RING).unwrap();
    let out = dir.path().join("out");
    let o = riskbound(&["plan", path(&scn), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o.stderr));
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("status=no_solution"), "{summary}");
    assert!(summary.contains("iterations=300"), "{summary}");
    assert!(!out.join("trajectory.csv").exists());
}

#[test]
fn goal_outside_contour_is_rejected() {
    let dir = TempDir::new().unwrap();
    let scn = dir.path().join("bad.scn");
    let src = std::fs::read_to_string(fixture("example3")).unwrap().replace("goal = [1.0, 1.0]", "goal = [0.0, 0.0]");
    std::fs::write(&scn, src).unwrap();
    let o = riskbound(&["plan", path(&scn), "--seed", "1", "--out", path(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = text(&o.stderr);
    assert!(err.contains("goal") && err.contains("disc"), "{err}");
}

#[test]
fn usage_and_io_errors_exit_2() {
    assert_eq!(riskbound(&["bogus"]).status.code(), Some(2));
    assert_eq!(riskbound(&["verify", path(&fixture("example3")), "/nonexistent/t.csv"]).status.code(), Some(2));
    assert_eq!(riskbound(&["plan", path(&fixture("example1")), "--seed", "1", "--out", "/tmp/unused"]).status.code(), Some(2));
}

#[test]
fn malformed_scenario_names_the_line() {
    let dir = TempDir::new().unwrap();
    let scn = dir.path().join("typo.scn");
    let src = std::fs::read_to_string(fixture("example3")).unwrap().replace("delta = 0.1", "delta = \"x\"");
    std::fs::write(&scn, src).unwrap();
    let o = riskbound(&["verify", path(&scn), "/dev/null"]);
    assert_eq!(o.status.code(), Some(2));
    let err = text(&o.stderr);
    assert!(err.contains("typo.scn:7:"), "{err}");
}

#[test]
fn contour_at_full_delta_keeps_sign_region() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("c");
    let o = riskbound(&["contour", path(&fixture("example1")), "--delta", "1", "--grid", "21", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let csv = std::fs::read_to_string(out.join("raster_disc_d1.csv")).unwrap();
    let mut rows = 0;
    for l in csv.lines().skip(2) {
        let f: Vec<&str> = l.split(',').collect();
        let ep: f64 = f[2].parse().unwrap();
        let ep2: f64 = f[3].parse().unwrap();
        let member = f[5] == "1";
        assert_eq!(member, ep <= 0.0 && ep2 >= 1e-10, "{l}");
        rows += 1;
    }
    assert_eq!(rows, 21 * 21);
    let pgm = std::fs::read(out.join("raster_disc_d1.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n21 21\n65535\n"));
}

#[test]
fn contour_validation_writes_clean_report() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("c");
    let o = riskbound(&[
        "contour",
        path(&fixture("example1")),
        "--delta",
        "0.1",
        "--grid",
        "11",
        "--validate",
        "2000",
        "--seed",
        "3",
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().ends_with(",0"), "{summary}");
}

#[test]
fn mc_point_estimates() {
    let o = riskbound(&["mc", path(&fixture("example1")), "--point", "0.35,0", "--samples", "20000", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let out = text(&o.stdout);
    let row: Vec<&str> = out.lines().find(|l| l.starts_with("disc,")).unwrap().split(',').collect();
    let (p, se): (f64, f64) = (row[1].parse().unwrap(), row[2].parse().unwrap());
    assert!((p - 0.5).abs() <= 4.0 * se, "{p} {se}");
    let o = riskbound(&["mc", path(&fixture("example1")), "--point", "0,0", "--samples", "1000", "--seed", "1"]);
    assert!(text(&o.stdout).contains("disc,1,0,1000"));
}

#[test]
fn plan_outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let run = |tag: &str| {
        let out = dir.path().join(tag);
        let o = riskbound(&["plan", path(&fixture("example4")), "--seed", "2", "--optimize", "--out", path(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["trajectory.csv", "manifest.json", "summary.txt", "report.txt"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 2);
    assert_eq!(manifest["input"], "example4.scn");
}

#[test]
fn every_fixture_parses() {
    for e in std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "scn") {
            riskbound_cli::scenario::load_scenario(&p).unwrap_or_else(|e| panic!("{e}"));
        }
    }
}

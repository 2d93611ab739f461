use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use riskbound_core::contour::{build_contour, Grid};
use riskbound_core::oracle::{mc_trajectory_risk, validate_contour, McConfig, SampleBank};
use riskbound_core::planner::{
    optimize_local, plan_rrt_dynamic, plan_rrt_static, trajectory_energy, OptimizeParams, PlanError, PlanOutcome,
    PlanResult, PlannerParams, Scenario,
};
use riskbound_core::safety::verify_trajectory;
use serde_json::json;

use crate::error::CliError;
use crate::manifest::{OutputDir, RunManifest};
use crate::raster::{raster_csv, raster_pgm};
use crate::scenario::{load_scenario, ScenarioFile};
use crate::trajio::{load_trajectory, write_trajectory_csv};

/// Exit code for a search that ended without a plan, or an unsafe verdict.
pub const EXIT_NO_SOLUTION: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "riskbound", version, about = "Risk contours and certified risk-bounded trajectory planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rasterize risk contours, optionally checking members by Monte Carlo.
    Contour(ContourArgs),
    /// Plan a certified trajectory from start to goal.
    Plan(PlanArgs),
    /// Certify a trajectory CSV against every contour.
    Verify(VerifyArgs),
    /// Monte Carlo collision probability at a point or along a trajectory.
    Mc(McArgs),
}

#[derive(Debug, Args)]
pub struct ContourArgs {
    pub scenario: PathBuf,
    /// Comma-separated risk levels; defaults to the scenario's `delta`.
    #[arg(long, value_delimiter = ',')]
    pub delta: Vec<f64>,
    /// Grid nodes per axis.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    /// Time slice for time-varying obstacles.
    #[arg(long)]
    pub time: Option<f64>,
    /// Monte Carlo samples per member point; enables validation output.
    #[arg(long)]
    pub validate: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Rrt,
    RrtDynamic,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    pub scenario: PathBuf,
    /// Planner; defaults to `rrt-dynamic` when any obstacle moves.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Falls back to the scenario's `[planner] seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub segments: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub refine: Option<bool>,
    /// Run the local energy optimizer on the result.
    #[arg(long)]
    pub optimize: bool,
    #[arg(long, default_value_t = 200)]
    pub optimize_iterations: usize,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Monte Carlo samples per time point for a risk table of the plan.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub mc_times: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub scenario: PathBuf,
    pub trajectory: PathBuf,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    pub scenario: PathBuf,
    /// Comma-separated state coordinates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "trajectory")]
    pub point: Vec<f64>,
    #[arg(long)]
    pub time: Option<f64>,
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    /// Time samples along a trajectory.
    #[arg(long, default_value_t = 1000)]
    pub times: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Run one command; text reports go to `stdout`. Returns the exit code.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Contour(a) => cmd_contour(&a, stdout),
        Command::Plan(a) => cmd_plan(&a, stdout),
        Command::Verify(a) => cmd_verify(&a, stdout),
        Command::Mc(a) => cmd_mc(&a, stdout),
    }
}

fn emit(stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    stdout.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

fn plan_input_error(sf: &ScenarioFile, e: PlanError) -> CliError {
    match e {
        PlanError::RejectedInput { .. } | PlanError::InvalidScenario(_) | PlanError::InvalidParams(_) | PlanError::DynamicObstacle(_) => {
            CliError::input(&sf.path, None, None, e.to_string())
        }
        other => internal(other),
    }
}

pub fn cmd_contour(a: &ContourArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let sf = load_scenario(&a.scenario)?;
    let deltas = if a.delta.is_empty() {
        vec![sf.delta.ok_or_else(|| CliError::Usage("no --delta given and the scenario has no `delta`".into()))?]
    } else {
        a.delta.clone()
    };
    if let Some(d) = deltas.iter().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(CliError::Usage(format!("--delta {d} is outside [0, 1]")));
    }
    if a.grid < 2 {
        return Err(CliError::Usage("--grid needs at least 2 nodes per axis".into()));
    }
    if sf.has_dynamic_obstacles() && a.time.is_none() {
        return Err(CliError::Usage("the scenario has moving obstacles; pass --time".into()));
    }
    let grid = Grid::uniform(sf.workspace.0.clone(), sf.workspace.1.clone(), a.grid).map_err(internal)?;
    let mut out = OutputDir::create(&a.out)?;
    let mut summary = String::from("obstacle,delta,members,grid_points,violations\n");
    for o in &sf.obstacles {
        let base = build_contour(o, deltas[0]).map_err(internal)?;
        for &d in &deltas {
            let c = base.with_delta(d).map_err(internal)?;
            let r = c.rasterize(&grid, a.time).map_err(internal)?;
            let stem = format!("{}_d{d}", o.name());
            out.write(&format!("raster_{stem}.csv"), raster_csv(&r, &sf.state_vars).as_bytes())?;
            if let Some(img) = raster_pgm(&r) {
                out.write(&format!("raster_{stem}.pgm"), &img)?;
            }
            let violations = match a.validate {
                Some(n) => {
                    let cfg = McConfig::new(n, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;
                    let v = validate_contour(&c, o, &grid, a.time, &cfg).map_err(internal)?;
                    out.write(&format!("validation_{stem}.csv"), v.to_csv().as_bytes())?;
                    v.violations().len().to_string()
                }
                None => String::new(),
            };
            summary.push_str(&format!("{},{d},{},{},{violations}\n", o.name(), r.member_count(), grid.len()));
        }
    }
    out.write("summary.csv", summary.as_bytes())?;
    emit(stdout, &summary)?;
    let params = json!({ "delta": deltas, "grid": a.grid, "time": a.time, "validate_samples": a.validate });
    let seed = a.validate.map(|_| a.seed);
    out.finish(RunManifest::new("contour", &a.scenario, &sf.sha256, seed, params))?;
    Ok(0)
}

/// Resolved planning options.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOptions {
    pub mode: Mode,
    pub params: PlannerParams,
    pub optimize: Option<OptimizeParams>,
}

impl PlanOptions {
    /// Defaults scaled to `sc`, then the scenario's `[planner]` table.
    pub fn resolve(sf: &ScenarioFile, sc: &Scenario, seed: u64) -> Self {
        let mut params = PlannerParams::for_scenario(sc, seed);
        sf.planner.apply(&mut params);
        params.seed = seed;
        let mode = if sc.has_dynamic_obstacles() { Mode::RrtDynamic } else { Mode::Rrt };
        Self { mode, params, optimize: None }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let p = &self.params;
        let mut v = json!({
            "mode": match self.mode { Mode::Rrt => "rrt", Mode::RrtDynamic => "rrt-dynamic" },
            "max_iterations": p.max_iterations,
            "step_length": p.step_length,
            "goal_connect_period": p.goal_connect_period,
            "line_init": p.line_init,
            "neighborhood": p.neighborhood,
            "growth_factor": p.growth_factor,
            "growth_every": p.growth_every,
            "segments": p.segments,
            "refine": p.refine,
        });
        if let Some(o) = &self.optimize {
            v["optimize"] = json!({
                "iterations": o.iterations, "initial_step": o.initial_step, "decay": o.decay, "min_step": o.min_step,
            });
        }
        v
    }
}

/// Run the selected planner and the optional optimizer.
pub fn plan(sc: &Scenario, opts: &PlanOptions) -> Result<PlanOutcome, PlanError> {
    let outcome = match opts.mode {
        Mode::Rrt => plan_rrt_static(sc, &opts.params)?,
        Mode::RrtDynamic => plan_rrt_dynamic(sc, &opts.params)?,
    };
    let (Some(op), PlanOutcome::Found(r)) = (&opts.optimize, &outcome) else {
        return Ok(outcome);
    };
    let trajectory = optimize_local(&r.trajectory, sc, op)?;
    let report = verify_trajectory(sc.contours(), &trajectory)?;
    debug_assert!(report.is_safe());
    Ok(PlanOutcome::Found(PlanResult {
        energy: trajectory_energy(&trajectory),
        trajectory,
        report,
        straight_line_energy: r.straight_line_energy,
        stats: r.stats.clone(),
    }))
}

fn plan_summary(outcome: &PlanOutcome) -> String {
    let s = outcome.stats();
    let mut out = String::from("# riskbound plan summary format_version=1\n");
    match outcome {
        PlanOutcome::Found(r) => {
            out.push_str("status=found\n");
            out.push_str(&format!("energy={}\nstraight_line_energy={}\nsegments={}\n", r.energy, r.straight_line_energy, r.trajectory.segments().len()));
        }
        PlanOutcome::NoSolution(_) => out.push_str("status=no_solution\n"),
    }
    out.push_str(&format!(
        "iterations={}\nvertices={}\nedge_checks={}\nrejected_edges={}\ngoal_attempts={}\nrefine_edge_checks={}\nrefined={}\n",
        s.iterations, s.vertices, s.edge_checks, s.rejected_edges, s.goal_attempts, s.refine_edge_checks, s.refined
    ));
    out
}

pub fn cmd_plan(a: &PlanArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let sf = load_scenario(&a.scenario)?;
    let seed = a.seed.or(sf.planner.seed).ok_or_else(|| CliError::Usage("--seed is required".into()))?;
    let sc = sf.to_scenario(a.delta)?;
    let mut opts = PlanOptions::resolve(&sf, &sc, seed);
    if let Some(m) = a.mode {
        opts.mode = m;
    }
    if let Some(s) = a.segments {
        opts.params.segments = s;
    }
    if let Some(r) = a.refine {
        opts.params.refine = r;
    }
    if let Some(n) = a.max_iterations {
        opts.params.max_iterations = n;
    }
    if a.optimize {
        let mut op = OptimizeParams::for_scenario(&sc, seed);
        op.iterations = a.optimize_iterations;
        opts.optimize = Some(op);
    }
    let outcome = plan(&sc, &opts).map_err(|e| plan_input_error(&sf, e))?;

    let mut out = OutputDir::create(&a.out)?;
    let summary = plan_summary(&outcome);
    out.write("summary.txt", summary.as_bytes())?;
    let code = match &outcome {
        PlanOutcome::Found(r) => {
            out.write("trajectory.csv", write_trajectory_csv(&r.trajectory, &sf.state_vars).as_bytes())?;
            out.write("report.txt", r.report.to_string().as_bytes())?;
            if let Some(n) = a.mc_samples {
                let cfg = McConfig::new(n, seed).map_err(|e| CliError::Usage(e.to_string()))?;
                let risk = mc_trajectory_risk(&r.trajectory, sc.obstacles(), a.mc_times, &cfg).map_err(internal)?;
                out.write("risk.csv", risk.to_string().as_bytes())?;
            }
            0
        }
        PlanOutcome::NoSolution(_) => EXIT_NO_SOLUTION,
    };
    emit(stdout, &summary)?;
    let mut params = opts.to_json();
    params["delta"] = json!(sc.delta());
    params["mc_samples"] = json!(a.mc_samples);
    params["mc_times"] = json!(a.mc_times);
    out.finish(RunManifest::new("plan", &a.scenario, &sf.sha256, Some(seed), params))?;
    Ok(code)
}

pub fn cmd_verify(a: &VerifyArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let sf = load_scenario(&a.scenario)?;
    let traj = load_trajectory(&a.trajectory, &sf.state_vars)?;
    let delta = a.delta.or(sf.delta).ok_or_else(|| CliError::Usage("no --delta given and the scenario has no `delta`".into()))?;
    let contours = sf
        .obstacles
        .iter()
        .map(|o| build_contour(o, delta))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let report = verify_trajectory(&contours, &traj).map_err(internal)?;
    let text = report.to_string();
    if let Some(p) = &a.out {
        std::fs::write(p, &text).map_err(|e| CliError::io(p, e))?;
    }
    emit(stdout, &text)?;
    Ok(if report.is_safe() { 0 } else { EXIT_NO_SOLUTION })
}

pub fn cmd_mc(a: &McArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let sf = load_scenario(&a.scenario)?;
    let cfg = McConfig::new(a.samples, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let (text, params) = if let Some(tp) = &a.trajectory {
        let traj = load_trajectory(tp, &sf.state_vars)?;
        let r = mc_trajectory_risk(&traj, &sf.obstacles, a.times, &cfg).map_err(|e| CliError::Usage(e.to_string()))?;
        (r.to_string(), json!({ "trajectory": file_name(tp), "samples": a.samples, "times": a.times }))
    } else {
        if a.point.len() != sf.dim() {
            return Err(CliError::Usage(format!("--point needs {} coordinates", sf.dim())));
        }
        if sf.has_dynamic_obstacles() && a.time.is_none() {
            return Err(CliError::Usage("the scenario has moving obstacles; pass --time".into()));
        }
        let mut text = String::from("# riskbound point risk format_version=1\nobstacle,p_hat,stderr,n\n");
        for (i, o) in sf.obstacles.iter().enumerate() {
            let bank = SampleBank::new(o, &cfg.with_stream(i as u64)).map_err(|e| CliError::Usage(e.to_string()))?;
            let e = bank.risk_at(&a.point, a.time).map_err(internal)?;
            text.push_str(&format!("{},{},{},{}\n", o.name(), e.p_hat, e.stderr, e.n));
        }
        (text, json!({ "point": a.point, "time": a.time, "samples": a.samples }))
    };
    emit(stdout, &text)?;
    if let Some(dir) = &a.out {
        let mut out = OutputDir::create(dir)?;
        out.write("mc.csv", text.as_bytes())?;
        out.finish(RunManifest::new("mc", &a.scenario, &sf.sha256, Some(a.seed), params))?;
    }
    Ok(0)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

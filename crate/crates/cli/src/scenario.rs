//! Scenario files: TOML documents describing a workspace, uncertain
//! polynomial obstacles and (optionally) a planning query.
//!
//! Uncertain variables are local to their obstacle. In the global variable
//! space they are named `obstacle::var`; time is always `t`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use riskbound_core::contour::UncertainObstacle;
use riskbound_core::planner::{PlannerParams, Scenario};
use riskbound_core::poly::{MultiPoly, VarClass, VarSpace};
use riskbound_core::uncertainty::{Distribution, OmegaModel};
use serde::Deserialize;
use toml::Spanned;

use crate::error::{line_of, CliError};
use crate::manifest::sha256_hex;

pub const SCENARIO_FORMAT_VERSION: u32 = 1;
pub const TIME_VAR: &str = "t";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    format_version: Spanned<u32>,
    name: Option<String>,
    state_vars: Spanned<Vec<String>>,
    workspace: Spanned<RawWorkspace>,
    horizon: Spanned<Vec<f64>>,
    delta: Option<Spanned<f64>>,
    start: Option<Spanned<Vec<f64>>>,
    goal: Option<Spanned<Vec<f64>>>,
    #[serde(default)]
    planner: Option<Spanned<PlannerOverrides>>,
    #[serde(default)]
    obstacles: Vec<Spanned<RawObstacle>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorkspace {
    min: Vec<f64>,
    max: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObstacle {
    name: Spanned<String>,
    #[serde(default)]
    uncertain_vars: BTreeMap<String, Spanned<RawDist>>,
    terms: Vec<Spanned<RawTerm>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum RawDist {
    Uniform { lower: f64, upper: f64 },
    Normal { mean: f64, variance: f64 },
    Beta { a: f64, b: f64 },
    Moments { moments: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    coeff: f64,
    #[serde(default)]
    powers: BTreeMap<String, u32>,
}

/// Optional `[planner]` table; unset fields keep the scaled defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerOverrides {
    pub seed: Option<u64>,
    pub max_iterations: Option<usize>,
    pub step_length: Option<f64>,
    pub goal_connect_period: Option<usize>,
    pub line_init: Option<bool>,
    pub neighborhood: Option<f64>,
    pub growth_factor: Option<f64>,
    pub growth_every: Option<usize>,
    pub segments: Option<usize>,
    pub refine: Option<bool>,
}

impl PlannerOverrides {
    pub fn apply(&self, pp: &mut PlannerParams) {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { pp.$f = v; })* };
        }
        set!(seed, max_iterations, step_length, goal_connect_period, line_init, neighborhood, growth_factor, growth_every, segments, refine);
    }
}

/// Parsed and validated scenario file.
#[derive(Debug, Clone)]
pub struct ScenarioFile {
    pub path: PathBuf,
    pub name: String,
    pub sha256: String,
    pub space: Arc<VarSpace>,
    pub state_vars: Vec<String>,
    pub workspace: (Vec<f64>, Vec<f64>),
    pub horizon: (f64, f64),
    pub delta: Option<f64>,
    pub start: Option<Vec<f64>>,
    pub goal: Option<Vec<f64>>,
    pub planner: PlannerOverrides,
    pub obstacles: Vec<UncertainObstacle>,
}

impl ScenarioFile {
    pub fn dim(&self) -> usize {
        self.state_vars.len()
    }

    pub fn has_dynamic_obstacles(&self) -> bool {
        self.obstacles.iter().any(UncertainObstacle::is_dynamic)
    }

    /// Planning problem at `delta` (the file's value if `None`).
    pub fn to_scenario(&self, delta: Option<f64>) -> Result<Scenario, CliError> {
        let missing = |field: &str| CliError::input(&self.path, None, Some(field.into()), "required for planning");
        let delta = delta.or(self.delta).ok_or_else(|| missing("delta"))?;
        let start = self.start.clone().ok_or_else(|| missing("start"))?;
        let goal = self.goal.clone().ok_or_else(|| missing("goal"))?;
        Scenario::new(self.space.clone(), self.workspace.clone(), self.obstacles.clone(), delta, start, goal, self.horizon)
            .map_err(|e| CliError::input(&self.path, None, None, e.to_string()))
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|_| CliError::input(path, None, None, "file is not valid UTF-8"))?;
    parse_scenario(&text, path)
}

pub fn parse_scenario(text: &str, path: &Path) -> Result<ScenarioFile, CliError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        CliError::input(path, line, None, e.message().trim().to_string())
    })?;
    let err = |span: std::ops::Range<usize>, field: &str, msg: String| {
        CliError::input(path, Some(line_of(text, span.start)), Some(field.to_string()), msg)
    };

    if *raw.format_version.get_ref() != SCENARIO_FORMAT_VERSION {
        return Err(err(
            raw.format_version.span(),
            "format_version",
            format!("unsupported version {}, expected {SCENARIO_FORMAT_VERSION}", raw.format_version.get_ref()),
        ));
    }

    let states = raw.state_vars.get_ref().clone();
    let sv_span = raw.state_vars.span();
    if states.is_empty() {
        return Err(err(sv_span, "state_vars", "at least one state variable is required".into()));
    }
    let mut seen = BTreeSet::new();
    for s in &states {
        if s == TIME_VAR || s.contains("::") || s.is_empty() {
            return Err(err(sv_span.clone(), "state_vars", format!("`{s}` is not a valid state variable name")));
        }
        if !seen.insert(s.clone()) {
            return Err(err(sv_span.clone(), "state_vars", format!("`{s}` is declared twice")));
        }
    }
    let dim = states.len();

    let ws_span = raw.workspace.span();
    let ws = raw.workspace.into_inner();
    if ws.min.len() != dim || ws.max.len() != dim {
        return Err(err(ws_span, "workspace", format!("min and max need {dim} entries each")));
    }
    if ws.min.iter().zip(&ws.max).any(|(a, b)| !(a < b)) {
        return Err(err(ws_span, "workspace", "min must be strictly below max on every axis".into()));
    }

    let hz = raw.horizon.get_ref();
    if hz.len() != 2 || !(hz[0] < hz[1]) {
        return Err(err(raw.horizon.span(), "horizon", "expected [t0, tf] with t0 < tf".into()));
    }
    let horizon = (hz[0], hz[1]);

    if let Some(d) = &raw.delta {
        if !(0.0..=1.0).contains(d.get_ref()) {
            return Err(err(d.span(), "delta", format!("{} is outside [0, 1]", d.get_ref())));
        }
    }
    for (field, v) in [("start", &raw.start), ("goal", &raw.goal)] {
        if let Some(v) = v {
            if v.get_ref().len() != dim {
                return Err(err(v.span(), field, format!("expected {dim} coordinates, got {}", v.get_ref().len())));
            }
        }
    }
    if raw.start.is_some() != raw.goal.is_some() {
        return Err(CliError::input(path, None, Some("goal".into()), "start and goal must be given together"));
    }

    // global variable space
    let mut names = BTreeSet::new();
    let mut vars: Vec<(String, VarClass)> = states.iter().map(|s| (s.clone(), VarClass::State)).collect();
    for (i, o) in raw.obstacles.iter().enumerate() {
        let name = o.get_ref().name.get_ref();
        let field = format!("obstacles[{i}].name");
        if name.is_empty() || name.contains("::") {
            return Err(err(o.get_ref().name.span(), &field, format!("`{name}` is not a valid obstacle name")));
        }
        if !names.insert(name.clone()) {
            return Err(err(o.get_ref().name.span(), &field, format!("duplicate obstacle name `{name}`")));
        }
        for var in o.get_ref().uncertain_vars.keys() {
            if var == TIME_VAR || states.contains(var) || var.contains("::") || var.is_empty() {
                let span = o.get_ref().uncertain_vars[var].span();
                return Err(err(
                    span,
                    &format!("obstacles[{i}].uncertain_vars.{var}"),
                    format!("`{var}` clashes with a state or time variable"),
                ));
            }
            vars.push((format!("{name}::{var}"), VarClass::Uncertain));
        }
    }
    vars.push((TIME_VAR.to_string(), VarClass::Time));
    let space = Arc::new(VarSpace::new(vars).map_err(|e| CliError::input(path, None, None, e.to_string()))?);

    let mut obstacles = Vec::with_capacity(raw.obstacles.len());
    for (i, o) in raw.obstacles.into_iter().enumerate() {
        let o_span = o.span();
        let o = o.into_inner();
        let name = o.name.into_inner();
        let mut omega = OmegaModel::new();
        for (var, d) in &o.uncertain_vars {
            let field = format!("obstacles[{i}].uncertain_vars.{var}");
            let dist = match d.get_ref() {
                RawDist::Uniform { lower, upper } => Distribution::uniform(*lower, *upper),
                RawDist::Normal { mean, variance } => Distribution::normal(*mean, *variance),
                RawDist::Beta { a, b } => Distribution::beta(*a, *b),
                RawDist::Moments { moments } => Distribution::moment_table(moments.clone()),
            }
            .map_err(|e| err(d.span(), &field, e.to_string()))?;
            omega.insert(format!("{name}::{var}"), dist);
        }
        if o.terms.is_empty() {
            return Err(err(o_span, &format!("obstacles[{i}].terms"), "obstacle has no terms".into()));
        }
        let mut terms = Vec::with_capacity(o.terms.len());
        for (j, term) in o.terms.iter().enumerate() {
            let field = format!("obstacles[{i}].terms[{j}]");
            let tm = term.get_ref();
            if !tm.coeff.is_finite() {
                return Err(err(term.span(), &format!("{field}.coeff"), "coefficient must be finite".into()));
            }
            let mut e = vec![0u32; space.len()];
            for (var, &k) in &tm.powers {
                let global = if states.contains(var) || var == TIME_VAR {
                    var.clone()
                } else if o.uncertain_vars.contains_key(var) {
                    format!("{name}::{var}")
                } else {
                    return Err(err(
                        term.span(),
                        &format!("{field}.powers.{var}"),
                        format!("`{var}` is not a state variable, `t`, or an uncertain variable of `{name}`"),
                    ));
                };
                e[space.require(&global).expect("declared")] += k;
            }
            terms.push((e, tm.coeff));
        }
        let poly = MultiPoly::from_terms(space.clone(), terms)
            .map_err(|e| err(o_span.clone(), &format!("obstacles[{i}].terms"), e.to_string()))?;
        let obstacle = UncertainObstacle::new(name, poly, omega)
            .map_err(|e| err(o_span.clone(), &format!("obstacles[{i}]"), e.to_string()))?;
        obstacles.push(obstacle);
    }

    Ok(ScenarioFile {
        path: path.to_path_buf(),
        name: raw.name.unwrap_or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()),
        sha256: sha256_hex(text.as_bytes()),
        space,
        state_vars: states,
        workspace: (ws.min, ws.max),
        horizon,
        delta: raw.delta.map(Spanned::into_inner),
        start: raw.start.map(Spanned::into_inner),
        goal: raw.goal.map(Spanned::into_inner),
        planner: raw.planner.map(Spanned::into_inner).unwrap_or_default(),
        obstacles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DISC: &str = r#"
format_version = 1
state_vars = ["x", "y"]
horizon = [0.0, 1.0]
delta = 0.1
start = [-1.0, -1.0]
goal = [1.0, 1.0]

[workspace]
min = [-1.0, -1.0]
max = [1.0, 1.0]

[[obstacles]]
name = "disc"

[obstacles.uncertain_vars.w]
type = "uniform"
lower = 0.3
upper = 0.4

[[obstacles.terms]]
coeff = 1.0
powers = { w = 2 }

[[obstacles.terms]]
coeff = -1.0
powers = { x = 2 }

[[obstacles.terms]]
coeff = -1.0
powers = { y = 2 }
"#;

    fn parse(text: &str) -> Result<ScenarioFile, CliError> {
        parse_scenario(text, Path::new("test.scn"))
    }

    #[test]
    fn parses_disc() {
        let s = parse(DISC).unwrap();
        assert_eq!(s.name, "test");
        assert_eq!(s.space.index_of("disc::w"), Some(2));
        assert_eq!(s.space.time_index(), Some(3));
        assert_eq!(s.obstacles[0].poly().num_terms(), 3);
        assert!(!s.has_dynamic_obstacles());
        let sc = s.to_scenario(None).unwrap();
        assert_eq!(sc.delta(), 0.1);
    }

    fn expect_err(text: &str) -> String {
        parse(text).unwrap_err().to_string()
    }

    #[test]
    fn unknown_power_names_field_and_line() {
        let text = DISC.replace("powers = { y = 2 }", "powers = { z = 2 }");
        let msg = expect_err(&text);
        assert!(msg.contains("obstacles[0].terms[2].powers.z"), "{msg}");
        assert!(msg.contains("test.scn:"), "{msg}");
    }

    #[test]
    fn bad_distribution_is_reported() {
        let msg = expect_err(&DISC.replace("upper = 0.4", "upper = 0.2"));
        assert!(msg.contains("obstacles[0].uncertain_vars.w"), "{msg}");
        let line = DISC.lines().position(|l| l.starts_with("[obstacles.uncertain_vars.w]")).unwrap() + 1;
        assert!(msg.contains(&format!("test.scn:{line}")) || msg.contains(&format!("test.scn:{}", line + 1)), "{msg}");
    }

    #[test]
    fn syntax_errors_carry_line() {
        let text = DISC.replace("delta = 0.1", "delta = ");
        let msg = expect_err(&text);
        assert!(msg.contains("test.scn:5"), "{msg}");
    }

    #[test]
    fn unknown_and_missing_fields() {
        assert!(expect_err(&DISC.replace("delta = 0.1", "delt = 0.1")).contains("delt"));
        assert!(expect_err(&DISC.replace("horizon = [0.0, 1.0]\n", "")).contains("horizon"));
        assert!(expect_err(&DISC.replace("delta = 0.1", "delta = 1.5")).contains("`delta`"));
        assert!(expect_err(&DISC.replace("goal = [1.0, 1.0]", "goal = [1.0]")).contains("`goal`"));
        assert!(expect_err(&DISC.replace("format_version = 1", "format_version = 2")).contains("format_version"));
    }

    #[test]
    fn start_inside_obstacle_is_rejected() {
        let s = parse(&DISC.replace("start = [-1.0, -1.0]", "start = [0.0, 0.0]")).unwrap();
        let msg = s.to_scenario(None).unwrap_err().to_string();
        assert!(msg.contains("disc") && msg.contains("start"), "{msg}");
    }

    #[test]
    fn overrides_apply() {
        let s = parse(&format!("{DISC}\n")).unwrap();
        let sc = s.to_scenario(None).unwrap();
        let mut pp = PlannerParams::for_scenario(&sc, 1);
        PlannerOverrides { segments: Some(7), refine: Some(false), ..Default::default() }.apply(&mut pp);
        assert_eq!((pp.segments, pp.refine, pp.seed), (7, false, 1));
    }
}

//! Scenario configuration: flat TOML sections, every violation reported at once.
//!
//! ```toml
//! [run]
//! name = "cone-a2"
//! solver = "radial"
//! [flow]
//! a = 2.0
//! [obstacle]
//! r = 2.0
//! [check]
//! limit = 0.02
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use toml::{Table, Value};

use crate::candidates::{Candidate, Context, Family, Tag};
use crate::error::{Error, Result};
use crate::nd::{NdMode, Symmetry};
use crate::obstacle::{FlowParams, ObstacleSpec};
use crate::profile::{Bump, InitialData};
use crate::scheme::SchemeParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Radial,
    Nd,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Data(InitialData),
    /// A snapshot file: two columns for radial samples, or a full box snapshot.
    File(PathBuf),
}

impl InitialSpec {
    pub fn is_radial(&self) -> bool {
        match self {
            InitialSpec::Data(d) => d.is_radial(),
            InitialSpec::File(_) => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    Radial { r_max: f64, cells: usize },
    Box { half_width: f64, nodes: usize },
}

/// Checks run after an evolution. Absent entries are disabled.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checks {
    /// Sup distance of the final snapshot to the predicted limit.
    pub limit: Option<f64>,
    /// Sup drift from the initial field, in units of the grid spacing.
    pub drift_cells: Option<f64>,
    /// Spatial Lipschitz constant at most this multiple of L at every snapshot.
    pub lipschitz_factor: Option<f64>,
    /// Time-Lipschitz quotient within `2 sup|D^2 u0| + A L + 1`.
    pub time_lipschitz: bool,
    pub monotone_radii: Vec<f64>,
    pub monotone_tol: f64,
    /// Dirichlet runs: boundary quotient non-decreasing and finally above this.
    pub blowup: Option<f64>,
    /// Allowed Lyapunov increase per unit time.
    pub lyapunov: Option<f64>,
    /// Every snapshot inside the obstacle band.
    pub band: bool,
    /// Sup difference to a radial run of `radial_cells` cells per R.
    pub radial_match: Option<f64>,
    pub radial_cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub solver: Solver,
    pub mode: NdMode,
    pub symmetry: Symmetry,
    pub flow: FlowParams,
    pub obstacles: ObstacleSpec,
    pub initial: InitialSpec,
    pub grid: GridSpec,
    pub scheme: SchemeParams,
    pub eps: f64,
    pub delta: Option<f64>,
    pub checks: Checks,
    pub output: Option<PathBuf>,
    pub candidate: Option<Family>,
}

impl ScenarioConfig {
    pub fn context(&self) -> Context {
        Context::new(self.obstacles, self.flow)
    }

    pub fn radial_grid(&self) -> Result<crate::grid::RadialGrid> {
        match self.grid {
            GridSpec::Radial { r_max, cells } => crate::grid::RadialGrid::new(r_max, cells),
            GridSpec::Box { .. } => Err(Error::Config("scenario uses a box grid".into())),
        }
    }

    pub fn box_grid(&self) -> Result<crate::grid::BoxGrid> {
        match self.grid {
            GridSpec::Box { half_width, nodes } => crate::grid::BoxGrid::new(self.flow.n(), half_width, nodes),
            GridSpec::Radial { .. } => Err(Error::Config("scenario uses a radial grid".into())),
        }
    }
}

impl FromStr for ScenarioConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_config(s)
    }
}

impl fmt::Display for ScenarioConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

const SECTIONS: [&str; 9] =
    ["run", "flow", "obstacle", "initial", "grid", "scheme", "check", "output", "candidate"];

struct Reader<'a> {
    root: &'a Table,
    used: BTreeMap<(&'static str, String), ()>,
    errors: Vec<String>,
}

impl<'a> Reader<'a> {
    fn raw(&mut self, sec: &'static str, key: &str) -> Option<&'a Value> {
        let v = self.root.get(sec)?.as_table()?.get(key)?;
        self.used.insert((sec, key.to_string()), ());
        Some(v)
    }

    fn err(&mut self, sec: &str, key: &str, msg: impl fmt::Display) {
        self.errors.push(format!("{sec}.{key}: {msg}"));
    }

    fn float(&mut self, sec: &'static str, key: &str) -> Option<f64> {
        match self.raw(sec, key)? {
            Value::Float(v) => Some(*v),
            Value::Integer(v) => Some(*v as f64),
            other => {
                self.err(sec, key, format!("expected a number, got {}", other.type_str()));
                None
            }
        }
    }

    fn float_or(&mut self, sec: &'static str, key: &str, default: f64) -> f64 {
        self.float(sec, key).unwrap_or(default)
    }

    fn required(&mut self, sec: &'static str, key: &str) -> f64 {
        match self.float(sec, key) {
            Some(v) => v,
            None => {
                if self.raw(sec, key).is_none() {
                    self.err(sec, key, "missing required key");
                }
                f64::NAN
            }
        }
    }

    fn uint(&mut self, sec: &'static str, key: &str) -> Option<u64> {
        match self.raw(sec, key)? {
            Value::Integer(v) if *v >= 0 => Some(*v as u64),
            other => {
                self.err(sec, key, format!("expected a non-negative integer, got {other}"));
                None
            }
        }
    }

    fn boolean(&mut self, sec: &'static str, key: &str) -> bool {
        match self.raw(sec, key) {
            None => false,
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                self.err(sec, key, format!("expected true or false, got {other}"));
                false
            }
        }
    }

    fn string(&mut self, sec: &'static str, key: &str) -> Option<String> {
        match self.raw(sec, key)? {
            Value::String(s) => Some(s.clone()),
            other => {
                self.err(sec, key, format!("expected a string, got {other}"));
                None
            }
        }
    }

    fn floats(&mut self, sec: &'static str, key: &str) -> Vec<f64> {
        let Some(v) = self.raw(sec, key) else { return Vec::new() };
        let parsed = v.as_array().and_then(|a| {
            a.iter()
                .map(|x| x.as_float().or_else(|| x.as_integer().map(|i| i as f64)))
                .collect::<Option<Vec<f64>>>()
        });
        parsed.unwrap_or_else(|| {
            self.err(sec, key, "expected an array of numbers");
            Vec::new()
        })
    }

    fn unknown(&mut self) {
        for (sec, v) in self.root {
            let Some(known) = SECTIONS.iter().find(|s| **s == sec.as_str()) else {
                self.errors.push(format!("{sec}: unknown section"));
                continue;
            };
            let Some(t) = v.as_table() else {
                self.errors.push(format!("{sec}: expected a section"));
                continue;
            };
            for k in t.keys() {
                if !self.used.contains_key(&(*known, k.clone())) {
                    self.errors.push(format!("{sec}.{k}: unknown key"));
                }
            }
        }
    }
}

fn bare(e: Error) -> String {
    match e {
        Error::Parameter(m) | Error::Domain(m) | Error::Config(m) => m,
        other => other.to_string(),
    }
}

fn choice<T: Copy>(r: &mut Reader, sec: &'static str, key: &str, default: T, options: &[(&str, T)]) -> T {
    let Some(s) = r.string(sec, key) else { return default };
    match options.iter().find(|o| o.0 == s) {
        Some(o) => o.1,
        None => {
            let names: Vec<&str> = options.iter().map(|o| o.0).collect();
            r.err(sec, key, format!("unknown value {s:?}; expected one of {}", names.join(", ")));
            default
        }
    }
}

/// Parses and validates a scenario; on failure lists every violation found.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    let mut r = Reader { root: &root, used: BTreeMap::new(), errors: Vec::new() };

    let name = r.string("run", "name").unwrap_or_else(|| "run".into());
    let solver = choice(&mut r, "run", "solver", Solver::Radial, &[("radial", Solver::Radial), ("nd", Solver::Nd)]);
    let mode = choice(
        &mut r,
        "run",
        "mode",
        NdMode::Obstacle,
        &[("obstacle", NdMode::Obstacle), ("dirichlet_zero", NdMode::DirichletZero)],
    );
    let symmetry =
        choice(&mut r, "run", "symmetry", Symmetry::Full, &[("full", Symmetry::Full), ("dihedral", Symmetry::Dihedral)]);

    let a = r.required("flow", "a");
    let n = r.uint("flow", "n").unwrap_or(2) as usize;
    let flow = FlowParams::new(a, n).map_err(|e| r.err("flow", "a", bare(e))).ok();

    let big_r = r.required("obstacle", "r");
    let lambda = r.float_or("obstacle", "lambda", 1.0);
    let lower_slope = r.float_or("obstacle", "lower_slope", lambda);
    let lipschitz = r.float("obstacle", "lipschitz");
    let obstacles = ObstacleSpec::new(big_r, lambda)
        .map_err(|e| r.err("obstacle", "r", bare(e)))
        .ok()
        .and_then(|o| o.with_lower_slope(lower_slope).map_err(|e| r.err("obstacle", "lower_slope", bare(e))).ok())
        .and_then(|o| match lipschitz {
            None => Some(o),
            Some(l) if l >= o.lipschitz() => o.with_lipschitz(l).ok(),
            Some(l) => {
                r.err("obstacle", "lipschitz", format!("L = {l} is below the obstacle slopes {}", o.lipschitz()));
                None
            }
        });

    let kind = r.string("initial", "kind").unwrap_or_else(|| "cone".into());
    let initial = match kind.as_str() {
        "cone" => Some(InitialSpec::Data(InitialData::Cone)),
        "zero" => Some(InitialSpec::Data(InitialData::Zero)),
        "appendix" => Some(InitialSpec::Data(InitialData::Appendix)),
        "truncated_cone" => match r.float("initial", "cap") {
            Some(cap) => Some(InitialSpec::Data(InitialData::TruncatedCone { cap })),
            None => {
                r.err("initial", "cap", "required by kind = \"truncated_cone\"");
                None
            }
        },
        "scaled" => match r.float("initial", "factor") {
            Some(factor) => Some(InitialSpec::Data(InitialData::Scaled { factor })),
            None => {
                r.err("initial", "factor", "required by kind = \"scaled\"");
                None
            }
        },
        "bumps" => {
            let raw = r.raw("initial", "bumps").and_then(Value::as_array).cloned().unwrap_or_default();
            let mut bumps = Vec::new();
            for b in &raw {
                let nums: Option<Vec<f64>> = b
                    .as_array()
                    .and_then(|a| a.iter().map(|x| x.as_float().or_else(|| x.as_integer().map(|i| i as f64))).collect());
                match nums.as_deref() {
                    Some(&[x, y, height, width]) if width > 0.0 => {
                        bumps.push(Bump { centre: [x, y], height, width })
                    }
                    _ => r.err("initial", "bumps", "each bump is [x, y, height, width] with width > 0"),
                }
            }
            if bumps.is_empty() {
                r.err("initial", "bumps", "needs at least one bump");
            }
            Some(InitialSpec::Data(InitialData::Bumps(bumps)))
        }
        "file" => match r.string("initial", "path") {
            Some(p) => {
                let p = PathBuf::from(p);
                if !p.is_file() {
                    r.err("initial", "path", format!("{} does not exist", p.display()));
                }
                Some(InitialSpec::File(p))
            }
            None => {
                r.err("initial", "path", "required by kind = \"file\"");
                None
            }
        },
        other => {
            r.err("initial", "kind", format!("unknown initial data {other:?}"));
            None
        }
    };

    let grid = match solver {
        Solver::Radial => {
            let r_max = r.float_or("grid", "r_max", 1.25 * big_r);
            let cells = r.uint("grid", "cells").unwrap_or(400) as usize;
            for k in ["half_width", "nodes"] {
                if r.raw("grid", k).is_some() {
                    r.err("grid", k, "only used with solver = \"nd\"");
                }
            }
            if !(r_max > big_r) {
                r.err("grid", "r_max", format!("must exceed the support radius {big_r}"));
            }
            if cells < crate::grid::RadialGrid::MIN_CELLS {
                r.err("grid", "cells", format!("need at least {}", crate::grid::RadialGrid::MIN_CELLS));
            }
            GridSpec::Radial { r_max, cells }
        }
        Solver::Nd => {
            let half_width = r.float_or("grid", "half_width", big_r);
            let nodes = r.uint("grid", "nodes").unwrap_or(128) as usize;
            for k in ["r_max", "cells"] {
                if r.raw("grid", k).is_some() {
                    r.err("grid", k, "only used with solver = \"radial\"");
                }
            }
            if nodes < 5 {
                r.err("grid", "nodes", "need at least 5 nodes per axis");
            }
            GridSpec::Box { half_width, nodes }
        }
    };

    let d = SchemeParams::default();
    let scheme = SchemeParams {
        cfl: r.float_or("scheme", "cfl", d.cfl),
        horizon: r.float_or("scheme", "horizon", d.horizon),
        snapshot_interval: r.float_or("scheme", "snapshot_interval", d.snapshot_interval),
        steady_tol: r.float_or("scheme", "steady_tol", d.steady_tol),
        patience: r.uint("scheme", "patience").map_or(d.patience, |p| p as usize),
    };
    if let Err(Error::Violations(v)) = scheme.validate() {
        r.errors.extend(v.into_iter().map(|m| format!("scheme: {m}")));
    }
    let eps = r.float_or("scheme", "eps", 0.0);
    let delta = r.float("scheme", "delta");
    if !(eps >= 0.0) {
        r.err("scheme", "eps", format!("must be non-negative, got {eps}"));
    }
    if let Some(dl) = delta {
        if !(dl > 0.0) {
            r.err("scheme", "delta", format!("must be positive, got {dl}"));
        }
    }

    let checks = Checks {
        limit: r.float("check", "limit"),
        drift_cells: r.float("check", "drift_cells"),
        lipschitz_factor: r.float("check", "lipschitz_factor"),
        time_lipschitz: r.boolean("check", "time_lipschitz"),
        monotone_radii: r.floats("check", "monotone_radii"),
        monotone_tol: r.float_or("check", "monotone_tol", 1e-9),
        blowup: r.float("check", "blowup"),
        lyapunov: r.float("check", "lyapunov"),
        band: r.boolean("check", "band"),
        radial_match: r.float("check", "radial_match"),
        radial_cells: r.uint("check", "radial_cells").unwrap_or(256) as usize,
    };

    let output = r.string("output", "dir").map(PathBuf::from);

    let candidate = match r.string("candidate", "tag") {
        None => None,
        Some(tag) => match tag.parse::<Tag>() {
            Err(e) => {
                r.err("candidate", "tag", e);
                None
            }
            Ok(tag) => {
                let mut params = BTreeMap::new();
                let keys: Vec<String> = root
                    .get("candidate")
                    .and_then(Value::as_table)
                    .map(|t| t.keys().filter(|k| *k != "tag").cloned().collect())
                    .unwrap_or_default();
                for k in keys {
                    if let Some(v) = r.float("candidate", &k) {
                        params.insert(k, v);
                    }
                }
                match Family::from_params(tag, &params) {
                    Ok(f) => Some(f),
                    Err(errs) => {
                        r.errors.extend(errs);
                        None
                    }
                }
            }
        },
    };
    r.unknown();

    let mut errors = std::mem::take(&mut r.errors);
    if let (Some(flow), Some(obstacles), Some(initial)) = (flow, obstacles, initial.as_ref()) {
        let cfg = ScenarioConfig {
            name,
            solver,
            mode,
            symmetry,
            flow,
            obstacles,
            initial: initial.clone(),
            grid,
            scheme,
            eps,
            delta,
            checks,
            output,
            candidate,
        };
        errors.extend(cross_checks(&cfg));
        if errors.is_empty() {
            return Ok(cfg);
        }
    }
    Err(Error::Violations(errors))
}

fn cross_checks(c: &ScenarioConfig) -> Vec<String> {
    let mut v = Vec::new();
    let nd = c.solver == Solver::Nd;
    if !nd && !c.initial.is_radial() {
        v.push("initial.kind: non-radial initial data needs solver = \"nd\"".into());
    }
    if !nd && c.mode == NdMode::DirichletZero {
        v.push("run.mode: dirichlet_zero needs solver = \"nd\"".into());
    }
    if c.symmetry == Symmetry::Dihedral && !(nd && c.flow.n() == 2) {
        v.push("run.symmetry: dihedral storage needs solver = \"nd\" and n = 2".into());
    }
    if matches!(c.initial, InitialSpec::Data(InitialData::Bumps(_))) && c.flow.n() != 2 {
        v.push("initial.bumps: bumps are planar; set flow.n = 2".into());
    }
    if !nd && c.eps > 0.0 {
        v.push("scheme.eps: regularisation only applies to solver = \"nd\"".into());
    }
    if let GridSpec::Box { half_width, .. } = c.grid {
        let reach = c.obstacles.big_r() + 0.5 * c.eps;
        if half_width < reach {
            v.push(format!("grid.half_width: {half_width} does not contain the support radius {reach}"));
        }
    }
    let ch = &c.checks;
    if ch.limit.is_some() && !c.initial.is_radial() {
        v.push("check.limit: the predicted limit needs radial initial data".into());
    }
    if ch.limit.is_some() && nd && c.mode == NdMode::DirichletZero {
        v.push("check.limit: the predicted limit is for the obstacle problem".into());
    }
    if ch.blowup.is_some() && !(nd && c.mode == NdMode::DirichletZero) {
        v.push("check.blowup: needs solver = \"nd\" and mode = \"dirichlet_zero\"".into());
    }
    if ch.lyapunov.is_some() && !(nd && c.eps > 0.0) {
        v.push("check.lyapunov: needs solver = \"nd\" with scheme.eps > 0".into());
    }
    if ch.radial_match.is_some() && !(nd && c.initial.is_radial() && c.mode == NdMode::Obstacle) {
        v.push("check.radial_match: needs solver = \"nd\" in obstacle mode with radial initial data".into());
    }
    if (!ch.monotone_radii.is_empty() || ch.time_lipschitz) && nd {
        v.push("check: monotone_radii and time_lipschitz apply to solver = \"radial\"".into());
    }
    if ch.monotone_radii.iter().any(|&r| !(r > 0.0)) {
        v.push("check.monotone_radii: radii must be positive".into());
    }
    if let Some(fam) = c.candidate {
        if let Err(errs) = Candidate::new(fam, c.context()).validate_params() {
            v.extend(errs.iter().map(|e| format!("candidate.{e}")));
        }
    }
    v
}

/// Writes a config that parses back to the same value.
pub fn render(c: &ScenarioConfig) -> String {
    let mut root = Table::new();
    let mut sec = |name: &str, entries: Vec<(&str, Value)>| {
        if !entries.is_empty() {
            root.insert(name.into(), Value::Table(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()));
        }
    };
    let s = |x: &str| Value::String(x.into());
    let f = Value::Float;
    let i = |x: u64| Value::Integer(x as i64);
    sec(
        "run",
        vec![
            ("name", s(&c.name)),
            ("solver", s(if c.solver == Solver::Nd { "nd" } else { "radial" })),
            ("mode", s(if c.mode == NdMode::DirichletZero { "dirichlet_zero" } else { "obstacle" })),
            ("symmetry", s(if c.symmetry == Symmetry::Dihedral { "dihedral" } else { "full" })),
        ],
    );
    sec("flow", vec![("a", f(c.flow.a())), ("n", i(c.flow.n() as u64))]);
    sec(
        "obstacle",
        vec![
            ("r", f(c.obstacles.big_r())),
            ("lambda", f(c.obstacles.lambda())),
            ("lower_slope", f(c.obstacles.lower_slope())),
            ("lipschitz", f(c.obstacles.lipschitz())),
        ],
    );
    let initial = match &c.initial {
        InitialSpec::File(p) => vec![("kind", s("file")), ("path", s(&p.to_string_lossy()))],
        InitialSpec::Data(d) => match d {
            InitialData::Cone => vec![("kind", s("cone"))],
            InitialData::Zero => vec![("kind", s("zero"))],
            InitialData::Appendix => vec![("kind", s("appendix"))],
            InitialData::TruncatedCone { cap } => vec![("kind", s("truncated_cone")), ("cap", f(*cap))],
            InitialData::Scaled { factor } => vec![("kind", s("scaled")), ("factor", f(*factor))],
            InitialData::Bumps(b) => vec![
                ("kind", s("bumps")),
                (
                    "bumps",
                    Value::Array(
                        b.iter()
                            .map(|b| Value::Array(vec![f(b.centre[0]), f(b.centre[1]), f(b.height), f(b.width)]))
                            .collect(),
                    ),
                ),
            ],
            InitialData::RadialSamples(_) => vec![("kind", s("file"))],
        },
    };
    sec("initial", initial);
    sec(
        "grid",
        match c.grid {
            GridSpec::Radial { r_max, cells } => vec![("r_max", f(r_max)), ("cells", i(cells as u64))],
            GridSpec::Box { half_width, nodes } => vec![("half_width", f(half_width)), ("nodes", i(nodes as u64))],
        },
    );
    let mut scheme = vec![
        ("cfl", f(c.scheme.cfl)),
        ("horizon", f(c.scheme.horizon)),
        ("snapshot_interval", f(c.scheme.snapshot_interval)),
        ("steady_tol", f(c.scheme.steady_tol)),
        ("patience", i(c.scheme.patience as u64)),
        ("eps", f(c.eps)),
    ];
    if let Some(d) = c.delta {
        scheme.push(("delta", f(d)));
    }
    sec("scheme", scheme);
    let ch = &c.checks;
    let mut check = vec![
        ("monotone_tol", f(ch.monotone_tol)),
        ("radial_cells", i(ch.radial_cells as u64)),
    ];
    for (k, v) in [
        ("limit", ch.limit),
        ("drift_cells", ch.drift_cells),
        ("lipschitz_factor", ch.lipschitz_factor),
        ("blowup", ch.blowup),
        ("lyapunov", ch.lyapunov),
        ("radial_match", ch.radial_match),
    ] {
        if let Some(v) = v {
            check.push((k, f(v)));
        }
    }
    if ch.time_lipschitz {
        check.push(("time_lipschitz", Value::Boolean(true)));
    }
    if ch.band {
        check.push(("band", Value::Boolean(true)));
    }
    if !ch.monotone_radii.is_empty() {
        check.push(("monotone_radii", Value::Array(ch.monotone_radii.iter().map(|&x| f(x)).collect())));
    }
    sec("check", check);
    if let Some(dir) = &c.output {
        sec("output", vec![("dir", s(&dir.to_string_lossy()))]);
    }
    if let Some(fam) = &c.candidate {
        let mut e = vec![("tag", s(fam.tag().as_str()))];
        e.extend(fam.params().into_iter().map(|(k, v)| (k, f(v))));
        sec("candidate", e);
    }
    toml::to_string(&root).expect("a table of plain values always serialises")
}

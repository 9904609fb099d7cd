//! Running one scenario: evolution or candidate verification, checks, files, report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::candidates::{Candidate, Family};
use crate::catalog::{box_initial, expected_outcome, initial_data, Expected};
use crate::checker::{verify_candidate, SamplingSpec};
use crate::config::{render, ScenarioConfig, Solver};
use crate::diagnostics::{monotonicity_report, sup_distance, temporal_budget, time_lipschitz, Trajectory};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{BoxGrid, Grid, RadialGrid};
use crate::io::{format_box_series, format_box_snapshot, format_radial_series, format_radial_snapshot, write_text};
use crate::nd::{evolve_nd, NdMode, NdSettings};
use crate::plot::{emit_plot_script, PlotKind};
use crate::profile::interpolate_field;
use crate::radial::evolve_radial;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Hypothesis of the check not met; reported but not counted.
    Skip,
}

impl Verdict {
    fn of(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skip => "SKIP",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub verdict: Verdict,
    pub value: f64,
    pub threshold: f64,
    pub note: Option<String>,
}

impl CheckResult {
    fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), verdict: Verdict::of(value <= threshold), value, threshold, note: None }
    }

    fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), verdict: Verdict::of(value >= threshold), value, threshold, note: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scenario: String,
    pub expected: String,
    pub config: String,
    pub final_time: f64,
    pub steady: bool,
    pub checks: Vec<CheckResult>,
    pub limit_distance: Option<f64>,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Verdict::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Line-oriented text: `check <name> PASS|FAIL|SKIP value=<v> threshold=<t>`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario {}", self.scenario);
        let _ = writeln!(s, "expected {}", self.expected);
        let _ = writeln!(s, "final_time {}", self.final_time);
        let _ = writeln!(s, "steady {}", self.steady);
        if let Some(d) = self.limit_distance {
            let _ = writeln!(s, "limit_distance {d:.6e}");
        }
        for c in &self.checks {
            let _ = write!(
                s,
                "check {} {} value={:.6e} threshold={:.6e}",
                c.name,
                c.verdict.as_str(),
                c.value,
                c.threshold
            );
            if let Some(n) = &c.note {
                let _ = write!(s, " note={n}");
            }
            s.push('\n');
        }
        for f in &self.files {
            let _ = writeln!(s, "file {}", f.display());
        }
        let _ = writeln!(s, "verdict {}", if self.passed() { "PASS" } else { "FAIL" });
        let _ = writeln!(s, "# config");
        for l in self.config.lines() {
            let _ = writeln!(s, "#   {l}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Overrides the config's output directory.
    pub out: Option<PathBuf>,
    /// Write every k-th snapshot (the last one always).
    pub snapshot_every: usize,
    /// Require the limit check even when the config leaves it off.
    pub converge: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { out: None, snapshot_every: 1, converge: false }
    }
}

/// Default tolerance for `converge` when the config sets none.
pub const DEFAULT_LIMIT_TOL: f64 = 0.02;

fn base_report(cfg: &ScenarioConfig, expected: &Expected) -> RunReport {
    RunReport {
        scenario: cfg.name.clone(),
        expected: expected.describe(),
        config: render(cfg),
        final_time: 0.0,
        steady: false,
        checks: Vec::new(),
        limit_distance: None,
        files: Vec::new(),
    }
}

/// Evolves the scenario and evaluates every enabled check.
pub fn run_evolve(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunReport> {
    if cfg.candidate.is_some() && cfg.checks == Default::default() {
        return Err(Error::Usage(format!("{} describes a candidate; use verify", cfg.name)));
    }
    let mut cfg = cfg.clone();
    if opts.converge && cfg.checks.limit.is_none() {
        cfg.checks.limit = Some(DEFAULT_LIMIT_TOL);
    }
    cfg.candidate = None;
    let expected = expected_outcome(&cfg)?;
    let out = opts.out.clone().or_else(|| cfg.output.clone());
    match cfg.solver {
        Solver::Radial => run_radial(&cfg, &expected, out.as_deref(), opts),
        Solver::Nd => run_box(&cfg, &expected, out.as_deref(), opts),
    }
}

fn lipschitz_check(cfg: &ScenarioConfig, series: &[crate::diagnostics::DiagnosticRecord]) -> Option<CheckResult> {
    let factor = cfg.checks.lipschitz_factor?;
    let worst = series.iter().map(|r| r.lipschitz).fold(0.0, f64::max);
    Some(CheckResult::at_most("lipschitz", worst, factor * cfg.obstacles.lipschitz()))
}

fn band_violation<G: Grid>(snaps: &[(f64, Field<G>)], lo: &[f64], hi: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for (_, u) in snaps {
        for ((v, l), h) in u.values().iter().zip(lo).zip(hi) {
            worst = worst.max(l - v).max(v - h);
        }
    }
    worst
}

fn drift<G: Grid>(traj: &Trajectory<G>) -> Result<f64> {
    let u0 = &traj.snapshots[0].1;
    traj.snapshots.iter().try_fold(0.0f64, |m, (_, u)| Ok(m.max(sup_distance(u0, u)?)))
}

fn run_radial(cfg: &ScenarioConfig, expected: &Expected, out: Option<&Path>, opts: &RunOptions) -> Result<RunReport> {
    let g = cfg.radial_grid()?;
    let data = initial_data(cfg)?;
    let u0 = data.sample_radial(&cfg.obstacles, &g)?;
    let reference = expected.radial_field(cfg, &u0);
    let traj = evolve_radial(&u0, &cfg.obstacles, &cfg.flow, &cfg.scheme, reference.as_ref())?;
    let mut rep = base_report(cfg, expected);
    rep.final_time = traj.final_time();
    rep.steady = traj.steady;
    let ch = &cfg.checks;
    let last = traj.final_field();

    if let (Some(tol), Some(r)) = (ch.limit, reference.as_ref()) {
        let d = sup_distance(last, r)?;
        rep.limit_distance = Some(d);
        rep.checks.push(CheckResult::at_most("limit", d, tol));
    }
    if let Some(k) = ch.drift_cells {
        rep.checks.push(CheckResult::at_most("drift", drift(&traj)?, k * g.h()));
    }
    rep.checks.extend(lipschitz_check(cfg, &traj.series));
    if ch.time_lipschitz {
        let budget = temporal_budget(&u0, &cfg.flow, cfg.obstacles.lipschitz());
        rep.checks.push(CheckResult::at_most("time-lipschitz", time_lipschitz(&traj)?, budget));
    }
    for m in monotonicity_report(&traj, &ch.monotone_radii, &cfg.flow, &cfg.obstacles, ch.monotone_tol) {
        let mut c = CheckResult::at_least(format!("monotone@{}", m.radius), m.worst_increment, -ch.monotone_tol);
        if let Some(note) = m.skipped {
            c.verdict = Verdict::Skip;
            c.note = Some(note.replace(' ', "_"));
        } else if m.detached_pairs == 0 {
            c.note = Some("no_detached_snapshot_pairs".into());
        }
        rep.checks.push(c);
    }
    if ch.band {
        let (lo, hi) = cfg.obstacles.sample_radial(&g)?;
        rep.checks.push(CheckResult::at_most("band", band_violation(&traj.snapshots, lo.values(), hi.values()), 1e-12));
    }

    if let Some(dir) = out {
        let snaps: Vec<(f64, String)> =
            select(&traj.snapshots, opts.snapshot_every).map(|(t, u)| (*t, format_radial_snapshot(*t, u))).collect();
        write_outputs(&mut rep, dir, cfg, snaps, format_radial_series(&traj.series), PlotKind::Profiles)?;
    }
    Ok(rep)
}

fn run_box(cfg: &ScenarioConfig, expected: &Expected, out: Option<&Path>, opts: &RunOptions) -> Result<RunReport> {
    let g = cfg.box_grid()?;
    let u0 = box_initial(cfg, &g)?;
    let mut settings = NdSettings::new(cfg.obstacles, cfg.flow, cfg.mode).with_eps(cfg.eps).with_symmetry(cfg.symmetry);
    if let Some(d) = cfg.delta {
        settings = settings.with_delta(d);
    }
    let reference = expected.box_field(cfg, &u0);
    let traj = evolve_nd(&u0, &settings, &cfg.scheme, reference.as_ref())?;
    let mut rep = base_report(cfg, expected);
    rep.final_time = traj.final_time();
    rep.steady = traj.steady;
    let ch = &cfg.checks;
    let last = traj.final_field();

    if let (Some(tol), Some(r)) = (ch.limit, reference.as_ref()) {
        let d = sup_distance(last, r)?;
        rep.limit_distance = Some(d);
        rep.checks.push(CheckResult::at_most("limit", d, tol));
    }
    if let Some(k) = ch.drift_cells {
        rep.checks.push(CheckResult::at_most("drift", drift(&traj)?, k * g.h()));
    }
    rep.checks.extend(lipschitz_check(cfg, &traj.series));
    if let Some(tol) = ch.lyapunov {
        let worst = traj
            .series
            .windows(2)
            .filter_map(|w| Some((w[1].lyapunov? - w[0].lyapunov?) / (w[1].t - w[0].t)))
            .fold(f64::NEG_INFINITY, f64::max);
        rep.checks.push(CheckResult::at_most("lyapunov", worst, tol));
    }
    if let Some(threshold) = ch.blowup {
        let q: Vec<f64> = traj.series.iter().filter_map(|r| r.boundary_quotient).collect();
        let worst_drop = q.windows(2).map(|w| w[0] - w[1]).fold(0.0f64, f64::max);
        rep.checks.push(CheckResult::at_most("blowup-monotone", worst_drop, 0.0));
        rep.checks.push(CheckResult::at_least("blowup-final", q.last().copied().unwrap_or(0.0), threshold));
    }
    if let Some(tol) = ch.radial_match {
        rep.checks.push(CheckResult::at_most("radial-match", radial_match(cfg, last)?, tol));
    }
    if ch.band && cfg.mode == NdMode::Obstacle {
        let (lo, hi) = cfg.obstacles.sample_box(&g, cfg.eps)?;
        rep.checks.push(CheckResult::at_most("band", band_violation(&traj.snapshots, lo.values(), hi.values()), 1e-12));
    }

    if let Some(dir) = out {
        let snaps: Vec<(f64, String)> =
            select(&traj.snapshots, opts.snapshot_every).map(|(t, u)| (*t, format_box_snapshot(*t, u))).collect();
        let kind = match cfg.mode {
            NdMode::DirichletZero => PlotKind::BoundaryQuotient,
            NdMode::Obstacle if cfg.eps > 0.0 => PlotKind::Lyapunov,
            NdMode::Obstacle => PlotKind::Profiles,
        };
        write_outputs(&mut rep, dir, cfg, snaps, format_box_series(&traj.series), kind)?;
    }
    Ok(rep)
}

/// Sup over box nodes of the difference to a radial run, interpolated at each node radius.
pub fn radial_match(cfg: &ScenarioConfig, nd_final: &Field<BoxGrid>) -> Result<f64> {
    let big_r = cfg.obstacles.big_r();
    let h = big_r / cfg.checks.radial_cells as f64;
    let rg = RadialGrid::with_spacing(1.25 * big_r, h)?;
    let data = initial_data(cfg)?;
    let r0 = data.sample_radial(&cfg.obstacles, &rg)?;
    let traj = evolve_radial(&r0, &cfg.obstacles, &cfg.flow, &cfg.scheme, None)?;
    let rad = traj.final_field();
    let radii = nd_final.grid().radii();
    Ok(nd_final
        .values()
        .iter()
        .zip(&radii)
        .map(|(v, &r)| (v - interpolate_field(rad, r)).abs())
        .fold(0.0, f64::max))
}

fn select<T>(snaps: &[T], every: usize) -> impl Iterator<Item = &T> {
    let every = every.max(1);
    let last = snaps.len().saturating_sub(1);
    snaps.iter().enumerate().filter(move |(i, _)| i % every == 0 || *i == last).map(|(_, s)| s)
}

fn write_outputs(
    rep: &mut RunReport,
    dir: &Path,
    cfg: &ScenarioConfig,
    snaps: Vec<(f64, String)>,
    series: String,
    kind: PlotKind,
) -> Result<()> {
    let mut paths = Vec::new();
    for (k, (_, text)) in snaps.iter().enumerate() {
        let p = dir.join(format!("snap_{k:05}.txt"));
        write_text(&p, text)?;
        paths.push(p);
    }
    let series_path = dir.join("series.txt");
    write_text(&series_path, &series)?;
    let config_path = dir.join("config.toml");
    write_text(&config_path, &render(cfg))?;
    let plot_path = dir.join("plot.gp");
    write_text(&plot_path, &emit_plot_script(&paths, &series_path, kind, cfg)?)?;
    rep.files.extend(paths);
    rep.files.extend([series_path, config_path, plot_path]);
    let report_path = dir.join("report.txt");
    rep.files.push(report_path.clone());
    write_text(&report_path, &rep.render())?;
    Ok(())
}

/// Verifies the scenario's candidate in each of its modes, plus the plateau radius
/// against the initial data where the candidate has one.
pub fn run_verify(cfg: &ScenarioConfig, spec: &SamplingSpec, opts: &RunOptions) -> Result<RunReport> {
    let fam = cfg
        .candidate
        .ok_or_else(|| Error::Usage(format!("{} has no [candidate] section", cfg.name)))?;
    let expected = expected_outcome(cfg)?;
    let c = Candidate::validated(fam, cfg.context())?;
    let mut rep = base_report(cfg, &expected);
    rep.final_time = spec.t_check;
    let mut texts = Vec::new();
    for &mode in fam.tag().modes() {
        let r = verify_candidate(&c, mode, spec)?;
        let worst = r.worst.map_or(0.0, |w| w.residual);
        let mut check = CheckResult {
            name: format!("{}-{}", fam.tag(), mode),
            verdict: Verdict::of(r.passed),
            value: worst,
            threshold: spec.slack,
            note: None,
        };
        if r.failure_count > 0 || r.kink_failures() > 0 {
            check.note = Some(format!("failed_samples={}_kinks={}", r.failure_count, r.kink_failures()));
        }
        rep.checks.push(check);
        texts.push((mode, r.render()));
    }
    if let Family::LimitPsiUnder { r0, b, .. } | Family::LowerBarrierPhiUnder { r0, b, .. } = fam {
        let data = initial_data(cfg)?;
        let u0 = |r: f64| data.radial_value(&cfg.obstacles, r).unwrap_or(0.0);
        let mut check = CheckResult::at_most("plateau-radius", (u0(r0) - b).abs(), 1e-9);
        if let Err(v) = c.check_plateau_radius(u0) {
            check.verdict = Verdict::Fail;
            check.note = Some(v.to_string().replace(' ', "_"));
        }
        rep.checks.push(check);
    }
    if let Some(dir) = opts.out.clone().or_else(|| cfg.output.clone()) {
        for (mode, text) in texts {
            let p = dir.join(format!("verify_{}.txt", mode.to_string().to_lowercase()));
            write_text(&p, &text)?;
            rep.files.push(p);
        }
        let report_path = dir.join("report.txt");
        rep.files.push(report_path.clone());
        write_text(&report_path, &rep.render())?;
    }
    Ok(rep)
}

/// Evolution or verification, whichever the scenario describes.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunReport> {
    if cfg.candidate.is_some() {
        run_verify(cfg, &SamplingSpec::default(), opts)
    } else {
        run_evolve(cfg, opts)
    }
}

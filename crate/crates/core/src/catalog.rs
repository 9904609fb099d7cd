//! Named scenarios grouped into suites, with the outcome each one is expected to show.
//!
//! Scenario files live in `scenarios/`; the leading comment line states the
//! expected behaviour in plain words.

use crate::candidates::{Candidate, Family, Mode, Tag};
use crate::config::{parse_config, GridSpec, InitialSpec, ScenarioConfig, Solver};
use crate::error::{Error, Result};
use crate::field::{lipschitz_constant, Field};
use crate::grid::{BoxGrid, Grid, RadialGrid};
use crate::nd::NdMode;
use crate::obstacle::ObstacleSpec;
use crate::profile::InitialData;
use crate::radial::compute_b;

pub const CATALOG_VERSION: u32 = 1;

pub const SUITES: [&str; 9] = [
    "thm13-case1",
    "thm13-case2",
    "thm13-equality",
    "stationary-family",
    "appendix-blowup",
    "candidates-all",
    "problem-b-bumps",
    "lyapunov-descent",
    "radial-nd-consistency",
];

macro_rules! scenario {
    ($suite:literal, $file:literal) => {
        ($suite, include_str!(concat!("../scenarios/", $file, ".toml")))
    };
}

const FILES: [(&str, &str); 19] = [
    scenario!("thm13-case1", "cone-a04"),
    scenario!("thm13-case2", "cone-a2"),
    scenario!("thm13-equality", "cone-a05"),
    scenario!("stationary-family", "psi-c-00"),
    scenario!("stationary-family", "psi-c-05"),
    scenario!("stationary-family", "psi-c-10"),
    scenario!("stationary-family", "psi-c-15"),
    scenario!("appendix-blowup", "appendix-dirichlet"),
    scenario!("candidates-all", "candidate-psi-c"),
    scenario!("candidates-all", "candidate-ustar"),
    scenario!("candidates-all", "candidate-ustar-eps"),
    scenario!("candidates-all", "candidate-ustar-nu1"),
    scenario!("candidates-all", "candidate-ubar-eps"),
    scenario!("candidates-all", "candidate-phi-under"),
    scenario!("candidates-all", "candidate-psi-under"),
    scenario!("candidates-all", "candidate-appendix"),
    scenario!("problem-b-bumps", "bumps-a2"),
    scenario!("lyapunov-descent", "cone-eps"),
    scenario!("radial-nd-consistency", "cone-box"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub suite: &'static str,
    /// Plain statement of the expected behaviour.
    pub anchor: String,
    pub config: ScenarioConfig,
}

impl Scenario {
    pub fn name(&self) -> &str {
        &self.config.name
    }
}

fn load(suite: &'static str, text: &str) -> Result<Scenario> {
    let anchor = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim())
        .collect::<Vec<_>>()
        .join(" ");
    Ok(Scenario { suite, anchor, config: parse_config(text)? })
}

/// Every catalogued scenario, in suite order.
pub fn catalog() -> Result<Vec<Scenario>> {
    FILES.iter().map(|(s, t)| load(s, t)).collect()
}

pub fn suite(name: &str) -> Result<Vec<Scenario>> {
    if !SUITES.contains(&name) {
        return Err(Error::Usage(format!("unknown suite {name:?}; known suites: {}", SUITES.join(", "))));
    }
    Ok(catalog()?.into_iter().filter(|s| s.suite == name).collect())
}

pub fn find(name: &str) -> Result<Scenario> {
    catalog()?
        .into_iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::Usage(format!("no scenario named {name:?}")))
}

/// What a scenario should show.
#[derive(Debug, Clone, PartialEq)]
pub enum Expected {
    /// Uniform convergence to `min(psi+, plateau)`; a zero plateau is the zero field.
    Limit { plateau: f64 },
    /// The initial profile does not move.
    Stationary,
    /// Boundary quotient non-decreasing and finally above the threshold.
    Growth { threshold: f64 },
    /// Regularised energy non-increasing.
    Descent,
    /// Box run agrees with a radial run.
    RadialAgreement,
    /// Candidate passes in each listed mode.
    Candidate { tag: Tag, modes: Vec<Mode> },
    /// No known answer: confinement and Lipschitz bounds only.
    Exploratory,
}

impl Expected {
    pub fn describe(&self) -> String {
        match self {
            Expected::Limit { plateau } if *plateau == 0.0 => "limit zero field".into(),
            Expected::Limit { plateau } => format!("limit truncated cone at {plateau}"),
            Expected::Stationary => "stationary initial profile".into(),
            Expected::Growth { threshold } => format!("boundary quotient growing past {threshold}"),
            Expected::Descent => "non-increasing regularised energy".into(),
            Expected::RadialAgreement => "agreement with the radial solver".into(),
            Expected::Candidate { tag, modes } => {
                let m: Vec<String> = modes.iter().map(|m| m.to_string()).collect();
                format!("{tag} passes {}", m.join(" and "))
            }
            Expected::Exploratory => "exploratory: confinement and Lipschitz bound".into(),
        }
    }

    /// The expected profile on a radial grid, where there is one.
    pub fn radial_field(&self, cfg: &ScenarioConfig, u0: &Field<RadialGrid>) -> Option<Field<RadialGrid>> {
        let g = *u0.grid();
        match self {
            Expected::Limit { plateau } => {
                Field::new(g, g.nodes().iter().map(|&r| limit_value(&cfg.obstacles, *plateau, r)).collect()).ok()
            }
            Expected::Stationary => Some(u0.clone()),
            _ => None,
        }
    }

    pub fn box_field(&self, cfg: &ScenarioConfig, u0: &Field<BoxGrid>) -> Option<Field<BoxGrid>> {
        let g = u0.grid().clone();
        match self {
            Expected::Limit { plateau } => Field::new(
                g.clone(),
                g.radii().iter().map(|&r| limit_value(&cfg.obstacles, *plateau, r)).collect(),
            )
            .ok(),
            Expected::Stationary => Some(u0.clone()),
            _ => None,
        }
    }
}

fn limit_value(obs: &ObstacleSpec, plateau: f64, r: f64) -> f64 {
    obs.upper(r).min(plateau)
}

/// Initial data as an analytic profile, reading snapshot files where needed.
pub fn initial_data(cfg: &ScenarioConfig) -> Result<InitialData> {
    match &cfg.initial {
        InitialSpec::Data(d) => Ok(d.clone()),
        InitialSpec::File(p) => {
            let snap = crate::io::read_snapshot(p)?;
            Ok(InitialData::RadialSamples(snap.radial_samples()?))
        }
    }
}

/// Classifies the scenario and checks the hypotheses its expectation rests on:
/// radial data, a non-positive lower obstacle, data between the obstacles, and
/// data within the Lipschitz budget. Violations are named one per line.
pub fn expected_outcome(cfg: &ScenarioConfig) -> Result<Expected> {
    if let Some(fam) = cfg.candidate {
        let c = Candidate::new(fam, cfg.context());
        if let Err(v) = c.validate_params() {
            return Err(Error::Violations(v.iter().map(|v| format!("parameter bounds: {v}")).collect()));
        }
        return Ok(Expected::Candidate { tag: fam.tag(), modes: fam.tag().modes().to_vec() });
    }
    let ch = &cfg.checks;
    let mut v = Vec::new();
    let radial = cfg.initial.is_radial();
    let obstacle_mode = cfg.mode == NdMode::Obstacle;
    let obs = &cfg.obstacles;

    if obs.lower(0.0) > 0.0 {
        v.push(format!("sign of the lower obstacle: psi-(0) = {} is positive", obs.lower(0.0)));
    }
    if (ch.limit.is_some() || ch.drift_cells.is_some() || ch.radial_match.is_some()) && !radial {
        v.push("radial symmetry: the expected profile needs radial initial data".into());
    }
    if obstacle_mode {
        match sample_initial(cfg) {
            Ok((lip, outside)) => {
                if let Some((r, val, lo, hi)) = outside {
                    v.push(format!("obstacle ordering: u0 = {val} at r = {r} lies outside [{lo}, {hi}]"));
                }
                if lip > obs.lipschitz() * (1.0 + 1e-9) {
                    v.push(format!("Lipschitz budget: u0 has slope {lip} above L = {}", obs.lipschitz()));
                }
            }
            Err(e) => v.push(format!("initial data: {e}")),
        }
    }

    let kind = if let Some(threshold) = ch.blowup {
        Expected::Growth { threshold }
    } else if ch.lyapunov.is_some() {
        Expected::Descent
    } else if ch.radial_match.is_some() {
        Expected::RadialAgreement
    } else if ch.limit.is_some() {
        let plateau = if obs.big_r() <= cfg.flow.critical_radius() {
            0.0
        } else {
            let d = initial_data(cfg)?;
            let h = match cfg.grid {
                GridSpec::Radial { r_max, cells } => r_max / cells as f64,
                GridSpec::Box { half_width, nodes } => 2.0 * half_width / (nodes - 1) as f64,
            };
            compute_b(|r| d.radial_value(obs, r).unwrap_or(0.0), &cfg.flow, obs.big_r(), h)?
        };
        Expected::Limit { plateau }
    } else if ch.drift_cells.is_some() {
        if let InitialSpec::Data(InitialData::TruncatedCone { cap }) = cfg.initial {
            let c = Candidate::new(Family::StationaryPsiC { c: cap }, cfg.context());
            if let Err(errs) = c.validate_params() {
                v.extend(errs.iter().map(|e| format!("stationary range: {e}")));
            }
        }
        Expected::Stationary
    } else {
        Expected::Exploratory
    };
    if v.is_empty() {
        Ok(kind)
    } else {
        Err(Error::Violations(v))
    }
}

type Outside = Option<(f64, f64, f64, f64)>;

/// Lipschitz constant of the sampled data and the first node outside the band.
fn sample_initial(cfg: &ScenarioConfig) -> Result<(f64, Outside)> {
    let obs = &cfg.obstacles;
    let outside = |r: f64, v: f64, lo: f64, hi: f64| (v < lo - 1e-12 || v > hi + 1e-12).then_some((r, v, lo, hi));
    match cfg.solver {
        Solver::Radial => {
            let g = cfg.radial_grid()?;
            let u0 = initial_data(cfg)?.sample_radial(obs, &g)?;
            let (lo, hi) = obs.sample_radial(&g)?;
            let bad = g.nodes().iter().enumerate().find_map(|(i, &r)| {
                outside(r, u0.values()[i], lo.values()[i], hi.values()[i])
            });
            Ok((lipschitz_constant(&u0)?, bad))
        }
        Solver::Nd => {
            let g = cfg.box_grid()?;
            let u0 = box_initial(cfg, &g)?;
            let (lo, hi) = obs.sample_box(&g, cfg.eps)?;
            let radii = g.radii();
            let bad = (0..g.len()).find_map(|f| outside(radii[f], u0.values()[f], lo.values()[f], hi.values()[f]));
            Ok((lipschitz_constant(&u0)?, bad))
        }
    }
}

/// Initial field on the box. Under regularisation the data are clamped into
/// the smoothed band.
pub fn box_initial(cfg: &ScenarioConfig, g: &BoxGrid) -> Result<Field<BoxGrid>> {
    let u0 = match &cfg.initial {
        InitialSpec::File(p) => {
            let snap = crate::io::read_snapshot(p)?;
            if snap.columns() == 2 {
                InitialData::RadialSamples(snap.radial_samples()?).sample_box(&cfg.obstacles, g)?
            } else {
                snap.box_field(g)?
            }
        }
        InitialSpec::Data(d) => d.sample_box(&cfg.obstacles, g)?,
    };
    if cfg.eps > 0.0 && cfg.mode == NdMode::Obstacle {
        let (lo, hi) = cfg.obstacles.sample_box(g, cfg.eps)?;
        return crate::field::clamp_to_obstacles(&u0, &lo, &hi);
    }
    Ok(u0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_file_parses_and_is_classified() {
        let all = catalog().unwrap();
        assert_eq!(all.len(), FILES.len());
        for s in &all {
            assert!(!s.anchor.is_empty(), "{}", s.name());
            assert!(SUITES.contains(&s.suite));
            expected_outcome(&s.config).unwrap_or_else(|e| panic!("{}: {e}", s.name()));
        }
        for name in SUITES {
            assert!(!suite(name).unwrap().is_empty(), "{name}");
        }
        assert!(suite("nope").is_err());
    }

    #[test]
    fn case_two_expects_plateau_one_and_a_half() {
        let s = find("cone-a2").unwrap();
        assert_eq!(expected_outcome(&s.config).unwrap(), Expected::Limit { plateau: 1.5 });
        let g = s.config.radial_grid().unwrap();
        let u0 = InitialData::Cone.sample_radial(&s.config.obstacles, &g).unwrap();
        let f = Expected::Limit { plateau: 1.5 }.radial_field(&s.config, &u0).unwrap();
        assert_eq!(f.values()[0], 1.5);
        assert_eq!(f.values()[g.nearest(1.0)], 1.0);
    }

    #[test]
    fn equality_case_expects_zero() {
        let s = find("cone-a05").unwrap();
        assert_eq!(expected_outcome(&s.config).unwrap(), Expected::Limit { plateau: 0.0 });
    }

    #[test]
    fn stationary_family_expects_itself() {
        for s in suite("stationary-family").unwrap() {
            assert_eq!(expected_outcome(&s.config).unwrap(), Expected::Stationary);
        }
    }

    fn broken(base: &str, from: &str, to: &str) -> String {
        let s = find(base).unwrap();
        let text = crate::config::render(&s.config);
        assert!(text.contains(from), "{from} not in\n{text}");
        let cfg = parse_config(&text.replace(from, to)).unwrap();
        expected_outcome(&cfg).unwrap_err().to_string()
    }

    #[test]
    fn gating_rejects_data_above_the_cone() {
        let e = broken("cone-a2", "kind = \"cone\"", "kind = \"scaled\"\nfactor = 1.5");
        assert!(e.contains("obstacle ordering"), "{e}");
    }

    #[test]
    fn gating_rejects_steep_data() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u0.txt");
        std::fs::write(&p, "# t=0 h=0.1\n0 0\n1.0 0\n1.01 0.5\n1.02 0\n").unwrap();
        let to = format!("kind = \"file\"\npath = \"{}\"", p.display());
        let e = broken("cone-a2", "kind = \"cone\"", &to);
        assert!(e.contains("Lipschitz budget"), "{e}");
    }

    #[test]
    fn gating_rejects_truncation_above_range() {
        let e = broken("psi-c-15", "cap = 1.5", "cap = 1.8");
        assert!(e.contains("stationary range"), "{e}");
    }

    #[test]
    fn gating_rejects_non_radial_limit() {
        let s = find("bumps-a2").unwrap();
        let mut cfg = s.config.clone();
        cfg.checks.limit = Some(0.02);
        assert!(expected_outcome(&cfg).unwrap_err().to_string().contains("radial symmetry"));
    }

    #[test]
    fn gating_rejects_positive_lower_obstacle() {
        let text = crate::config::render(&find("cone-a2").unwrap().config);
        let e = parse_config(&text.replace("lower_slope = 1.0", "lower_slope = -1.0")).unwrap_err();
        assert!(e.to_string().contains("obstacle.lower_slope"), "{e}");
    }

    #[test]
    fn gating_rejects_out_of_bound_candidates() {
        let s = find("candidate-ustar").unwrap();
        let mut cfg = s.config.clone();
        cfg.candidate = Some(Family::LowerBarrierUstar { l: 1.0, gamma: 0.8 });
        assert!(expected_outcome(&cfg).unwrap_err().to_string().contains("gamma = 0.8 outside (0, 0.75)"));
    }
}

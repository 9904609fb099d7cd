//! Acceptance suite: one PASS/FAIL line per criterion, run sequentially so the
//! wall-clock budgets are measured without competing work.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mcf_obstacle::candidates::{Candidate, Family};
use mcf_obstacle::catalog::{find, suite};
use mcf_obstacle::checker::{verify_candidate, SamplingSpec};
use mcf_obstacle::diagnostics::monotonicity_report;
use mcf_obstacle::field::Field;
use mcf_obstacle::grid::RadialGrid;
use mcf_obstacle::obstacle::{FlowParams, ObstacleSpec};
use mcf_obstacle::profile::InitialData;
use mcf_obstacle::radial::evolve_radial;
use mcf_obstacle::repro::run_repro;
use mcf_obstacle::run::{run_scenario, RunOptions, RunReport, Verdict};
use mcf_obstacle::scheme::SchemeParams;

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn line(id: &'static str, pass: bool, detail: impl Into<String>) -> Outcome {
    let o = Outcome { id, pass, detail: detail.into() };
    println!("acceptance {:<3} {} {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    o
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t0 = Instant::now();
    let v = f();
    (v, t0.elapsed())
}

fn scenario(name: &str) -> RunReport {
    run_scenario(&find(name).unwrap().config, &RunOptions::default()).unwrap()
}

fn check_line(id: &'static str, rep: &RunReport, check: &str, elapsed: Duration, budget: Option<f64>) -> Outcome {
    let c = rep.check(check).unwrap_or_else(|| panic!("{} has no check {check}", rep.scenario));
    let secs = elapsed.as_secs_f64();
    let budget_note = budget.map(|b| format!(" (budget {b} s)")).unwrap_or_default();
    line(
        id,
        c.verdict == Verdict::Pass && budget.is_none_or(|b| secs < b),
        format!(
            "{} {check}: value {:.4e} vs threshold {:.4e}; runtime {secs:.1} s{budget_note}",
            rep.scenario, c.value, c.threshold
        ),
    )
}

/// Random profile between the obstacles: knots at `k R / 8`, linear in between.
fn random_profile(rng: &mut ChaCha8Rng, obs: &ObstacleSpec) -> Vec<(f64, f64)> {
    let big_r = obs.big_r();
    (0..=8)
        .map(|k| {
            let r = k as f64 * big_r / 8.0;
            let (lo, hi) = (obs.lower(r), obs.upper(r));
            (r, if hi > lo { rng.gen_range(lo..=hi) } else { 0.0 })
        })
        .collect()
}

fn comparison() -> Outcome {
    let obs = ObstacleSpec::new(2.0, 1.0).unwrap();
    let flow = FlowParams::new(2.0, 2).unwrap();
    let g = RadialGrid::new(2.5, 250).unwrap();
    let scheme = SchemeParams { horizon: 5.0, snapshot_interval: 0.25, ..Default::default() }.without_steady_stop();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let a = InitialData::RadialSamples(random_profile(&mut rng, &obs)).sample_radial(&obs, &g).unwrap();
        let b = InitialData::RadialSamples(random_profile(&mut rng, &obs)).sample_radial(&obs, &g).unwrap();
        let lo: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x.min(*y)).collect();
        let hi: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x.max(*y)).collect();
        let tl = evolve_radial(&Field::new(g, lo).unwrap(), &obs, &flow, &scheme, None).unwrap();
        let th = evolve_radial(&Field::new(g, hi).unwrap(), &obs, &flow, &scheme, None).unwrap();
        for ((_, u), (_, v)) in tl.snapshots.iter().zip(&th.snapshots) {
            for (x, y) in u.values().iter().zip(v.values()) {
                worst = worst.max(x - y);
            }
        }
    }
    line("5", worst <= 1e-12, format!("20 ordered pairs, T=5: worst max(lower - upper) = {worst:.3e} (tolerance 1e-12)"))
}

fn invariants(reports: &[&RunReport]) -> Vec<Outcome> {
    let mut out = Vec::new();
    for rep in reports {
        for name in ["lipschitz", "time-lipschitz"] {
            let c = rep.check(name).unwrap();
            out.push(line(
                "6",
                c.verdict == Verdict::Pass,
                format!("{} {name}: {:.6} vs bound {:.6}", rep.scenario, c.value, c.threshold),
            ));
        }
    }
    out
}

fn monotone(rep: &RunReport) -> Vec<Outcome> {
    let mut out = Vec::new();
    for c in rep.checks.iter().filter(|c| c.name.starts_with("monotone@")) {
        let note = c.note.as_deref().map(|n| format!(" ({})", n.replace('_', " "))).unwrap_or_default();
        out.push(line(
            "7",
            c.verdict == Verdict::Pass,
            format!("{} {}: worst increment {:.3e} vs -1e-9{note}", rep.scenario, c.name, c.value),
        ));
    }
    // Half-height cone data detach from the upper obstacle, so the audit sees real increments.
    let cfg = find("cone-a2").unwrap().config;
    let g = cfg.radial_grid().unwrap();
    let u0 = InitialData::Scaled { factor: 0.5 }.sample_radial(&cfg.obstacles, &g).unwrap();
    let scheme = SchemeParams { horizon: 10.0, ..cfg.scheme };
    let traj = evolve_radial(&u0, &cfg.obstacles, &cfg.flow, &scheme, None).unwrap();
    for v in monotonicity_report(&traj, &[0.75, 1.0, 1.25], &cfg.flow, &cfg.obstacles, 1e-9) {
        out.push(line(
            "7b",
            v.passed && v.detached_pairs > 0,
            format!(
                "half-height cone r={}: {} detached snapshot pairs, worst increment {:.3e}",
                v.radius, v.detached_pairs, v.worst_increment
            ),
        ));
    }
    out
}

fn candidates() -> Vec<Outcome> {
    let mut out = Vec::new();
    let (reports, elapsed) = timed(|| {
        let reports = run_repro("candidates-all", None, 1).unwrap();
        let spec = SamplingSpec::default();
        let mut perturbed = Vec::new();
        for s in suite("candidates-all").unwrap() {
            let fam = s.config.candidate.unwrap();
            let ctx = s.config.context();
            for pb in Candidate::new(fam, ctx).rate_bounds() {
                let mut p: BTreeMap<String, f64> = fam.params().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
                p.insert(pb.param.to_string(), 1.1 * pb.upper);
                let c = Candidate::new(Family::from_params(fam.tag(), &p).unwrap(), ctx);
                let r = verify_candidate(&c, fam.tag().modes()[0], &spec).unwrap();
                perturbed.push((fam.tag(), pb, r));
            }
        }
        (reports, perturbed)
    });
    let (reports, perturbed) = reports;
    for r in &reports {
        let checks: Vec<String> =
            r.checks.iter().map(|c| format!("{} {} worst {:.3e}", c.name, c.verdict.as_str(), c.value)).collect();
        out.push(line("8", r.passed(), format!("{}: {}", r.scenario, checks.join(", "))));
    }
    for (tag, pb, r) in &perturbed {
        out.push(line(
            "8",
            !r.passed,
            format!(
                "{tag} {} = 1.1 x {:.6}: verdict {}; bound check: {}; sampled residual failures {}, kink failures {}",
                pb.param,
                pb.upper,
                if r.passed { "PASS" } else { "FAIL" },
                r.param_violations.join("; "),
                r.failure_count,
                r.kink_failures()
            ),
        ));
    }
    let secs = elapsed.as_secs_f64();
    out.push(line("8", secs < 30.0, format!("candidate verification runtime {secs:.1} s (budget 30 s)")));
    out
}

fn snapshot_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().to_string();
        if p.is_dir() {
            for (k, v) in snapshot_files(&p) {
                files.insert(format!("{name}/{k}"), v);
            }
        } else if name.starts_with("snap_") {
            files.insert(name, std::fs::read(&p).unwrap());
        }
    }
    files
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_mcf-obstacle");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut codes = Vec::new();
    for d in &dirs {
        let status = Command::new(bin)
            .args(["repro", "thm13-case2", "--quiet", "--out"])
            .arg(d.path())
            .status()
            .unwrap();
        codes.push(status.code());
    }
    let (a, b) = (snapshot_files(dirs[0].path()), snapshot_files(dirs[1].path()));
    line(
        "12",
        !a.is_empty() && a == b && codes == [Some(0), Some(0)],
        format!("two `repro thm13-case2` runs: {} snapshot files each, identical: {}, exit codes {codes:?}", a.len(), a == b),
    )
}

fn main() {
    let mut all = Vec::new();

    let (case2, t1) = timed(|| scenario("cone-a2"));
    all.push(check_line("1", &case2, "limit", t1, Some(60.0)));
    let (case1, t2) = timed(|| scenario("cone-a04"));
    all.push(check_line("2", &case1, "limit", t2, Some(90.0)));
    let (equality, t3) = timed(|| scenario("cone-a05"));
    all.push(check_line("3", &equality, "limit", t3, Some(300.0)));

    for s in suite("stationary-family").unwrap() {
        let rep = run_scenario(&s.config, &RunOptions::default()).unwrap();
        let c = rep.check("drift").unwrap();
        all.push(line(
            "4",
            c.verdict == Verdict::Pass,
            format!("{}: sup drift over 10 time units {:.3e} vs 4h = {:.3e}", rep.scenario, c.value, c.threshold),
        ));
    }

    all.push(comparison());
    all.extend(invariants(&[&case2, &case1, &equality]));
    all.extend(monotone(&case2));
    all.extend(candidates());

    let (blow, t9) = timed(|| scenario("appendix-dirichlet"));
    all.push(check_line("9", &blow, "blowup-monotone", t9, Some(300.0)));
    all.push(check_line("9", &blow, "blowup-final", t9, Some(300.0)));

    let (lyap, t10) = timed(|| scenario("cone-eps"));
    all.push(check_line("10", &lyap, "lyapunov", t10, None));
    let (cons, t11) = timed(|| scenario("cone-box"));
    all.push(check_line("11", &cons, "radial-match", t11, None));

    all.push(determinism());

    let failed: Vec<&str> = all.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!("acceptance summary: {} lines, {} failed {:?}", all.len(), failed.len(), failed);
    if !failed.is_empty() {
        std::process::exit(1);
    }
}

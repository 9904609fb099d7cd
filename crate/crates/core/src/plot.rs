//! Gnuplot command files for profiles and diagnostic series.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::catalog::{expected_outcome, Expected};
use crate::config::{ScenarioConfig, Solver};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Profiles `u(r)` at selected times over the obstacles and the expected limit.
    Profiles,
    /// Boundary quotient against t on a log scale, with the curve `2 e^(t/6)`.
    BoundaryQuotient,
    /// Regularised energy against t.
    Lyapunov,
}

/// Most profiles drawn in one figure.
pub const MAX_PROFILES: usize = 6;

fn rel(p: &Path, base: Option<&Path>) -> String {
    base.and_then(|b| p.strip_prefix(b).ok()).unwrap_or(p).display().to_string().replace('\'', "''")
}

fn pick(n: usize) -> Vec<usize> {
    if n <= MAX_PROFILES {
        return (0..n).collect();
    }
    let mut v: Vec<usize> = (0..MAX_PROFILES).map(|k| k * (n - 1) / (MAX_PROFILES - 1)).collect();
    v.dedup();
    v
}

/// Writes a script that renders `plot.png` next to the series file. Paths are
/// written relative to the series file's directory.
pub fn emit_plot_script(snapshots: &[PathBuf], series: &Path, kind: PlotKind, cfg: &ScenarioConfig) -> Result<String> {
    if snapshots.is_empty() {
        return Err(Error::Usage("no snapshot files to plot".into()));
    }
    for p in snapshots.iter().chain(std::iter::once(&series.to_path_buf())) {
        if !p.is_file() {
            return Err(Error::Usage(format!("missing file {}", p.display())));
        }
    }
    let base = series.parent();
    let mut s = String::new();
    let _ = writeln!(s, "# {}: run `gnuplot plot.gp` in this directory", cfg.name);
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output 'plot.png'");
    let _ = writeln!(s, "set key outside right");
    match kind {
        PlotKind::BoundaryQuotient => {
            let _ = writeln!(s, "set logscale y");
            let _ = writeln!(s, "set xlabel 't'");
            let _ = writeln!(s, "set ylabel 'boundary difference quotient'");
            let _ = writeln!(
                s,
                "plot '{}' using 1:3 with linespoints title 'quotient', 2*exp(x/6) with lines dashtype 2 title '2 exp(t/6)'",
                rel(series, base)
            );
        }
        PlotKind::Lyapunov => {
            let _ = writeln!(s, "set xlabel 't'");
            let _ = writeln!(s, "set ylabel 'regularised energy'");
            let _ = writeln!(s, "plot '{}' using 1:2 with linespoints title 'energy'", rel(series, base));
        }
        PlotKind::Profiles => {
            let obs = &cfg.obstacles;
            let _ = writeln!(s, "lambda = {}", obs.lambda());
            let _ = writeln!(s, "R = {}", obs.big_r());
            let _ = writeln!(s, "s = {}", obs.lower_slope());
            let _ = writeln!(s, "psi_plus(r) = r < R ? lambda*(R-r) : 0");
            let _ = writeln!(s, "psi_minus(r) = r < R ? -s*(R-r) : 0");
            let mut extra = String::new();
            if let Ok(Expected::Limit { plateau }) = expected_outcome(cfg) {
                let _ = writeln!(s, "B = {plateau}");
                let _ = writeln!(s, "psi_B(r) = psi_plus(r) < B ? psi_plus(r) : B");
                extra.push_str(", psi_B(x) with lines dashtype 3 lw 2 title 'expected limit'");
            }
            let _ = writeln!(s, "set xlabel 'r'");
            let _ = writeln!(s, "set ylabel 'u'");
            let _ = writeln!(s, "set xrange [0:{}]", 1.1 * obs.big_r());
            let using = match cfg.solver {
                Solver::Radial => "1:2".to_string(),
                Solver::Nd => {
                    let h = cfg.box_grid()?.h();
                    format!("(abs($2) <= {} && $1 >= 0 ? $1 : 1/0):3", 0.5001 * h)
                }
            };
            let mut items = Vec::new();
            for k in pick(snapshots.len()) {
                let p = &snapshots[k];
                let t = crate::io::read_snapshot(p)?.t;
                items.push(format!("'{}' using {using} with lines title 't = {t:.3}'", rel(p, base)));
            }
            let _ = writeln!(
                s,
                "plot {}, psi_plus(x) with lines lc rgb 'gray' title 'upper obstacle', psi_minus(x) with lines lc rgb 'gray' dashtype 2 title 'lower obstacle'{extra}",
                items.join(", ")
            );
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::find;

    #[test]
    fn empty_snapshot_list_is_an_error() {
        let cfg = find("cone-a2").unwrap().config;
        assert!(emit_plot_script(&[], Path::new("series.txt"), PlotKind::Profiles, &cfg).is_err());
    }

    #[test]
    fn missing_snapshot_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let series = dir.path().join("series.txt");
        std::fs::write(&series, "# t\n").unwrap();
        let cfg = find("cone-a2").unwrap().config;
        let e = emit_plot_script(&[dir.path().join("snap_00000.txt")], &series, PlotKind::Profiles, &cfg);
        assert!(e.unwrap_err().to_string().contains("snap_00000.txt"));
    }

    #[test]
    fn profile_script_overlays_limit_and_quotient_uses_log_scale() {
        let dir = tempfile::tempdir().unwrap();
        let series = dir.path().join("series.txt");
        std::fs::write(&series, "# t\n").unwrap();
        let snaps: Vec<PathBuf> = (0..10)
            .map(|k| {
                let p = dir.path().join(format!("snap_{k:05}.txt"));
                std::fs::write(&p, format!("# t={k} h=0.1\n0 1\n")).unwrap();
                p
            })
            .collect();
        let cfg = find("cone-a2").unwrap().config;
        let s = emit_plot_script(&snaps, &series, PlotKind::Profiles, &cfg).unwrap();
        assert!(s.contains("B = 1.5"));
        assert!(s.contains("'snap_00000.txt' using 1:2"));
        assert!(s.contains("'snap_00009.txt'"));
        assert_eq!(s.matches("snap_").count(), MAX_PROFILES);
        let cfg = find("appendix-dirichlet").unwrap().config;
        let s = emit_plot_script(&snaps, &series, PlotKind::BoundaryQuotient, &cfg).unwrap();
        assert!(s.contains("set logscale y"));
        assert!(s.contains("using 1:3"));
    }
}

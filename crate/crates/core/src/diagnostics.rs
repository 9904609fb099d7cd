//! Trajectories and the measurements taken along them.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{BoxGrid, Grid, RadialGrid};
use crate::obstacle::{FlowParams, ObstacleSpec};

/// Measurements at one snapshot. Optional entries are absent when the run does not define them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub lipschitz: f64,
    /// Sup-norm change since the previous snapshot (absent at t=0).
    pub sup_change: Option<f64>,
    pub sup_dist: Option<f64>,
    pub lyapunov: Option<f64>,
    pub boundary_quotient: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<G: Grid> {
    pub snapshots: Vec<(f64, Field<G>)>,
    pub series: Vec<DiagnosticRecord>,
    /// True if the run stopped on the steady-state criterion before the horizon.
    pub steady: bool,
}

impl<G: Grid> Trajectory<G> {
    pub fn final_time(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |s| s.0)
    }

    pub fn final_field(&self) -> &Field<G> {
        &self.snapshots.last().expect("trajectory has at least the initial snapshot").1
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.0).collect()
    }
}

pub fn sup_distance<G: Grid>(u: &Field<G>, v: &Field<G>) -> Result<f64> {
    u.same_grid(v)?;
    Ok(u.values().iter().zip(v.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Largest |u(x,t) - u(x,s)| / |t - s| over snapshot pairs.
///
/// Consecutive pairs suffice: a quotient over a longer span is a weighted mean of
/// the consecutive quotients inside it.
pub fn time_lipschitz<G: Grid>(traj: &Trajectory<G>) -> Result<f64> {
    if traj.snapshots.len() < 2 {
        return Err(Error::Usage("time Lipschitz constant needs at least two snapshots".into()));
    }
    let mut worst = 0.0f64;
    for w in traj.snapshots.windows(2) {
        let dt = w[1].0 - w[0].0;
        worst = worst.max(sup_distance(&w[0].1, &w[1].1)? / dt);
    }
    Ok(worst)
}

/// Sup of second differences of a radial profile, with the even reflection at r=0.
pub fn second_difference_sup(u: &Field<RadialGrid>) -> f64 {
    let v = u.values();
    let h2 = u.grid().h().powi(2);
    let mut worst = (2.0 * (v[1] - v[0])).abs() / h2;
    for w in v.windows(3) {
        worst = worst.max(((w[0] + w[2]) - 2.0 * w[1]).abs() / h2);
    }
    worst
}

/// Time-Lipschitz budget `2 sup|D^2 u0|_h + A L + 1`.
pub fn temporal_budget(u0: &Field<RadialGrid>, flow: &FlowParams, lipschitz: f64) -> f64 {
    2.0 * second_difference_sup(u0) + flow.a() * lipschitz + 1.0
}

/// Discrete `sum sqrt(eps^2 + |grad u|^2) h^N - A sum u h^N` with trapezoid weights.
/// Gradients are central inside the box and one-sided on its faces.
pub fn lyapunov(u: &Field<BoxGrid>, eps: f64, a: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("Lyapunov functional needs eps > 0, got {eps}")));
    }
    let g = u.grid();
    let (dim, m, h) = (g.dim(), g.m(), g.h());
    let v = u.values();
    let cell = h.powi(dim as i32);
    let mut idx = vec![0usize; dim];
    let mut total = 0.0;
    for f in 0..v.len() {
        g.multi(f, &mut idx);
        let mut w = cell;
        let mut grad2 = 0.0;
        for k in 0..dim {
            let s = g.stride(k);
            let d = if idx[k] == 0 {
                w *= 0.5;
                (v[f + s] - v[f]) / h
            } else if idx[k] == m - 1 {
                w *= 0.5;
                (v[f] - v[f - s]) / h
            } else {
                (v[f + s] - v[f - s]) / (2.0 * h)
            };
            grad2 += d * d;
        }
        total += w * ((eps * eps + grad2).sqrt() - a * v[f]);
    }
    Ok(total)
}

/// Max of `|u| / h` over free nodes that have a pinned axis-neighbour.
pub fn boundary_quotient(u: &Field<BoxGrid>, pinned: &[bool]) -> f64 {
    let g = u.grid();
    let v = u.values();
    let (dim, m, h) = (g.dim(), g.m(), g.h());
    let mut idx = vec![0usize; dim];
    let mut worst = 0.0f64;
    for f in 0..v.len() {
        if pinned[f] {
            continue;
        }
        g.multi(f, &mut idx);
        let touches = (0..dim).any(|k| {
            let s = g.stride(k);
            (idx[k] > 0 && pinned[f - s]) || (idx[k] + 1 < m && pinned[f + s])
        });
        if touches {
            worst = worst.max(v[f].abs() / h);
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityVerdict {
    pub radius: f64,
    /// Set when the radius does not exceed (N-1)/A and the audit was skipped.
    pub skipped: Option<String>,
    /// Snapshot pairs where the value was strictly between the obstacles at both ends.
    pub detached_pairs: usize,
    /// Most negative increment seen (0 if none).
    pub worst_increment: f64,
    pub passed: bool,
}

/// Audits that `t -> u(r, t)` never decreases while detached from both obstacles.
pub fn monotonicity_report(
    traj: &Trajectory<RadialGrid>,
    radii: &[f64],
    flow: &FlowParams,
    obstacles: &ObstacleSpec,
    tol: f64,
) -> Vec<MonotonicityVerdict> {
    radii
        .iter()
        .map(|&r| {
            if r <= flow.critical_radius() {
                return MonotonicityVerdict {
                    radius: r,
                    skipped: Some(format!("r={r} does not exceed (N-1)/A={}", flow.critical_radius())),
                    detached_pairs: 0,
                    worst_increment: 0.0,
                    passed: true,
                };
            }
            let grid = traj.snapshots[0].1.grid();
            let i = grid.nearest(r);
            let node = grid.node(i);
            let (lo, hi) = (obstacles.lower(node), obstacles.upper(node));
            let detached = |v: f64| v > lo + 1e-12 && v < hi - 1e-12;
            let mut pairs = 0;
            let mut worst = 0.0f64;
            for w in traj.snapshots.windows(2) {
                let (a, b) = (w[0].1.values()[i], w[1].1.values()[i]);
                if detached(a) && detached(b) {
                    pairs += 1;
                    worst = worst.min(b - a);
                }
            }
            MonotonicityVerdict {
                radius: r,
                skipped: None,
                detached_pairs: pairs,
                worst_increment: worst,
                passed: worst >= -tol,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_distance_examples() {
        let g = RadialGrid::with_spacing(2.5, 0.01).unwrap();
        let obs = ObstacleSpec::new(2.0, 1.0).unwrap();
        let cone = Field::new(g, g.nodes().iter().map(|&r| obs.upper(r)).collect()).unwrap();
        let cut = Field::new(g, g.nodes().iter().map(|&r| obs.upper(r).min(1.5)).collect()).unwrap();
        assert_eq!(sup_distance(&cone, &cone).unwrap(), 0.0);
        assert!((sup_distance(&cone, &cut).unwrap() - 0.5).abs() < 1e-15);
        assert!((sup_distance(&Field::zeros(g), &cut).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn lyapunov_of_zero_and_linear_fields() {
        let g = BoxGrid::new(2, 0.5, 41).unwrap();
        let zero = Field::zeros(g.clone());
        assert!((lyapunov(&zero, 0.1, 2.0).unwrap() - 0.1).abs() < 1e-12);
        let lin = Field::new(g.clone(), (0..g.len()).map(|f| g.point(f)[0] + 0.5).collect()).unwrap();
        let a = 2.0;
        let exact = (1e-16f64 + 1.0).sqrt() - a / 2.0;
        assert!((lyapunov(&lin, 1e-8, a).unwrap() - exact).abs() < 1e-10);
        assert!(lyapunov(&lin, 0.0, a).is_err());
    }

    #[test]
    fn time_lipschitz_of_ramp() {
        let g = RadialGrid::new(1.0, 16).unwrap();
        let snaps = (0..5)
            .map(|k| {
                let t = 0.5 * k as f64;
                (t, Field::new(g, vec![3.0 * t; 17]).unwrap())
            })
            .collect();
        let traj = Trajectory { snapshots: snaps, series: vec![], steady: false };
        assert!((time_lipschitz(&traj).unwrap() - 3.0).abs() < 1e-12);
        let single = Trajectory { snapshots: vec![(0.0, Field::zeros(g))], series: vec![], steady: false };
        assert!(time_lipschitz(&single).is_err());
    }

    #[test]
    fn boundary_quotient_of_ring() {
        let g = BoxGrid::new(2, 1.0, 21).unwrap();
        let radii = g.radii();
        let pinned: Vec<bool> = radii.iter().map(|&r| r >= 0.8).collect();
        let u = Field::new(g.clone(), radii.iter().map(|&r| if r < 0.8 { 0.3 } else { 0.0 }).collect()).unwrap();
        assert!((boundary_quotient(&u, &pinned) - 0.3 / g.h()).abs() < 1e-12);
    }

    #[test]
    fn skipped_radius_below_critical() {
        let g = RadialGrid::new(2.5, 50).unwrap();
        let traj = Trajectory { snapshots: vec![(0.0, Field::zeros(g))], series: vec![], steady: false };
        let flow = FlowParams::new(2.0, 2).unwrap();
        let obs = ObstacleSpec::new(2.0, 1.0).unwrap();
        let v = monotonicity_report(&traj, &[0.3, 1.0], &flow, &obs, 1e-9);
        assert!(v[0].skipped.is_some());
        assert!(v[1].skipped.is_none() && v[1].passed);
    }
}

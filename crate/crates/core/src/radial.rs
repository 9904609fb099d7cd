//! Radial reduction `u_t = (N-1) u_r / r + A |u_r|` with obstacle clamping.
//!
//! The spatial operator uses the Godunov flux of the full radial Hamiltonian
//! `H(p) = c p + A |p|` with `c = (N-1)/r`:
//!
//! * `c >= A`: H is non-decreasing, so `H(D+)`.
//! * `c < A`: H is convex with its minimum at 0, so `max((c+A) D+_+, (A-c) (-D-)_+)`.
//!
//! At the origin the transport term becomes `(N-1) u_rr(0)` with the even
//! reflection `u_{-1} = u_1`.

use crate::diagnostics::{sup_distance, DiagnosticRecord, Trajectory};
use crate::error::{Error, Result};
use crate::field::{lipschitz_constant, Field};
use crate::grid::RadialGrid;
use crate::obstacle::{psi_c, FlowParams, ObstacleSpec};
use crate::profile::InitialData;
use crate::scheme::{drive, SchemeParams, SteadyDetector};

#[derive(Debug, Clone, PartialEq)]
pub struct RadialState {
    pub t: f64,
    pub u: Field<RadialGrid>,
    pub lower: Field<RadialGrid>,
    pub upper: Field<RadialGrid>,
    pub flow: FlowParams,
}

impl RadialState {
    /// Starts at t=0; the initial field must already lie between the obstacles.
    pub fn new(u: Field<RadialGrid>, obstacles: &ObstacleSpec, flow: FlowParams) -> Result<Self> {
        let (lower, upper) = obstacles.sample_radial(u.grid())?;
        check_band(u.values(), lower.values(), upper.values())?;
        Ok(Self { t: 0.0, u, lower, upper, flow })
    }

    pub fn grid(&self) -> &RadialGrid {
        self.u.grid()
    }
}

fn check_band(u: &[f64], lo: &[f64], hi: &[f64]) -> Result<()> {
    for (i, ((&v, &l), &h)) in u.iter().zip(lo).zip(hi).enumerate() {
        if v < l - 1e-12 || v > h + 1e-12 {
            return Err(Error::Domain(format!(
                "initial value {v} at node {i} lies outside the obstacle band [{l}, {h}]"
            )));
        }
    }
    Ok(())
}

#[inline(always)]
fn rhs_at(v: &[f64], i: usize, h: f64, nm1: f64, a: f64) -> f64 {
    let n = v.len() - 1;
    if i == 0 {
        let d = (v[1] - v[0]) / h;
        return 2.0 * nm1 * d / h + a * d.max(0.0);
    }
    let dp = if i < n { (v[i + 1] - v[i]) / h } else { 0.0 };
    let dm = (v[i] - v[i - 1]) / h;
    let c = nm1 / (i as f64 * h);
    if c >= a {
        ((c + a) * dp).max((c - a) * dp)
    } else {
        ((c + a) * dp.max(0.0)).max((a - c) * (-dm).max(0.0))
    }
}

/// Monotone upwind value of `(N-1) u_r / r + A |u_r|` at node `i`.
pub fn radial_rhs(state: &RadialState, i: usize) -> Result<f64> {
    let g = state.grid();
    if i > g.cells() {
        return Err(Error::Usage(format!("node {i} outside 0..={}", g.cells())));
    }
    Ok(rhs_at(state.u.values(), i, g.h(), state.flow.nm1(), state.flow.a()))
}

/// Largest step for which the update is monotone at every node.
pub fn max_stable_dt(grid: &RadialGrid, flow: &FlowParams) -> f64 {
    let h = grid.h();
    h / (2.0 * flow.nm1() / h + flow.a())
}

/// `min(c h / max_i((N-1)/max(r_i, h) + A), max_stable_dt)`.
pub fn scheme_dt(grid: &RadialGrid, flow: &FlowParams, cfl: f64) -> f64 {
    let h = grid.h();
    (cfl * h / (flow.nm1() / h + flow.a())).min(max_stable_dt(grid, flow))
}

#[inline(always)]
fn fmax(x: f64, y: f64) -> f64 {
    if x > y {
        x
    } else {
        y
    }
}

#[inline(always)]
fn fmin(x: f64, y: f64) -> f64 {
    if x < y {
        x
    } else {
        y
    }
}

/// Values this small are set to zero: decaying profiles otherwise end up in
/// subnormal arithmetic, which is two orders of magnitude slower.
pub const FLUSH_BELOW: f64 = 1e-250;

#[inline(always)]
fn flush(x: f64) -> f64 {
    if x.abs() < FLUSH_BELOW {
        0.0
    } else {
        x
    }
}

/// Per-node coefficients `c_i + A`, `c_i - A`, split where `c_i` drops below `A`.
struct Kernel {
    cp: Vec<f64>,
    cm: Vec<f64>,
    split: usize,
    inv_h: f64,
    origin: f64,
    a: f64,
}

impl Kernel {
    fn new(n: usize, h: f64, nm1: f64, a: f64) -> Self {
        let c: Vec<f64> = (0..=n).map(|i| if i == 0 { 0.0 } else { nm1 / (i as f64 * h) }).collect();
        let split = (1..=n).find(|&i| c[i] < a).unwrap_or(n + 1);
        Self {
            cp: c.iter().map(|c| c + a).collect(),
            cm: c.iter().map(|c| c - a).collect(),
            split,
            inv_h: 1.0 / h,
            origin: 2.0 * nm1 / h,
            a,
        }
    }

    /// Euler step of `v` into `out`, clamped to `[lo, hi]`.
    fn step(&self, v: &[f64], out: &mut [f64], lo: &[f64], hi: &[f64], dt: f64) {
        let n = v.len() - 1;
        let ih = self.inv_h;
        let d0 = (v[1] - v[0]) * ih;
        out[0] = flush((v[0] + dt * (self.origin * d0 + self.a * d0.max(0.0))).max(lo[0]).min(hi[0]));
        let s = self.split.min(n);
        let rows = |from: usize, to: usize| {
            (
                &v[from - 1..=to],
                &self.cp[from..to],
                &self.cm[from..to],
                &lo[from..to],
                &hi[from..to],
            )
        };
        let (w, cp, cm, l, u) = rows(1, s);
        for (k, o) in out[1..s].iter_mut().enumerate() {
            let (c, x) = (w[k + 1], w[k + 2]);
            let dp = (x - c) * ih;
            let r = fmax(cp[k] * dp, cm[k] * dp);
            *o = flush(fmin(fmax(c + dt * r, l[k]), u[k]));
        }
        let (w, cp, cm, l, u) = rows(s, n);
        for (k, o) in out[s..n].iter_mut().enumerate() {
            let (b, c, x) = (w[k], w[k + 1], w[k + 2]);
            let dp = (x - c) * ih;
            let dm = (c - b) * ih;
            let r = fmax(fmax(cp[k] * dp, cm[k] * dm), 0.0);
            *o = flush(fmin(fmax(c + dt * r, l[k]), u[k]));
        }
        let dm = (v[n] - v[n - 1]) * ih;
        let r = if self.split <= n { (self.cm[n] * dm).max(0.0) } else { 0.0 };
        out[n] = flush((v[n] + dt * r).max(lo[n]).min(hi[n]));
    }
}

/// One explicit Euler step followed by the obstacle clamp.
pub fn step_radial(state: &RadialState, dt: f64) -> Result<RadialState> {
    let limit = max_stable_dt(state.grid(), &state.flow);
    if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
        return Err(Error::Config(format!("time step {dt} violates the stability limit {limit}")));
    }
    let g = state.grid();
    let kernel = Kernel::new(g.cells(), g.h(), state.flow.nm1(), state.flow.a());
    let mut next = state.clone();
    kernel.step(state.u.values(), next.u.values_mut(), state.lower.values(), state.upper.values(), dt);
    next.t += dt;
    Ok(next)
}

/// Evolves to the horizon or to steady state, recording a snapshot and diagnostics
/// every snapshot interval. `reference` feeds the sup-distance column.
pub fn evolve_radial(
    initial: &Field<RadialGrid>,
    obstacles: &ObstacleSpec,
    flow: &FlowParams,
    scheme: &SchemeParams,
    reference: Option<&Field<RadialGrid>>,
) -> Result<Trajectory<RadialGrid>> {
    scheme.validate()?;
    let state = RadialState::new(initial.clone(), obstacles, *flow)?;
    if let Some(r) = reference {
        initial.same_grid(r)?;
    }
    let grid = *initial.grid();
    let dt = scheme_dt(&grid, flow, scheme.cfl);
    let (lo, hi) = (state.lower.values().to_vec(), state.upper.values().to_vec());
    let v = state.u.into_values();
    let mut buf = vec![0.0; v.len()];
    let kernel = Kernel::new(grid.cells(), grid.h(), flow.nm1(), flow.a());

    let mut traj = Trajectory { snapshots: Vec::new(), series: Vec::new(), steady: false };
    let mut steady = SteadyDetector::new(scheme);
    let cell = std::cell::RefCell::new(v);

    drive(
        scheme,
        dt,
        |t, d| {
            let mut v = cell.borrow_mut();
            kernel.step(&v, &mut buf, &lo, &hi, d);
            std::mem::swap(&mut *v, &mut buf);
            if !v.iter().all(|x| x.is_finite()) {
                return Err(Error::Numerical { t: t + d, msg: "non-finite value in radial field".into() });
            }
            Ok(())
        },
        |t| {
            let field = Field::new(grid, cell.borrow().to_vec())
                .map_err(|e| Error::Numerical { t, msg: e.to_string() })?;
            let mut stop = false;
            let sup_change = match traj.snapshots.last() {
                Some((t0, prev)) => {
                    let c = sup_distance(prev, &field)?;
                    stop = steady.update(c, t - t0);
                    Some(c)
                }
                None => None,
            };
            traj.series.push(DiagnosticRecord {
                t,
                lipschitz: lipschitz_constant(&field)?,
                sup_change,
                sup_dist: reference.map(|r| sup_distance(&field, r)).transpose()?,
                lyapunov: None,
                boundary_quotient: None,
            });
            traj.snapshots.push((t, field));
            if stop {
                traj.steady = true;
            }
            Ok(stop)
        },
    )?;
    Ok(traj)
}

/// Max of `u0` over radii in `[(N-1)/A, R]`, sampled at `h/4` plus both endpoints.
pub fn compute_b(u0: impl Fn(f64) -> f64, flow: &FlowParams, big_r: f64, h: f64) -> Result<f64> {
    let r_lo = flow.critical_radius();
    if big_r <= r_lo {
        return Err(Error::Domain(format!(
            "R={big_r} does not exceed (N-1)/A={r_lo}; the limit is zero in this case"
        )));
    }
    if !(h > 0.0) {
        return Err(Error::Parameter(format!("sampling spacing must be positive, got {h}")));
    }
    let step = h / 4.0;
    let n = ((big_r - r_lo) / step).ceil() as usize;
    let mut best = u0(r_lo).max(u0(big_r));
    for k in 1..n {
        best = best.max(u0(r_lo + k as f64 * step));
    }
    Ok(best)
}

/// Large-time profile for radial data: zero if `R <= (N-1)/A`, otherwise `min(psi+, B)`.
pub fn predicted_limit(
    u0: &InitialData,
    obstacles: &ObstacleSpec,
    flow: &FlowParams,
    grid: &RadialGrid,
) -> Result<Field<RadialGrid>> {
    if !u0.is_radial() {
        return Err(Error::Domain("predicted limit needs radial initial data".into()));
    }
    let big_r = obstacles.big_r();
    if big_r <= flow.critical_radius() {
        return Ok(Field::zeros(*grid));
    }
    let b = compute_b(|r| u0.radial_value(obstacles, r).unwrap_or(0.0), flow, big_r, grid.h())?;
    limit_field(b, obstacles, grid)
}

/// `min(psi+, B)` on the grid.
pub fn limit_field(b: f64, obstacles: &ObstacleSpec, grid: &RadialGrid) -> Result<Field<RadialGrid>> {
    let v = grid
        .nodes()
        .iter()
        .map(|&r| psi_c(r, b.max(0.0), obstacles.lambda(), obstacles.big_r()))
        .collect::<Result<Vec<_>>>()?;
    Field::new(*grid, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn setup(a: f64, h: f64) -> (RadialGrid, ObstacleSpec, FlowParams) {
        (
            RadialGrid::with_spacing(2.5, h).unwrap(),
            ObstacleSpec::new(2.0, 1.0).unwrap(),
            FlowParams::new(a, 2).unwrap(),
        )
    }

    #[test]
    fn rhs_examples_on_cone() {
        let (g, obs, flow) = setup(2.0, 1.0 / 400.0);
        let u = InitialData::Cone.sample_radial(&obs, &g).unwrap();
        let s = RadialState::new(u, &obs, flow).unwrap();
        let at = |r: f64| radial_rhs(&s, g.index_of(r).unwrap()).unwrap();
        assert!((at(1.0) - 1.0).abs() < 1e-12);
        assert!((at(0.25) + 2.0).abs() < 1e-12);
        let z = RadialState::new(Field::zeros(g), &obs, flow).unwrap();
        assert!((0..=g.cells()).all(|i| radial_rhs(&z, i).unwrap() == 0.0));
        assert!(radial_rhs(&z, g.cells() + 1).is_err());
    }

    #[test]
    fn step_rejects_unstable_dt() {
        let (g, obs, flow) = setup(2.0, 0.01);
        let s = RadialState::new(Field::zeros(g), &obs, flow).unwrap();
        let lim = max_stable_dt(&g, &flow);
        assert!(matches!(step_radial(&s, 1.01 * lim), Err(Error::Config(_))));
        let z = step_radial(&s, lim).unwrap();
        assert_eq!(z.u, s.u);
    }

    #[test]
    fn truncated_cone_is_fixed_point() {
        let (g, obs, flow) = setup(2.0, 0.01);
        for c in [0.0, 0.5, 1.0, 1.5] {
            let u = InitialData::TruncatedCone { cap: c }.sample_radial(&obs, &g).unwrap();
            let mut s = RadialState::new(u.clone(), &obs, flow).unwrap();
            let dt = scheme_dt(&g, &flow, 0.5);
            for _ in 0..200 {
                s = step_radial(&s, dt).unwrap();
            }
            assert_eq!(s.u, u, "C={c}");
        }
    }

    #[test]
    fn compute_b_examples() {
        let flow = FlowParams::new(2.0, 2).unwrap();
        let obs = ObstacleSpec::new(2.0, 1.0).unwrap();
        let h = 0.01;
        assert!((compute_b(|r| obs.upper(r), &flow, 2.0, h).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(compute_b(|r| -obs.upper(r), &flow, 2.0, h).unwrap(), 0.0);
        assert!((compute_b(|r| obs.upper(r).min(0.7), &flow, 2.0, h).unwrap() - 0.7).abs() < 1e-15);
        let low = FlowParams::new(0.5, 2).unwrap();
        assert!(matches!(compute_b(|r| obs.upper(r), &low, 2.0, h), Err(Error::Domain(_))));
    }

    #[test]
    fn predicted_limits() {
        let (g, obs, _) = setup(2.0, 0.01);
        let eq = FlowParams::new(0.5, 2).unwrap();
        let z = predicted_limit(&InitialData::Cone, &obs, &eq, &g).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        let flow = FlowParams::new(2.0, 2).unwrap();
        let p = predicted_limit(&InitialData::Cone, &obs, &flow, &g).unwrap();
        assert_eq!(p.values()[0], 1.5);
        assert_eq!(p.values()[g.index_of(1.0).unwrap()], 1.0);
        let zero = predicted_limit(&InitialData::Zero, &obs, &flow, &g).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        let bumps = InitialData::Bumps(vec![]);
        assert!(predicted_limit(&bumps, &obs, &flow, &g).is_err());
    }

    #[test]
    fn initial_outside_band_is_rejected() {
        let (g, obs, flow) = setup(2.0, 0.01);
        let bad = Field::new(g, vec![3.0; g.len()]).unwrap();
        assert!(matches!(RadialState::new(bad, &obs, flow), Err(Error::Domain(_))));
    }
}

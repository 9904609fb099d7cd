//! Level-set solver on a Cartesian box:
//! `u_t = tr X - p.Xp / q + A sqrt(q)` with `q = |p|^2 + e^2`.
//!
//! `e = eps` when regularised. With `eps = 0` the unregularised operator is used
//! except where `|p| <= delta`, which falls back to `e = delta`.
//!
//! Nodes that never change (box faces, the pinned Dirichlet ring, nodes where both
//! obstacles coincide) are left out of the update. In the plane the field can
//! additionally be folded onto one octant when it has the symmetries of the square.

use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;

use crate::diagnostics::{boundary_quotient, lyapunov, sup_distance, DiagnosticRecord, Trajectory};
use crate::error::{Error, Result};
use crate::field::{lipschitz_constant, Field};
use crate::grid::{BoxGrid, Grid};
use crate::obstacle::{FlowParams, ObstacleSpec};
use crate::scheme::{drive, SchemeParams, SteadyDetector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NdMode {
    /// Clamp to the obstacle pair after every step.
    Obstacle,
    /// Pin every node with `|x| >= R` to zero; no clamp.
    DirichletZero,
}

/// Storage layout. `Dihedral` keeps one octant of a planar grid and is exact for
/// data invariant under the symmetries of the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Full,
    Dihedral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdSettings {
    pub obstacles: ObstacleSpec,
    pub flow: FlowParams,
    pub mode: NdMode,
    pub eps: f64,
    pub delta: f64,
    pub symmetry: Symmetry,
}

impl NdSettings {
    /// `eps = 0`, `delta = 1e-8 lambda`, full storage.
    pub fn new(obstacles: ObstacleSpec, flow: FlowParams, mode: NdMode) -> Self {
        Self { obstacles, flow, mode, eps: 0.0, delta: 1e-8 * obstacles.lambda(), symmetry: Symmetry::Full }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Self {
        self.symmetry = symmetry;
        self
    }

    fn validate(&self, grid: &BoxGrid) -> Result<()> {
        let mut v = Vec::new();
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            v.push(format!("eps must be finite and non-negative, got {}", self.eps));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            v.push(format!("delta must be positive, got {}", self.delta));
        }
        if self.flow.n() != grid.dim() {
            v.push(format!("flow dimension {} differs from grid dimension {}", self.flow.n(), grid.dim()));
        }
        if self.symmetry == Symmetry::Dihedral && grid.dim() != 2 {
            v.push("dihedral storage needs a planar grid".into());
        }
        let reach = self.obstacles.big_r() + 0.5 * self.eps.max(0.0);
        if grid.half_width() < reach {
            v.push(format!("box half width {} must be at least {reach}", grid.half_width()));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Violations(v))
        }
    }
}

/// `min(h^2 / (2N(1+A)), h / (A sqrt N))`, the step allowed at cfl = 1.
pub fn nd_step_limit(grid: &BoxGrid, flow: &FlowParams) -> f64 {
    let h = grid.h();
    let n = grid.dim() as f64;
    let parabolic = h * h / (2.0 * n * (1.0 + flow.a()));
    if flow.a() > 0.0 {
        parabolic.min(h / (flow.a() * n.sqrt()))
    } else {
        parabolic
    }
}

#[derive(Debug, Clone, Copy)]
struct Kern {
    inv2h: f64,
    invh2: f64,
    inv4h2: f64,
    a: f64,
    eps2: f64,
    delta2: f64,
    regularised: bool,
}

impl Kern {
    fn new(h: f64, a: f64, eps: f64, delta: f64) -> Self {
        Self {
            inv2h: 0.5 / h,
            invh2: 1.0 / (h * h),
            inv4h2: 0.25 / (h * h),
            a,
            eps2: eps * eps,
            delta2: delta * delta,
            regularised: eps > 0.0,
        }
    }

    #[inline(always)]
    fn e2(&self, p2: f64) -> f64 {
        if self.regularised {
            self.eps2
        } else if p2 <= self.delta2 {
            self.delta2
        } else {
            0.0
        }
    }
}

/// Planar operator from the 3x3 stencil. Every sum is written so that the
/// result is bitwise invariant under the symmetries of the square.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn op2(c: f64, e: f64, w: f64, n: f64, s: f64, ne: f64, sw: f64, nw: f64, se: f64, k: &Kern) -> f64 {
    let px = (e - w) * k.inv2h;
    let py = (n - s) * k.inv2h;
    let uxx = ((e + w) - 2.0 * c) * k.invh2;
    let uyy = ((n + s) - 2.0 * c) * k.invh2;
    let uxy = ((ne + sw) - (se + nw)) * k.inv4h2;
    let (px2, py2) = (px * px, py * py);
    let e2 = k.e2(px2 + py2);
    let q = (px2 + py2) + e2;
    let num = (uxx * (py2 + e2) + uyy * (px2 + e2)) - 2.0 * (px * py) * uxy;
    num / q + k.a * q.sqrt()
}

/// Operator in any dimension; `get` reads the value at a full flat index.
#[inline]
fn op_generic(get: impl Fn(usize) -> f64, f: usize, strides: &[usize], k: &Kern) -> f64 {
    let dim = strides.len();
    let c = get(f);
    let mut p = [0.0f64; 8];
    let mut x = [[0.0f64; 8]; 8];
    for a in 0..dim {
        let sa = strides[a];
        let (fp, fm) = (get(f + sa), get(f - sa));
        p[a] = (fp - fm) * k.inv2h;
        x[a][a] = ((fp + fm) - 2.0 * c) * k.invh2;
        for b in 0..a {
            let sb = strides[b];
            let v = ((get(f + sa + sb) + get(f - sa - sb)) - (get(f + sa - sb) + get(f - sa + sb))) * k.inv4h2;
            x[a][b] = v;
            x[b][a] = v;
        }
    }
    let p2: f64 = p[..dim].iter().map(|v| v * v).sum();
    let q = p2 + k.e2(p2);
    let mut trace = 0.0;
    let mut quad = 0.0;
    for a in 0..dim {
        trace += x[a][a];
        for b in 0..dim {
            quad += p[a] * x[a][b] * p[b];
        }
    }
    trace - quad / q + k.a * q.sqrt()
}

/// Operator value at an interior node of a full field.
pub fn levelset_operator(u: &Field<BoxGrid>, node: usize, flow: &FlowParams, eps: f64, delta: f64) -> Result<f64> {
    let g = u.grid();
    if node >= g.len() {
        return Err(Error::Usage(format!("node {node} outside the grid")));
    }
    if g.is_edge(node) {
        return Err(Error::Usage(format!("node {node} lies on the box boundary")));
    }
    if !(eps >= 0.0) || !(delta > 0.0) {
        return Err(Error::Parameter(format!("need eps >= 0 and delta > 0, got {eps}, {delta}")));
    }
    let k = Kern::new(g.h(), flow.a(), eps, delta);
    let v = u.values();
    if g.dim() == 2 {
        let (sx, sy) = (g.stride(0), g.stride(1));
        let f = node;
        return Ok(op2(
            v[f],
            v[f + sx],
            v[f - sx],
            v[f + sy],
            v[f - sy],
            v[f + sx + sy],
            v[f - sx - sy],
            v[f - sx + sy],
            v[f + sx - sy],
            &k,
        ));
    }
    let strides: Vec<usize> = (0..g.dim()).map(|a| g.stride(a)).collect();
    Ok(op_generic(|i| v[i], node, &strides, &k))
}

/// Update schedule on the full array: per grid row (last axis), the half-open
/// ranges of updated nodes. With dihedral folding only one octant is updated and
/// the mirror cells it reads are refreshed after every step.
#[derive(Debug, Clone, PartialEq)]
struct Plan {
    runs: Vec<Vec<(usize, usize)>>,
    ghosts: Vec<(usize, usize)>,
    canon: Option<Vec<u32>>,
    fixed: Vec<bool>,
    n_active: usize,
}

fn fold(i: usize, j: usize, m: usize) -> (usize, usize) {
    let i = i.max(m - 1 - i);
    let j = j.max(m - 1 - j);
    if j <= i {
        (i, j)
    } else {
        (j, i)
    }
}

impl Plan {
    fn build(grid: &BoxGrid, symmetry: Symmetry, fixed: Vec<bool>) -> Self {
        let n = grid.len();
        let m = grid.m();
        let canon: Option<Vec<u32>> = match symmetry {
            Symmetry::Full => None,
            Symmetry::Dihedral => Some(
                (0..n)
                    .map(|f| {
                        let (i, j) = fold(f / m, f % m, m);
                        (i * m + j) as u32
                    })
                    .collect(),
            ),
        };
        let updated = |f: usize| !fixed[f] && canon.as_ref().is_none_or(|c| c[f] as usize == f);
        let mut runs = vec![Vec::new(); n / m];
        let mut n_active = 0;
        for (row, out) in runs.iter_mut().enumerate() {
            let base = row * m;
            let mut j = 0;
            while j < m {
                if updated(base + j) {
                    let a = j;
                    while j < m && updated(base + j) {
                        j += 1;
                    }
                    out.push((a, j));
                    n_active += j - a;
                } else {
                    j += 1;
                }
            }
        }
        let mut ghosts = Vec::new();
        if let Some(c) = &canon {
            let (sx, sy) = (grid.stride(0), grid.stride(1));
            let mut seen = vec![false; n];
            for (row, rr) in runs.iter().enumerate() {
                for &(a, b) in rr {
                    for j in a..b {
                        let f = row * m + j;
                        for g in [f + sx, f - sx, f + sy, f - sy, f + sx + sy, f - sx - sy, f - sx + sy, f + sx - sy] {
                            let src = c[g] as usize;
                            if src != g && !seen[g] {
                                seen[g] = true;
                                ghosts.push((g, src));
                            }
                        }
                    }
                }
            }
            ghosts.sort_unstable();
        }
        Self { runs, ghosts, canon, fixed, n_active }
    }

    fn expand(&self, u: &[f64]) -> Vec<f64> {
        match &self.canon {
            None => u.to_vec(),
            Some(c) => c.iter().map(|&k| u[k as usize]).collect(),
        }
    }
}

/// One row of the planar update. `dn`, `mid`, `up` are rows x-1, x, x+1.
#[allow(clippy::too_many_arguments)]
fn row2(
    out: &mut [f64],
    dn: &[f64],
    mid: &[f64],
    up: &[f64],
    bounds: Option<(&[f64], &[f64])>,
    (a, b): (usize, usize),
    dt: f64,
    k: &Kern,
) -> bool {
    let len = b - a;
    let out = &mut out[a..b];
    let (c, e, w) = (&mid[a..b], &up[a..b], &dn[a..b]);
    let (n, s) = (&mid[a + 1..b + 1], &mid[a - 1..b - 1]);
    let (ne, sw) = (&up[a + 1..b + 1], &dn[a - 1..b - 1]);
    let (nw, se) = (&dn[a + 1..b + 1], &up[a - 1..b - 1]);
    let mut bad = false;
    for t in 0..len {
        let v = c[t] + dt * op2(c[t], e[t], w[t], n[t], s[t], ne[t], sw[t], nw[t], se[t], k);
        bad |= !v.is_finite();
        out[t] = v;
    }
    if let Some((lo, hi)) = bounds {
        for ((o, l), h) in out.iter_mut().zip(&lo[a..b]).zip(&hi[a..b]) {
            *o = o.max(*l).min(*h);
        }
    }
    bad
}

#[derive(Debug, Clone, PartialEq)]
pub struct NdState {
    t: f64,
    grid: BoxGrid,
    settings: NdSettings,
    plan: Plan,
    u: Vec<f64>,
    buf: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl NdState {
    /// Starts at t=0. In obstacle mode the initial field must lie in the band;
    /// in Dirichlet mode the ring `|x| >= R` is set to zero.
    pub fn new(initial: &Field<BoxGrid>, settings: NdSettings) -> Result<Self> {
        let grid = initial.grid().clone();
        settings.validate(&grid)?;
        let (lo, hi) = settings.obstacles.sample_box(&grid, settings.eps)?;
        let radii = grid.radii();
        let big_r = settings.obstacles.big_r();
        let mut u0 = initial.values().to_vec();
        let fixed: Vec<bool> = match settings.mode {
            NdMode::Obstacle => {
                for (f, &v) in u0.iter().enumerate() {
                    let (l, h) = (lo.values()[f], hi.values()[f]);
                    if v < l - 1e-12 || v > h + 1e-12 {
                        return Err(Error::Domain(format!(
                            "initial value {v} at node {f} lies outside the obstacle band [{l}, {h}]"
                        )));
                    }
                }
                (0..grid.len()).map(|f| grid.is_edge(f) || lo.values()[f] == hi.values()[f]).collect()
            }
            NdMode::DirichletZero => (0..grid.len()).map(|f| grid.is_edge(f) || radii[f] >= big_r).collect(),
        };
        if settings.mode == NdMode::DirichletZero {
            for (v, &pin) in u0.iter_mut().zip(&fixed) {
                if pin {
                    *v = 0.0;
                }
            }
        }
        let plan = Plan::build(&grid, settings.symmetry, fixed);
        if plan.expand(&u0) != u0 {
            return Err(Error::Config("dihedral storage needs initial data with the symmetries of the square".into()));
        }
        Ok(Self {
            t: 0.0,
            grid,
            settings,
            plan,
            buf: u0.clone(),
            u: u0,
            lower: lo.into_values(),
            upper: hi.into_values(),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn settings(&self) -> &NdSettings {
        &self.settings
    }

    /// Number of nodes updated per step.
    pub fn active_nodes(&self) -> usize {
        self.plan.n_active
    }

    pub fn field(&self) -> Field<BoxGrid> {
        Field::new(self.grid.clone(), self.plan.expand(&self.u)).expect("stored values are finite")
    }

    /// Nodes that are never updated.
    pub fn pinned_mask(&self) -> Vec<bool> {
        self.plan.fixed.clone()
    }

    fn advance(&mut self, dt: f64) -> Result<()> {
        let m = self.grid.m();
        let k = Kern::new(self.grid.h(), self.settings.flow.a(), self.settings.eps, self.settings.delta);
        let clamp = self.settings.mode == NdMode::Obstacle;
        let bad = AtomicBool::new(false);
        let (u, lo, hi, runs) = (&self.u, &self.lower, &self.upper, &self.plan.runs);
        if self.grid.dim() == 2 {
            self.buf.par_chunks_mut(m).enumerate().with_min_len(16).for_each(|(row, out)| {
                if runs[row].is_empty() {
                    return;
                }
                let base = row * m;
                let dn = &u[base - m..base];
                let mid = &u[base..base + m];
                let up = &u[base + m..base + 2 * m];
                let bounds = clamp.then(|| (&lo[base..base + m], &hi[base..base + m]));
                for &run in &runs[row] {
                    if row2(out, dn, mid, up, bounds, run, dt, &k) {
                        bad.store(true, Ordering::Relaxed);
                    }
                }
            });
        } else {
            let strides: Vec<usize> = (0..self.grid.dim()).map(|a| self.grid.stride(a)).collect();
            self.buf.par_chunks_mut(m).enumerate().with_min_len(16).for_each(|(row, out)| {
                let base = row * m;
                for &(a, b) in &runs[row] {
                    for j in a..b {
                        let f = base + j;
                        let mut v = u[f] + dt * op_generic(|g| u[g], f, &strides, &k);
                        if !v.is_finite() {
                            bad.store(true, Ordering::Relaxed);
                        }
                        if clamp {
                            v = v.max(lo[f]).min(hi[f]);
                        }
                        out[j] = v;
                    }
                }
            });
        }
        if bad.load(Ordering::Relaxed) {
            return Err(Error::Numerical { t: self.t + dt, msg: "non-finite value in box field".into() });
        }
        for &(g, src) in &self.plan.ghosts {
            self.buf[g] = self.buf[src];
        }
        std::mem::swap(&mut self.u, &mut self.buf);
        self.t += dt;
        Ok(())
    }
}

/// One explicit Euler step followed by the mode enforcement.
pub fn step_nd(state: &NdState, dt: f64) -> Result<NdState> {
    let limit = nd_step_limit(&state.grid, &state.settings.flow);
    if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
        return Err(Error::Config(format!("time step {dt} violates the stability limit {limit}")));
    }
    let mut next = state.clone();
    next.advance(dt)?;
    Ok(next)
}

/// Evolves to the horizon (or steady state), recording snapshots with the
/// Lyapunov value when `eps > 0` and the boundary quotient in Dirichlet mode.
pub fn evolve_nd(
    initial: &Field<BoxGrid>,
    settings: &NdSettings,
    scheme: &SchemeParams,
    reference: Option<&Field<BoxGrid>>,
) -> Result<Trajectory<BoxGrid>> {
    scheme.validate()?;
    if let Some(r) = reference {
        initial.same_grid(r)?;
    }
    let state = std::cell::RefCell::new(NdState::new(initial, *settings)?);
    let dt = scheme.cfl * nd_step_limit(initial.grid(), &settings.flow);
    let pinned = state.borrow().pinned_mask();
    let mut traj = Trajectory { snapshots: Vec::new(), series: Vec::new(), steady: false };
    let mut steady = SteadyDetector::new(scheme);
    drive(
        scheme,
        dt,
        |_, d| state.borrow_mut().advance(d),
        |t| {
            let field = state.borrow().field();
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
                lyapunov: if settings.eps > 0.0 {
                    Some(lyapunov(&field, settings.eps, settings.flow.a())?)
                } else {
                    None
                },
                boundary_quotient: match settings.mode {
                    NdMode::DirichletZero => Some(boundary_quotient(&field, &pinned)),
                    NdMode::Obstacle => None,
                },
            });
            traj.snapshots.push((t, field));
            traj.steady = stop;
            Ok(stop)
        },
    )?;
    Ok(traj)
}

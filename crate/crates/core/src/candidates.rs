//! Explicit radial barrier functions with parameter validation and kink metadata.
//!
//! Every candidate is piecewise affine in `r` at each fixed time, with coefficients
//! that are explicit exponentials in `t`. Pieces carry their time derivatives so the
//! checker can evaluate residuals and kink velocities in closed form.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::obstacle::{FlowParams, ObstacleSpec};

/// `phi = a + b r` and `phi_t = da + db r` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub a: f64,
    pub b: f64,
    pub da: f64,
    pub db: f64,
}

impl Piece {
    pub fn new(lo: f64, hi: f64, a: f64, b: f64, da: f64, db: f64) -> Self {
        Self { lo, hi, a, b, da, db }
    }

    pub fn constant(lo: f64, hi: f64, c: f64) -> Self {
        Self::new(lo, hi, c, 0.0, 0.0, 0.0)
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        self.a + self.b * r
    }

    #[inline]
    pub fn rate(&self, r: f64) -> f64 {
        self.da + self.db * r
    }

    fn same_formula(&self, o: &Piece) -> bool {
        self.a == o.a && self.b == o.b && self.da == o.da && self.db == o.db
    }
}

/// Continuous piecewise-affine radial profile on `[0, r_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseAffine {
    pieces: Vec<Piece>,
}

impl PiecewiseAffine {
    pub fn new(mut pieces: Vec<Piece>) -> Self {
        pieces.retain(|p| p.hi > p.lo);
        let mut out: Vec<Piece> = Vec::with_capacity(pieces.len());
        for p in pieces {
            match out.last_mut() {
                Some(last) if last.same_formula(&p) => last.hi = p.hi,
                _ => out.push(p),
            }
        }
        Self { pieces: out }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn lo(&self) -> f64 {
        self.pieces[0].lo
    }

    pub fn hi(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].hi
    }

    pub fn locate(&self, r: f64) -> &Piece {
        let k = self.pieces.partition_point(|p| p.hi < r);
        &self.pieces[k.min(self.pieces.len() - 1)]
    }

    pub fn value(&self, r: f64) -> f64 {
        self.locate(r).value(r)
    }

    pub fn restrict(&self, lo: f64, hi: f64) -> Self {
        let pieces = self
            .pieces
            .iter()
            .filter(|p| p.hi > lo && p.lo < hi)
            .map(|p| Piece { lo: p.lo.max(lo), hi: p.hi.min(hi), ..*p })
            .collect();
        Self::new(pieces)
    }

    pub fn concat(&self, other: &Self) -> Self {
        Self::new(self.pieces.iter().chain(&other.pieces).copied().collect())
    }

    pub fn max_with(&self, other: &Self) -> Self {
        self.envelope(other, true)
    }

    pub fn min_with(&self, other: &Self) -> Self {
        self.envelope(other, false)
    }

    /// Pointwise max or min. Where both coincide the receiver's formula wins.
    fn envelope(&self, other: &Self, take_max: bool) -> Self {
        let mut xs: Vec<f64> = self
            .pieces
            .iter()
            .chain(&other.pieces)
            .flat_map(|p| [p.lo, p.hi])
            .collect();
        xs.sort_by(|a, b| a.total_cmp(b));
        xs.dedup();
        let pick = |p: Piece, q: Piece, x: f64| {
            let d = p.value(x) - q.value(x);
            if (take_max && d >= 0.0) || (!take_max && d <= 0.0) {
                p
            } else {
                q
            }
        };
        let mut out = Vec::new();
        for w in xs.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            let mid = 0.5 * (x0 + x1);
            let p = *self.locate(mid);
            let q = *other.locate(mid);
            let d0 = p.value(x0) - q.value(x0);
            let d1 = p.value(x1) - q.value(x1);
            if d0 * d1 < 0.0 && p.b != q.b {
                let xc = ((q.a - p.a) / (p.b - q.b)).clamp(x0, x1);
                for (lo, hi) in [(x0, xc), (xc, x1)] {
                    let chosen = pick(p, q, 0.5 * (lo + hi));
                    out.push(Piece { lo, hi, ..chosen });
                }
            } else {
                out.push(Piece { lo: x0, hi: x1, ..pick(p, q, mid) });
            }
        }
        Self::new(out)
    }

    /// Interior breakpoints as `(radius, left piece, right piece)`.
    pub fn breakpoints(&self) -> Vec<(f64, Piece, Piece)> {
        self.pieces.windows(2).map(|w| (w[0].hi, w[0], w[1])).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Sub,
    Super,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Sub => "SUB",
            Mode::Super => "SUPER",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sub" => Ok(Mode::Sub),
            "super" => Ok(Mode::Super),
            _ => Err(Error::Parameter(format!("unknown check mode '{s}' (expected sub or super)"))),
        }
    }
}

/// A radius where the one-sided slopes differ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinkDescriptor {
    pub radius: f64,
    /// Slope from the left.
    pub a: f64,
    /// Slope from the right.
    pub b: f64,
    /// dr0/dt.
    pub velocity: f64,
    /// d/dt of the candidate value along the kink.
    pub value_rate: f64,
}

impl KinkDescriptor {
    /// `a > b` is a local max shape (subsolution test); `a < b` a local min (supersolution test).
    pub fn test_mode(&self) -> Mode {
        if self.a > self.b {
            Mode::Sub
        } else {
            Mode::Super
        }
    }

    pub fn is_moving(&self) -> bool {
        self.velocity.abs() > 1e-12 * (1.0 + self.radius)
    }

    fn from_pieces(r0: f64, p: &Piece, q: &Piece) -> Self {
        let db = p.b - q.b;
        let velocity = -((p.da - q.da) + (p.db - q.db) * r0) / db;
        let value_rate = p.rate(r0) + p.b * velocity;
        Self { radius: r0, a: p.b, b: q.b, velocity, value_rate }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    StationaryPsiC,
    LowerBarrierUstar,
    UpperBarrierUstarEps,
    UpperBarrierUstarNu1,
    UpperBarrierUbarEps,
    LowerBarrierPhiUnder,
    LimitPsiUnder,
    AppendixPsiUnder,
}

impl Tag {
    pub const ALL: [Tag; 8] = [
        Tag::StationaryPsiC,
        Tag::LowerBarrierUstar,
        Tag::UpperBarrierUstarEps,
        Tag::UpperBarrierUstarNu1,
        Tag::UpperBarrierUbarEps,
        Tag::LowerBarrierPhiUnder,
        Tag::LimitPsiUnder,
        Tag::AppendixPsiUnder,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Tag::StationaryPsiC => "STATIONARY_PSI_C",
            Tag::LowerBarrierUstar => "LOWER_BARRIER_USTAR",
            Tag::UpperBarrierUstarEps => "UPPER_BARRIER_USTAR_EPS",
            Tag::UpperBarrierUstarNu1 => "UPPER_BARRIER_USTAR_NU1",
            Tag::UpperBarrierUbarEps => "UPPER_BARRIER_UBAR_EPS",
            Tag::LowerBarrierPhiUnder => "LOWER_BARRIER_PHI_UNDER",
            Tag::LimitPsiUnder => "LIMIT_PSI_UNDER",
            Tag::AppendixPsiUnder => "APPENDIX_PSI_UNDER",
        }
    }

    /// Parameter keys in config order.
    pub fn param_keys(&self) -> &'static [&'static str] {
        match self {
            Tag::StationaryPsiC => &["c"],
            Tag::LowerBarrierUstar => &["l", "gamma"],
            Tag::UpperBarrierUstarEps => &["mu", "eps"],
            Tag::UpperBarrierUstarNu1 => &["nu1"],
            Tag::UpperBarrierUbarEps => &["l", "nu2", "eps", "b"],
            Tag::LowerBarrierPhiUnder => &["l", "nu3", "nu4", "r0", "b"],
            Tag::LimitPsiUnder => &["b", "r0", "l"],
            Tag::AppendixPsiUnder => &[],
        }
    }

    /// Modes in which the function is claimed to be a sub- or supersolution.
    pub fn modes(&self) -> &'static [Mode] {
        match self {
            Tag::StationaryPsiC => &[Mode::Sub, Mode::Super],
            Tag::LowerBarrierUstar
            | Tag::LowerBarrierPhiUnder
            | Tag::LimitPsiUnder
            | Tag::AppendixPsiUnder => &[Mode::Sub],
            Tag::UpperBarrierUstarEps | Tag::UpperBarrierUstarNu1 | Tag::UpperBarrierUbarEps => {
                &[Mode::Super]
            }
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Tag::ALL
            .iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| Error::Parameter(format!("unknown candidate tag '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `min(psi+, C)`.
    StationaryPsiC { c: f64 },
    /// `-L e^{-gamma t} (R - r)_+`, taken as max with psi-.
    LowerBarrierUstar { l: f64, gamma: f64 },
    /// Cone of slope `lambda e^{-mu t}` inside `r <= (N-1)/A - eps`, psi+ outside.
    UpperBarrierUstarEps { mu: f64, eps: f64 },
    /// `lambda e^{-nu1 t} (R - r)_+`.
    UpperBarrierUstarNu1 { nu1: f64 },
    /// Decaying cone over the plateau `min(B + eps, psi+)`.
    UpperBarrierUbarEps { l: f64, nu2: f64, eps: f64, b: f64 },
    /// Lower barrier rising to the plateau B on `r <= r0`, taken as max with psi-.
    LowerBarrierPhiUnder { l: f64, nu3: f64, nu4: f64, r0: f64, b: f64 },
    /// Plateau B on `r <= r0`, slope -L down to zero.
    LimitPsiUnder { b: f64, r0: f64, l: f64 },
    /// Plateau 1 with a steepening edge on the disc of radius 2 (N=2, A=1).
    AppendixPsiUnder,
}

impl Family {
    pub fn tag(&self) -> Tag {
        match self {
            Family::StationaryPsiC { .. } => Tag::StationaryPsiC,
            Family::LowerBarrierUstar { .. } => Tag::LowerBarrierUstar,
            Family::UpperBarrierUstarEps { .. } => Tag::UpperBarrierUstarEps,
            Family::UpperBarrierUstarNu1 { .. } => Tag::UpperBarrierUstarNu1,
            Family::UpperBarrierUbarEps { .. } => Tag::UpperBarrierUbarEps,
            Family::LowerBarrierPhiUnder { .. } => Tag::LowerBarrierPhiUnder,
            Family::LimitPsiUnder { .. } => Tag::LimitPsiUnder,
            Family::AppendixPsiUnder => Tag::AppendixPsiUnder,
        }
    }

    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Family::StationaryPsiC { c } => vec![("c", c)],
            Family::LowerBarrierUstar { l, gamma } => vec![("l", l), ("gamma", gamma)],
            Family::UpperBarrierUstarEps { mu, eps } => vec![("mu", mu), ("eps", eps)],
            Family::UpperBarrierUstarNu1 { nu1 } => vec![("nu1", nu1)],
            Family::UpperBarrierUbarEps { l, nu2, eps, b } => {
                vec![("l", l), ("nu2", nu2), ("eps", eps), ("b", b)]
            }
            Family::LowerBarrierPhiUnder { l, nu3, nu4, r0, b } => {
                vec![("l", l), ("nu3", nu3), ("nu4", nu4), ("r0", r0), ("b", b)]
            }
            Family::LimitPsiUnder { b, r0, l } => vec![("b", b), ("r0", r0), ("l", l)],
            Family::AppendixPsiUnder => vec![],
        }
    }

    /// Build from a tag and a key/value map; every missing or unknown key is reported.
    pub fn from_params(tag: Tag, map: &BTreeMap<String, f64>) -> std::result::Result<Self, Vec<String>> {
        let mut errs = Vec::new();
        for k in map.keys() {
            if !tag.param_keys().contains(&k.as_str()) {
                errs.push(format!("candidate.{k}: not a parameter of {tag}"));
            }
        }
        let mut get = |k: &str| match map.get(k) {
            Some(v) => *v,
            None => {
                errs.push(format!("candidate.{k}: required by {tag}"));
                f64::NAN
            }
        };
        let fam = match tag {
            Tag::StationaryPsiC => Family::StationaryPsiC { c: get("c") },
            Tag::LowerBarrierUstar => Family::LowerBarrierUstar { l: get("l"), gamma: get("gamma") },
            Tag::UpperBarrierUstarEps => Family::UpperBarrierUstarEps { mu: get("mu"), eps: get("eps") },
            Tag::UpperBarrierUstarNu1 => Family::UpperBarrierUstarNu1 { nu1: get("nu1") },
            Tag::UpperBarrierUbarEps => Family::UpperBarrierUbarEps {
                l: get("l"),
                nu2: get("nu2"),
                eps: get("eps"),
                b: get("b"),
            },
            Tag::LowerBarrierPhiUnder => Family::LowerBarrierPhiUnder {
                l: get("l"),
                nu3: get("nu3"),
                nu4: get("nu4"),
                r0: get("r0"),
                b: get("b"),
            },
            Tag::LimitPsiUnder => Family::LimitPsiUnder { b: get("b"), r0: get("r0"), l: get("l") },
            Tag::AppendixPsiUnder => Family::AppendixPsiUnder,
        };
        if errs.is_empty() {
            Ok(fam)
        } else {
            Err(errs)
        }
    }
}

/// Shared setting of a candidate: obstacles and flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Context {
    pub obstacles: ObstacleSpec,
    pub flow: FlowParams,
}

impl Context {
    pub fn new(obstacles: ObstacleSpec, flow: FlowParams) -> Self {
        Self { obstacles, flow }
    }

    /// Convenience constructor with default lower obstacle.
    pub fn cone(lambda: f64, big_r: f64, a: f64, n: usize) -> Result<Self> {
        Ok(Self::new(ObstacleSpec::new(big_r, lambda)?, FlowParams::new(a, n)?))
    }
}

/// One failed bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub param: &'static str,
    pub value: f64,
    pub admissible: String,
    pub note: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {} outside {}", self.param, self.value, self.admissible)?;
        if !self.note.is_empty() {
            write!(f, " ({})", self.note)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Side {
    Open,
    Closed,
}

struct Checks(Vec<Violation>);

impl Checks {
    fn interval(&mut self, param: &'static str, v: f64, lo: (f64, Side), hi: (f64, Side), note: &'static str) {
        let tol = 1e-12 * (1.0 + v.abs());
        let lo_ok = match lo.1 {
            Side::Open => v > lo.0,
            Side::Closed => v >= lo.0 - tol,
        };
        let hi_ok = match hi.1 {
            Side::Open => v < hi.0,
            Side::Closed => v <= hi.0 + tol,
        };
        if !(lo_ok && hi_ok) || !v.is_finite() {
            let l = match lo.1 {
                Side::Open => "(",
                Side::Closed => "[",
            };
            let h = match hi.1 {
                Side::Open => ")",
                Side::Closed => "]",
            };
            self.0.push(Violation {
                param,
                value: v,
                admissible: format!("{l}{}, {}{h}", lo.0, hi.0),
                note,
            });
        }
    }

    fn open(&mut self, param: &'static str, v: f64, lo: f64, hi: f64) {
        self.interval(param, v, (lo, Side::Open), (hi, Side::Open), "");
    }

    fn positive(&mut self, param: &'static str, v: f64) {
        self.open(param, v, 0.0, f64::INFINITY);
    }

    fn at_most(&mut self, param: &'static str, v: f64, hi: f64, note: &'static str) {
        self.interval(param, v, (f64::NEG_INFINITY, Side::Open), (hi, Side::Closed), note);
    }
}

/// Upper end of each open parameter interval for a family in a context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBound {
    pub param: &'static str,
    pub value: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    family: Family,
    ctx: Context,
    validated: bool,
}

impl Candidate {
    pub fn new(family: Family, ctx: Context) -> Self {
        Self { family, ctx, validated: false }
    }

    /// Construct and validate in one go.
    pub fn validated(family: Family, ctx: Context) -> Result<Self> {
        Self::new(family, ctx).validate()
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn tag(&self) -> Tag {
        self.family.tag()
    }

    pub fn context(&self) -> &Context {
        &self.ctx
    }

    pub fn is_validated(&self) -> bool {
        self.validated
    }

    pub fn validate(mut self) -> Result<Self> {
        match self.validate_params() {
            Ok(()) => {
                self.validated = true;
                Ok(self)
            }
            Err(v) => Err(Error::Violations(v.iter().map(|v| format!("{}: {v}", self.tag())).collect())),
        }
    }

    /// Right end of the radial sampling window.
    pub fn r_max(&self) -> f64 {
        match self.family {
            Family::AppendixPsiUnder => self.ctx.obstacles.big_r(),
            _ => 1.25 * self.ctx.obstacles.big_r(),
        }
    }

    fn nm1(&self) -> f64 {
        self.ctx.flow.nm1()
    }

    /// Upper ends of the open decay-rate intervals, for the parameters that have one.
    pub fn rate_bounds(&self) -> Vec<ParamBound> {
        let big_r = self.ctx.obstacles.big_r();
        let a = self.ctx.flow.a();
        let nm1 = self.nm1();
        let crit = self.ctx.flow.critical_radius();
        match self.family {
            Family::LowerBarrierUstar { gamma, .. } => {
                vec![ParamBound { param: "gamma", value: gamma, upper: (nm1 / big_r + a) / big_r }]
            }
            Family::UpperBarrierUstarEps { mu, eps } => vec![ParamBound {
                param: "mu",
                value: mu,
                upper: a / nm1 * (nm1 / (crit - eps) - a),
            }],
            Family::UpperBarrierUstarNu1 { nu1 } => {
                vec![ParamBound { param: "nu1", value: nu1, upper: (nm1 / big_r - a) / big_r }]
            }
            Family::UpperBarrierUbarEps { l, nu2, eps, .. } => vec![ParamBound {
                param: "nu2",
                value: nu2,
                upper: a / nm1 * (nm1 / (crit - eps / l) - a),
            }],
            Family::LowerBarrierPhiUnder { nu3, nu4, r0, .. } => vec![
                ParamBound { param: "nu3", value: nu3, upper: (nm1 + a * r0) / (r0 * r0) },
                ParamBound { param: "nu4", value: nu4, upper: (nm1 / big_r + a) / big_r },
            ],
            _ => vec![],
        }
    }

    /// Every bound the construction needs; empty on success.
    pub fn validate_params(&self) -> std::result::Result<(), Vec<Violation>> {
        let obs = &self.ctx.obstacles;
        let (lambda, big_r) = (obs.lambda(), obs.big_r());
        let a = self.ctx.flow.a();
        let crit = self.ctx.flow.critical_radius();
        let mut c = Checks(Vec::new());
        for pb in self.rate_bounds() {
            c.open(pb.param, pb.value, 0.0, pb.upper);
        }
        match self.family {
            Family::StationaryPsiC { c: cap } => {
                c.interval(
                    "C",
                    cap,
                    (0.0, Side::Closed),
                    ((lambda * (big_r - crit)).max(0.0), Side::Closed),
                    "upper end lambda (R - (N-1)/A); the alternative bound lambda (N-1)/A is not used",
                );
            }
            Family::LowerBarrierUstar { l, .. } => c.positive("L", l),
            Family::UpperBarrierUstarEps { eps, .. } => {
                c.positive("eps", eps);
                c.interval(
                    "(N-1)/A - eps",
                    crit - eps,
                    (0.0, Side::Open),
                    (big_r, Side::Open),
                    "inner cone radius must lie inside the support",
                );
            }
            Family::UpperBarrierUstarNu1 { .. } => {
                c.interval("R", big_r, (0.0, Side::Open), (crit, Side::Open), "requires R < (N-1)/A");
            }
            Family::UpperBarrierUbarEps { l, eps, b, .. } => {
                c.positive("L", l);
                c.positive("eps", eps);
                c.interval("B", b, (0.0, Side::Closed), (f64::INFINITY, Side::Open), "");
                let rho = crit - eps / l;
                c.interval("(N-1)/A - eps/L", rho, (0.0, Side::Open), (big_r, Side::Open), "");
                c.at_most("B + eps", b + eps, lambda * (big_r - rho), "continuity with psi+ at the inner radius");
                c.at_most("L rho + B + eps", l * rho + b + eps, lambda * big_r, "must stay below psi+ at the origin");
            }
            Family::LowerBarrierPhiUnder { l, r0, b, .. } => {
                c.positive("L", l);
                c.interval("r0", r0, (crit, Side::Closed), (big_r, Side::Closed), "");
                c.interval("B", b, (0.0, Side::Closed), (f64::INFINITY, Side::Open), "");
                c.at_most("B", b, l * (big_r - r0), "continuity at R needs B <= L (R - r0)");
                c.at_most("B", b, lambda * (big_r - r0), "must stay below psi+");
            }
            Family::LimitPsiUnder { b, r0, l } => {
                c.positive("L", l);
                c.interval("r0", r0, (crit, Side::Closed), (big_r, Side::Closed), "");
                c.interval("B", b, (0.0, Side::Closed), (f64::INFINITY, Side::Open), "");
                c.at_most("B", b, lambda.min(l) * (big_r - r0), "must stay below psi+");
            }
            Family::AppendixPsiUnder => {
                let n = self.ctx.flow.n() as f64;
                c.interval("N", n, (2.0, Side::Closed), (2.0, Side::Closed), "fixed shape");
                c.interval("A", a, (1.0, Side::Closed), (1.0, Side::Closed), "fixed shape");
                c.interval("R", big_r, (2.0, Side::Closed), (2.0, Side::Closed), "fixed shape");
            }
        }
        if c.0.is_empty() {
            Ok(())
        } else {
            Err(c.0)
        }
    }

    /// Checks that the plateau radius sits on the given initial profile: `u0(r0) = B`.
    pub fn check_plateau_radius(&self, u0: impl Fn(f64) -> f64) -> std::result::Result<(), Violation> {
        if let Family::LowerBarrierPhiUnder { r0, b, .. } | Family::LimitPsiUnder { r0, b, .. } = self.family {
            let v = u0(r0);
            if (v - b).abs() > 1e-9 {
                return Err(Violation {
                    param: "u0(r0)",
                    value: v,
                    admissible: format!("[{b}, {b}]"),
                    note: "r0 must satisfy u0(r0) = B",
                });
            }
        }
        Ok(())
    }

    fn upper_cone(&self) -> PiecewiseAffine {
        let obs = &self.ctx.obstacles;
        let (l, r) = (obs.lambda(), obs.big_r());
        PiecewiseAffine::new(vec![
            Piece::new(0.0, r, l * r, -l, 0.0, 0.0),
            Piece::constant(r, self.r_max(), 0.0),
        ])
    }

    fn lower_cone(&self) -> PiecewiseAffine {
        let obs = &self.ctx.obstacles;
        let (s, r) = (obs.lower_slope(), obs.big_r());
        PiecewiseAffine::new(vec![
            Piece::new(0.0, r, -s * r, s, 0.0, 0.0),
            Piece::constant(r, self.r_max(), 0.0),
        ])
    }

    /// Closed form at time `t`, without the validation gate.
    pub fn pieces(&self, t: f64) -> PiecewiseAffine {
        let obs = &self.ctx.obstacles;
        let (lambda, big_r) = (obs.lambda(), obs.big_r());
        let rm = self.r_max();
        let crit = self.ctx.flow.critical_radius();
        let constant = |c: f64| PiecewiseAffine::new(vec![Piece::constant(0.0, rm, c)]);
        match self.family {
            Family::StationaryPsiC { c } => self.upper_cone().min_with(&constant(c)),
            Family::LowerBarrierUstar { l, gamma } => {
                let e = l * (-gamma * t).exp();
                let phi = PiecewiseAffine::new(vec![
                    Piece::new(0.0, big_r, -e * big_r, e, gamma * e * big_r, -gamma * e),
                    Piece::constant(big_r, rm, 0.0),
                ]);
                phi.max_with(&self.lower_cone())
            }
            Family::UpperBarrierUstarEps { mu, eps } => {
                let rho = crit - eps;
                let e = lambda * (-mu * t).exp();
                let inner = PiecewiseAffine::new(vec![Piece::new(
                    0.0,
                    rho,
                    e * rho + lambda * (big_r - rho),
                    -e,
                    -mu * e * rho,
                    mu * e,
                )]);
                inner.concat(&self.upper_cone().restrict(rho, rm))
            }
            Family::UpperBarrierUstarNu1 { nu1 } => {
                let e = lambda * (-nu1 * t).exp();
                PiecewiseAffine::new(vec![
                    Piece::new(0.0, big_r, e * big_r, -e, -nu1 * e * big_r, nu1 * e),
                    Piece::constant(big_r, rm, 0.0),
                ])
            }
            Family::UpperBarrierUbarEps { l, nu2, eps, b } => {
                let rho = crit - eps / l;
                let e = l * (-nu2 * t).exp();
                let inner = PiecewiseAffine::new(vec![Piece::new(
                    0.0,
                    rho,
                    e * rho + b + eps,
                    -e,
                    -nu2 * e * rho,
                    nu2 * e,
                )]);
                let outer = self.upper_cone().min_with(&constant(b + eps)).restrict(rho, rm);
                inner.concat(&outer)
            }
            Family::LowerBarrierPhiUnder { l, nu3, nu4, r0, b } => {
                let e3 = l * (-nu3 * t).exp();
                let e4 = l * (-nu4 * t).exp();
                let inner = PiecewiseAffine::new(vec![Piece::new(0.0, r0, b - e3 * r0, e3, nu3 * e3 * r0, -nu3 * e3)]);
                let steep = PiecewiseAffine::new(vec![Piece::new(r0, big_r, l * r0 + b, -l, 0.0, 0.0)]);
                let rising = PiecewiseAffine::new(vec![Piece::new(r0, big_r, -e4 * big_r, e4, nu4 * e4 * big_r, -nu4 * e4)]);
                let phi = inner
                    .concat(&steep.max_with(&rising))
                    .concat(&PiecewiseAffine::new(vec![Piece::constant(big_r, rm, 0.0)]));
                phi.max_with(&self.lower_cone())
            }
            Family::LimitPsiUnder { b, r0, l } => {
                let edge = r0 + b / l;
                PiecewiseAffine::new(vec![
                    Piece::constant(0.0, r0, b),
                    Piece::new(r0, edge, l * r0 + b, -l, 0.0, 0.0),
                    Piece::constant(edge, rm, 0.0),
                ])
            }
            Family::AppendixPsiUnder => {
                let g = (t / 6.0).exp();
                let r0 = 2.0 - 0.5 / g;
                PiecewiseAffine::new(vec![
                    Piece::constant(0.0, r0, 1.0),
                    Piece::new(r0, 2.0, 4.0 * g, -2.0 * g, 4.0 * g / 6.0, -2.0 * g / 6.0),
                ])
            }
        }
    }

    fn gate(&self, r: f64, t: f64) -> Result<()> {
        if !self.validated {
            return Err(Error::Usage(format!("{} has not been validated", self.tag())));
        }
        if !(r >= 0.0 && t >= 0.0) {
            return Err(Error::Parameter(format!("need r >= 0 and t >= 0, got r={r}, t={t}")));
        }
        Ok(())
    }

    /// Value at `(r, t)`. Radii beyond the sampling window continue the last piece
    /// (all candidates are constant there).
    pub fn evaluate(&self, r: f64, t: f64) -> Result<f64> {
        self.gate(r, t)?;
        Ok(self.pieces(t).value(r))
    }

    pub fn kink_set(&self, t: f64) -> Result<Vec<KinkDescriptor>> {
        self.gate(0.0, t)?;
        Ok(self.kinks_unchecked(t))
    }

    pub(crate) fn kinks_unchecked(&self, t: f64) -> Vec<KinkDescriptor> {
        self.pieces(t)
            .breakpoints()
            .into_iter()
            .filter(|(_, p, q)| (p.b - q.b).abs() > 1e-12 * (1.0 + p.b.abs().max(q.b.abs())))
            .map(|(r0, p, q)| KinkDescriptor::from_pieces(r0, &p, &q))
            .collect()
    }

    /// Lower obstacle value seen by the exemption test; absent for the Dirichlet shape.
    pub fn lower_obstacle(&self, r: f64) -> Option<f64> {
        match self.family {
            Family::AppendixPsiUnder => None,
            _ => Some(self.ctx.obstacles.lower(r)),
        }
    }

    pub fn upper_obstacle(&self, r: f64) -> Option<f64> {
        match self.family {
            Family::AppendixPsiUnder => None,
            _ => Some(self.ctx.obstacles.upper(r)),
        }
    }
}

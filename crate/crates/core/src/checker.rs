//! Sampling verification of radial sub- and supersolutions.
//!
//! Smooth points are tested through the signed residual
//! `phi_t - (N-1) phi_r / r - A |phi_r|`; kinks through the slope-interval test,
//! where admissible test gradients sweep the interval between the one-sided slopes.

use std::fmt::Write as _;

use crate::candidates::{Candidate, KinkDescriptor, Mode, Tag};
use crate::error::{Error, Result};

/// Tolerance for treating a candidate as touching an obstacle.
pub const CONTACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingSpec {
    pub r_points: usize,
    pub t_slices: usize,
    pub t_check: f64,
    /// First time slice as a fraction of `t_check`.
    pub t_first: f64,
    pub s_samples: usize,
    pub slack: f64,
    pub kink_margin: f64,
    pub max_recorded_failures: usize,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self {
            r_points: 10_000,
            t_slices: 32,
            t_check: 20.0,
            t_first: 1e-3,
            s_samples: 64,
            slack: 1e-10,
            kink_margin: 1e-9,
            max_recorded_failures: 1000,
        }
    }
}

impl SamplingSpec {
    pub fn times(&self) -> Vec<f64> {
        let k = self.t_slices.max(1);
        if k == 1 {
            return vec![self.t_check];
        }
        (0..k)
            .map(|i| {
                let x = i as f64 / (k - 1) as f64;
                self.t_check * self.t_first.powf(1.0 - x)
            })
            .collect()
    }
}

#[inline]
fn badness(mode: Mode, v: f64) -> f64 {
    match mode {
        Mode::Sub => v,
        Mode::Super => -v,
    }
}

fn in_contact(c: &Candidate, mode: Mode, r: f64, value: f64) -> bool {
    let obstacle = match mode {
        Mode::Sub => c.lower_obstacle(r),
        Mode::Super => c.upper_obstacle(r),
    };
    obstacle.is_some_and(|o| (value - o).abs() <= CONTACT_TOL)
}

/// Signed residual at a smooth point; `None` where the obstacle-contact exemption applies.
pub fn residual_smooth(c: &Candidate, r: f64, t: f64, mode: Mode) -> Result<Option<f64>> {
    if !(r > 0.0) {
        return Err(Error::Usage(format!("residual needs r > 0, got {r}")));
    }
    if c.kinks_unchecked(t).iter().any(|k| (k.radius - r).abs() < 1e-9) {
        return Err(Error::Usage(format!("r={r} is at a kink at t={t}")));
    }
    let pieces = c.pieces(t);
    let p = pieces.locate(r);
    if in_contact(c, mode, r, p.value(r)) {
        return Ok(None);
    }
    let flow = c.context().flow;
    Ok(Some(p.rate(r) - flow.nm1() * p.b / r - flow.a() * p.b.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KinkStatus {
    Pass,
    Fail,
    /// The kink shape makes the test in this mode empty.
    Vacuous,
    /// The candidate touches the obstacle there.
    Exempt,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinkCheck {
    pub t: f64,
    pub radius: f64,
    pub a: f64,
    pub b: f64,
    pub s_lo: f64,
    pub s_hi: f64,
    pub worst: f64,
    pub status: KinkStatus,
}

/// Slope-interval test at one kink.
///
/// With `r0(t)` the kink path and `w(t)` the value along it, a test function
/// touching at the kink with gradient `s` has `phi_t = w' - r0' s`, so the
/// quantity tested is `w' - r0' s - (N-1) s / r0 - A |s|` for `s` between the slopes.
pub fn check_kink(c: &Candidate, kink: &KinkDescriptor, t: f64, mode: Mode, s_samples: usize) -> Result<KinkCheck> {
    if s_samples < 64 {
        return Err(Error::Usage(format!("need at least 64 slope samples, got {s_samples}")));
    }
    if kink.test_mode() != mode {
        return Err(Error::Usage(format!(
            "kink at r={} with slopes ({}, {}) admits only the {} test",
            kink.radius,
            kink.a,
            kink.b,
            kink.test_mode()
        )));
    }
    let scale = 1.0 + kink.a.abs().max(kink.b.abs());
    if kink.is_moving() && kink.value_rate.abs() > 1e-12 * scale {
        return Err(Error::Unsupported(format!(
            "kink at r={} moves with non-constant value along its path",
            kink.radius
        )));
    }
    let flow = c.context().flow;
    let (s_lo, s_hi) = (kink.a.min(kink.b), kink.a.max(kink.b));
    let v = |s: f64| {
        kink.value_rate - kink.velocity * s - flow.nm1() * s / kink.radius - flow.a() * s.abs()
    };
    let mut worst = f64::NEG_INFINITY;
    let mut worst_v = 0.0;
    let mut consider = |s: f64| {
        let x = v(s);
        let bad = badness(mode, x);
        if bad > worst {
            worst = bad;
            worst_v = x;
        }
    };
    for i in 0..s_samples {
        consider(s_lo + (s_hi - s_lo) * i as f64 / (s_samples - 1) as f64);
    }
    if s_lo < 0.0 && s_hi > 0.0 {
        consider(0.0);
    }
    Ok(KinkCheck {
        t,
        radius: kink.radius,
        a: kink.a,
        b: kink.b,
        s_lo,
        s_hi,
        worst: worst_v,
        status: if worst <= 1e-10 { KinkStatus::Pass } else { KinkStatus::Fail },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub r: f64,
    pub t: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub tag: Tag,
    pub mode: Mode,
    pub param_violations: Vec<String>,
    pub smooth_samples: usize,
    pub exempt_samples: usize,
    /// Largest residual (SUB) or smallest residual (SUPER) over tested points.
    pub worst: Option<Sample>,
    pub kinks: Vec<KinkCheck>,
    pub failures: Vec<Sample>,
    pub failure_count: usize,
    pub passed: bool,
}

impl VerificationReport {
    pub fn kink_failures(&self) -> usize {
        self.kinks.iter().filter(|k| k.status == KinkStatus::Fail).count()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for f in &self.failures {
            let _ = writeln!(s, "{} {:.16e} {:.16e} {:.16e}", self.mode, f.r, f.t, f.residual);
        }
        let _ = writeln!(s, "# candidate {}", self.tag);
        let _ = writeln!(s, "# mode {}", self.mode);
        for v in &self.param_violations {
            let _ = writeln!(s, "# bound violated: {v}");
        }
        let _ = writeln!(s, "# smooth samples {} exempt {}", self.smooth_samples, self.exempt_samples);
        if let Some(w) = self.worst {
            let _ = writeln!(s, "# worst residual {:.6e} at r={:.9} t={:.6}", w.residual, w.r, w.t);
        }
        let count = |st| self.kinks.iter().filter(|k| k.status == st).count();
        let _ = writeln!(
            s,
            "# kink tests pass {} fail {} vacuous {} exempt {}",
            count(KinkStatus::Pass),
            count(KinkStatus::Fail),
            count(KinkStatus::Vacuous),
            count(KinkStatus::Exempt)
        );
        let _ = writeln!(s, "# failed samples {}", self.failure_count);
        let _ = writeln!(s, "# verdict {}", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Extremum of a unimodal function on `[lo, hi]` by golden-section search.
fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Dense residual sampling plus kink tests over the time slices of `spec`.
///
/// Unvalidated candidates are still sampled, but any bound violation fails the verdict.
pub fn verify_candidate(c: &Candidate, mode: Mode, spec: &SamplingSpec) -> Result<VerificationReport> {
    let param_violations: Vec<String> = match c.validate_params() {
        Ok(()) => vec![],
        Err(v) => v.iter().map(|v| v.to_string()).collect(),
    };
    let flow = c.context().flow;
    let (nm1, a) = (flow.nm1(), flow.a());
    let r_max = c.r_max();
    let r_floor = r_max / spec.r_points as f64;
    let mut report = VerificationReport {
        tag: c.tag(),
        mode,
        param_violations,
        smooth_samples: 0,
        exempt_samples: 0,
        worst: None,
        kinks: Vec::new(),
        failures: Vec::new(),
        failure_count: 0,
        passed: false,
    };
    let mut worst_bad = f64::NEG_INFINITY;
    let mut record = |report: &mut VerificationReport, r: f64, t: f64, v: f64| {
        let bad = badness(mode, v);
        if bad > worst_bad {
            worst_bad = bad;
            report.worst = Some(Sample { r, t, residual: v });
        }
        if bad > spec.slack {
            report.failure_count += 1;
            if report.failures.len() < spec.max_recorded_failures {
                report.failures.push(Sample { r, t, residual: v });
            }
        }
    };

    for t in spec.times() {
        let pw = c.pieces(t);
        let breaks: Vec<f64> = pw.breakpoints().iter().map(|b| b.0).collect();
        let near_break = |r: f64| breaks.iter().any(|&b| (b - r).abs() < spec.kink_margin);

        for k in 1..=spec.r_points {
            let r = r_max * k as f64 / spec.r_points as f64;
            if near_break(r) || (r >= r_max && c.tag() == Tag::AppendixPsiUnder) {
                continue;
            }
            let p = pw.locate(r);
            if in_contact(c, mode, r, p.value(r)) {
                report.exempt_samples += 1;
                continue;
            }
            report.smooth_samples += 1;
            let v = p.rate(r) - nm1 * p.b / r - a * p.b.abs();
            record(&mut report, r, t, v);
        }

        for p in pw.pieces() {
            let lo = p.lo.max(r_floor) + spec.kink_margin;
            let hi = p.hi - spec.kink_margin;
            if hi <= lo {
                continue;
            }
            let res = |r: f64| p.rate(r) - nm1 * p.b / r - a * p.b.abs();
            let r = golden(|r| badness(mode, res(r)), lo, hi);
            for r in [lo, r, hi] {
                if !in_contact(c, mode, r, p.value(r)) {
                    record(&mut report, r, t, res(r));
                }
            }
        }

        for kink in c.kinks_unchecked(t) {
            let value = pw.value(kink.radius);
            let status = if kink.test_mode() != mode {
                Some(KinkStatus::Vacuous)
            } else if in_contact(c, mode, kink.radius, value) {
                Some(KinkStatus::Exempt)
            } else {
                None
            };
            let check = match status {
                Some(st) => KinkCheck {
                    t,
                    radius: kink.radius,
                    a: kink.a,
                    b: kink.b,
                    s_lo: kink.a.min(kink.b),
                    s_hi: kink.a.max(kink.b),
                    worst: f64::NAN,
                    status: st,
                },
                None => check_kink(c, &kink, t, mode, spec.s_samples)?,
            };
            report.kinks.push(check);
        }
    }
    report.passed =
        report.param_violations.is_empty() && report.failure_count == 0 && report.kink_failures() == 0;
    Ok(report)
}

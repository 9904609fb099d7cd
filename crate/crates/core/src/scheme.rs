use crate::error::{Error, Result};

/// Explicit time-stepping controls shared by both solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    /// Safety factor in (0, 1].
    pub cfl: f64,
    pub horizon: f64,
    pub snapshot_interval: f64,
    /// Stop once the sup-norm change per unit time stays below this for `patience`
    /// consecutive snapshot intervals. Zero disables.
    pub steady_tol: f64,
    pub patience: usize,
}

impl Default for SchemeParams {
    fn default() -> Self {
        Self { cfl: 0.5, horizon: 10.0, snapshot_interval: 0.1, steady_tol: 1e-5, patience: 3 }
    }
}

impl SchemeParams {
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            v.push(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            v.push(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.snapshot_interval.is_finite() && self.snapshot_interval > 0.0) {
            v.push(format!("snapshot interval must be positive, got {}", self.snapshot_interval));
        }
        if !(self.steady_tol >= 0.0) {
            v.push(format!("steady tolerance must be non-negative, got {}", self.steady_tol));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Violations(v))
        }
    }

    pub fn without_steady_stop(mut self) -> Self {
        self.steady_tol = 0.0;
        self
    }
}

/// Steps from t=0 to the horizon, landing exactly on every snapshot time.
/// `observe(t)` runs at t=0 and at each snapshot and returns true to stop early.
pub(crate) fn drive(
    scheme: &SchemeParams,
    dt: f64,
    mut step: impl FnMut(f64, f64) -> Result<()>,
    mut observe: impl FnMut(f64) -> Result<bool>,
) -> Result<f64> {
    let mut t = 0.0;
    if observe(t)? {
        return Ok(t);
    }
    let mut k = 0u64;
    while t < scheme.horizon {
        k += 1;
        let target = (k as f64 * scheme.snapshot_interval).min(scheme.horizon);
        while t < target {
            if target - t <= dt * (1.0 + 1e-9) {
                step(t, target - t)?;
                t = target;
            } else {
                step(t, dt)?;
                t += dt;
            }
        }
        if observe(t)? {
            break;
        }
    }
    Ok(t)
}

/// Counts consecutive quiet snapshot intervals.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SteadyDetector {
    tol: f64,
    patience: usize,
    quiet: usize,
}

impl SteadyDetector {
    pub fn new(scheme: &SchemeParams) -> Self {
        Self { tol: scheme.steady_tol, patience: scheme.patience, quiet: 0 }
    }

    pub fn update(&mut self, sup_change: f64, interval: f64) -> bool {
        if self.tol <= 0.0 || self.patience == 0 || interval <= 0.0 {
            return false;
        }
        if sup_change / interval < self.tol {
            self.quiet += 1;
        } else {
            self.quiet = 0;
        }
        self.quiet >= self.patience
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drive_hits_snapshot_times() {
        let s = SchemeParams { horizon: 1.0, snapshot_interval: 0.25, ..Default::default() };
        let mut seen = Vec::new();
        let mut steps = 0;
        let end = drive(&s, 0.1, |_, d| {
            assert!(d > 0.0 && d <= 0.1 * (1.0 + 1e-9));
            steps += 1;
            Ok(())
        }, |t| {
            seen.push(t);
            Ok(false)
        })
        .unwrap();
        assert_eq!(end, 1.0);
        assert_eq!(seen, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(steps >= 10);
    }

    #[test]
    fn steady_detector_needs_patience() {
        let s = SchemeParams { steady_tol: 1e-5, patience: 3, ..Default::default() };
        let mut d = SteadyDetector::new(&s);
        assert!(!d.update(0.0, 0.1));
        assert!(!d.update(0.0, 0.1));
        assert!(!d.update(1.0, 0.1));
        assert!(!d.update(0.0, 0.1));
        assert!(!d.update(0.0, 0.1));
        assert!(d.update(0.0, 0.1));
        let mut off = SteadyDetector::new(&s.without_steady_stop());
        assert!((0..10).all(|_| !off.update(0.0, 0.1)));
    }

    #[test]
    fn rejects_bad_params() {
        let s = SchemeParams { cfl: 1.5, horizon: -1.0, ..Default::default() };
        match s.validate() {
            Err(Error::Violations(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}

//! Cone obstacles, truncated cones and flow parameters.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{BoxGrid, Grid, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    a: f64,
    n: usize,
}

impl FlowParams {
    pub fn new(a: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Parameter(format!("driving force A must be positive, got {a}")));
        }
        if n < 2 {
            return Err(Error::Parameter(format!("dimension N must be >= 2, got {n}")));
        }
        Ok(Self { a, n })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// N - 1 as a float.
    pub fn nm1(&self) -> f64 {
        (self.n - 1) as f64
    }

    /// (N-1)/A, the radius separating shrinking and expanding circles.
    pub fn critical_radius(&self) -> f64 {
        self.nm1() / self.a
    }
}

fn check_cone(lambda: f64, big_r: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Parameter(format!("slope lambda must be positive, got {lambda}")));
    }
    if !(big_r.is_finite() && big_r > 0.0) {
        return Err(Error::Parameter(format!("support radius R must be positive, got {big_r}")));
    }
    Ok(())
}

#[inline]
fn cone(r: f64, lambda: f64, big_r: f64) -> f64 {
    if r <= big_r {
        lambda * (big_r - r)
    } else {
        0.0
    }
}

/// Upper obstacle `lambda (R - r)` inside the ball, zero outside.
pub fn psi_plus(r: f64, lambda: f64, big_r: f64) -> Result<f64> {
    check_cone(lambda, big_r)?;
    if !(r >= 0.0) {
        return Err(Error::Parameter(format!("radius must be non-negative, got {r}")));
    }
    Ok(cone(r, lambda, big_r))
}

/// Truncated cone `min(psi_plus, C)`.
pub fn psi_c(r: f64, c: f64, lambda: f64, big_r: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::Parameter(format!("plateau height C must be non-negative, got {c}")));
    }
    Ok(psi_plus(r, lambda, big_r)?.min(c))
}

/// Admissible plateau heights for stationary truncated cones: `[0, lambda (R - (N-1)/A)]`.
pub fn plateau_bound(lambda: f64, big_r: f64, flow: &FlowParams) -> f64 {
    (lambda * (big_r - flow.critical_radius())).max(0.0)
}

/// C^1 smoothing of `(R - r)_+`: quadratic blend over `|r - R| < eps/2`
/// and a rounded tip for `r < eps/2`. Slope stays in [-1, 0].
pub fn smoothed_cone_profile(r: f64, big_r: f64, eps: f64) -> f64 {
    if eps <= 0.0 {
        return (big_r - r).max(0.0);
    }
    let half = 0.5 * eps;
    if r >= big_r + half {
        0.0
    } else if r > big_r - half {
        let d = big_r + half - r;
        d * d / (2.0 * eps)
    } else if r < half {
        big_r - (r * r + half * half) / eps
    } else {
        big_r - r
    }
}

/// The obstacle pair: `psi+ = lambda (R - r)_+` and `psi- = -lower_slope (R - r)_+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleSpec {
    big_r: f64,
    lambda: f64,
    lower_slope: f64,
    lipschitz: f64,
}

impl ObstacleSpec {
    /// Cone obstacles with the default lower obstacle `-psi+`.
    pub fn new(big_r: f64, lambda: f64) -> Result<Self> {
        check_cone(lambda, big_r)?;
        Ok(Self { big_r, lambda, lower_slope: lambda, lipschitz: lambda })
    }

    pub fn with_lower_slope(mut self, slope: f64) -> Result<Self> {
        if !(slope.is_finite() && slope > 0.0) {
            return Err(Error::Parameter(format!(
                "lower obstacle slope must be positive (psi- < 0 inside the ball), got {slope}"
            )));
        }
        self.lower_slope = slope;
        self.lipschitz = self.lipschitz.max(slope);
        Ok(self)
    }

    /// Raise the common Lipschitz constant L (never below the obstacle slopes).
    pub fn with_lipschitz(mut self, l: f64) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::Parameter(format!("Lipschitz constant must be positive, got {l}")));
        }
        self.lipschitz = l.max(self.lambda).max(self.lower_slope);
        Ok(self)
    }

    pub fn big_r(&self) -> f64 {
        self.big_r
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lower_slope(&self) -> f64 {
        self.lower_slope
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn upper(&self, r: f64) -> f64 {
        cone(r, self.lambda, self.big_r)
    }

    pub fn lower(&self, r: f64) -> f64 {
        -cone(r, self.lower_slope, self.big_r)
    }

    pub fn upper_smoothed(&self, r: f64, eps: f64) -> f64 {
        self.lambda * smoothed_cone_profile(r, self.big_r, eps)
    }

    pub fn lower_smoothed(&self, r: f64, eps: f64) -> f64 {
        -self.lower_slope * smoothed_cone_profile(r, self.big_r, eps)
    }

    pub fn sample_radial(&self, grid: &RadialGrid) -> Result<(Field<RadialGrid>, Field<RadialGrid>)> {
        if grid.r_max() <= self.big_r {
            return Err(Error::Parameter(format!(
                "grid radius {} must exceed the support radius {}",
                grid.r_max(),
                self.big_r
            )));
        }
        let r = grid.nodes();
        let lo = r.iter().map(|&r| self.lower(r)).collect();
        let hi = r.iter().map(|&r| self.upper(r)).collect();
        Ok((Field::new(*grid, lo)?, Field::new(*grid, hi)?))
    }

    /// Obstacles on the box; `eps > 0` selects the smoothed pair.
    pub fn sample_box(&self, grid: &BoxGrid, eps: f64) -> Result<(Field<BoxGrid>, Field<BoxGrid>)> {
        if grid.half_width() < self.big_r + 0.5 * eps.max(0.0) {
            return Err(Error::Parameter(format!(
                "box half width {} must exceed the support radius {}",
                grid.half_width(),
                self.big_r
            )));
        }
        let radii = grid.radii();
        let lo = radii.iter().map(|&r| self.lower_smoothed(r, eps)).collect();
        let hi = radii.iter().map(|&r| self.upper_smoothed(r, eps)).collect();
        debug_assert_eq!(radii.len(), grid.len());
        Ok((Field::new(grid.clone(), lo)?, Field::new(grid.clone(), hi)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::lipschitz_constant;

    #[test]
    fn psi_plus_values() {
        assert_eq!(psi_plus(0.0, 1.0, 2.0).unwrap(), 2.0);
        assert_eq!(psi_plus(2.0, 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(psi_plus(3.0, 1.0, 2.0).unwrap(), 0.0);
        assert!(psi_plus(1.0, 0.0, 2.0).is_err());
        assert!(psi_plus(1.0, 1.0, -2.0).is_err());
    }

    #[test]
    fn psi_c_values() {
        assert_eq!(psi_c(1.0, 0.5, 1.0, 2.0).unwrap(), 0.5);
        for r in [0.0, 0.3, 1.9, 2.5] {
            assert_eq!(psi_c(r, 0.0, 1.0, 2.0).unwrap(), 0.0);
            assert_eq!(psi_c(r, 2.0, 1.0, 2.0).unwrap(), psi_plus(r, 1.0, 2.0).unwrap());
        }
        assert!(psi_c(1.0, -0.1, 1.0, 2.0).is_err());
    }

    #[test]
    fn constant_field_clamps_to_obstacles() {
        let obs = ObstacleSpec::new(2.0, 1.0).unwrap();
        let g = RadialGrid::with_spacing(2.5, 0.01).unwrap();
        let (lo, hi) = obs.sample_radial(&g).unwrap();
        let top = Field::new(g, vec![2.0; g.len()]).unwrap();
        let bottom = Field::new(g, vec![-2.0; g.len()]).unwrap();
        let c = crate::field::clamp_to_obstacles(&top, &lo, &hi).unwrap();
        assert_eq!(c, hi);
        let c = crate::field::clamp_to_obstacles(&bottom, &lo, &hi).unwrap();
        assert_eq!(c, lo);
    }

    #[test]
    fn cone_lipschitz_is_slope() {
        let obs = ObstacleSpec::new(2.0, 1.0).unwrap();
        let g = RadialGrid::with_spacing(2.5, 0.01).unwrap();
        let (_, hi) = obs.sample_radial(&g).unwrap();
        assert!((lipschitz_constant(&hi).unwrap() - 1.0).abs() < 1e-12);
        let v = g.nodes().iter().map(|&r| psi_c(r, 0.5, 1.0, 2.0).unwrap()).collect();
        let c = Field::new(g, v).unwrap();
        assert!((lipschitz_constant(&c).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_must_contain_support() {
        let obs = ObstacleSpec::new(2.0, 1.0).unwrap();
        assert!(obs.sample_radial(&RadialGrid::new(2.0, 100).unwrap()).is_err());
        assert!(obs.sample_box(&BoxGrid::new(2, 1.9, 21).unwrap(), 0.0).is_err());
    }

    #[test]
    fn smoothed_profile_is_c1_and_one_lipschitz() {
        let (big_r, eps) = (2.0, 0.1);
        let f = |r: f64| smoothed_cone_profile(r, big_r, eps);
        for &x in &[0.05, big_r - 0.05, big_r + 0.05] {
            assert!((f(x - 1e-9) - f(x + 1e-9)).abs() < 1e-8);
            let dl = (f(x) - f(x - 1e-6)) / 1e-6;
            let dr = (f(x + 1e-6) - f(x)) / 1e-6;
            assert!((dl - dr).abs() < 1e-4, "slope jump at {x}");
        }
        let mut prev = f(0.0);
        for i in 1..=3000 {
            let r = i as f64 * 1e-3;
            let v = f(r);
            assert!((v - prev).abs() <= 1e-3 * (1.0 + 1e-12));
            prev = v;
        }
        assert_eq!(f(big_r + eps), 0.0);
    }

    #[test]
    fn flow_params() {
        assert!(FlowParams::new(0.0, 2).is_err());
        assert!(FlowParams::new(1.0, 1).is_err());
        assert_eq!(FlowParams::new(0.4, 2).unwrap().critical_radius(), 2.5);
        let f = FlowParams::new(2.0, 2).unwrap();
        assert_eq!(plateau_bound(1.0, 2.0, &f), 1.5);
    }
}

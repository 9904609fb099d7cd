//! Initial data: named analytic profiles, off-centre bumps, or sampled values.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{BoxGrid, Grid, RadialGrid};
use crate::obstacle::ObstacleSpec;

/// A cone bump `height (1 - |x - centre| / width)_+` in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub centre: [f64; 2],
    pub height: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// The upper obstacle itself.
    Cone,
    /// `min(psi+, cap)`.
    TruncatedCone { cap: f64 },
    Zero,
    /// `factor * psi+`.
    Scaled { factor: f64 },
    /// Plateau 1 on `r <= 3/2`, then `2 (2 - r)` down to zero at `r = 2`.
    Appendix,
    /// Sum of planar bumps, cut off by the obstacles. Not radial.
    Bumps(Vec<Bump>),
    /// Radial samples `(r, value)`, linearly interpolated, zero past the last radius.
    RadialSamples(Vec<(f64, f64)>),
}

impl InitialData {
    pub fn is_radial(&self) -> bool {
        !matches!(self, InitialData::Bumps(_))
    }

    /// Value at radius `r`; `None` for non-radial data.
    pub fn radial_value(&self, obs: &ObstacleSpec, r: f64) -> Option<f64> {
        Some(match self {
            InitialData::Cone => obs.upper(r),
            InitialData::TruncatedCone { cap } => obs.upper(r).min(*cap),
            InitialData::Zero => 0.0,
            InitialData::Scaled { factor } => factor * obs.upper(r),
            InitialData::Appendix => appendix_initial(r),
            InitialData::RadialSamples(s) => interpolate(s, r),
            InitialData::Bumps(_) => return None,
        })
    }

    pub fn sample_radial(&self, obs: &ObstacleSpec, grid: &RadialGrid) -> Result<Field<RadialGrid>> {
        if !self.is_radial() {
            return Err(Error::Domain("non-radial initial data on a radial grid".into()));
        }
        let v = grid.nodes().iter().map(|&r| self.radial_value(obs, r).unwrap_or(0.0)).collect();
        Field::new(*grid, v)
    }

    pub fn sample_box(&self, obs: &ObstacleSpec, grid: &BoxGrid) -> Result<Field<BoxGrid>> {
        let v = match self {
            InitialData::Bumps(bumps) => {
                if grid.dim() != 2 {
                    return Err(Error::Domain("bump initial data is planar".into()));
                }
                let radii = grid.radii();
                (0..grid.len())
                    .map(|f| {
                        let x = grid.point(f);
                        let r = radii[f];
                        let s: f64 = bumps
                            .iter()
                            .map(|b| {
                                let d = (x[0] - b.centre[0]).hypot(x[1] - b.centre[1]);
                                b.height * (1.0 - d / b.width).max(0.0)
                            })
                            .sum();
                        s.min(obs.upper(r)).max(obs.lower(r))
                    })
                    .collect()
            }
            _ => grid
                .radii()
                .iter()
                .map(|&r| self.radial_value(obs, r).unwrap_or(0.0))
                .collect(),
        };
        Field::new(grid.clone(), v)
    }
}

pub fn appendix_initial(r: f64) -> f64 {
    if r <= 1.5 {
        1.0
    } else if r <= 2.0 {
        2.0 * (2.0 - r)
    } else {
        0.0
    }
}

fn interpolate(s: &[(f64, f64)], r: f64) -> f64 {
    match s.iter().position(|&(x, _)| x >= r) {
        None => 0.0,
        Some(0) => s[0].1,
        Some(k) => {
            let (x0, y0) = s[k - 1];
            let (x1, y1) = s[k];
            if x1 == x0 {
                y1
            } else {
                y0 + (y1 - y0) * (r - x0) / (x1 - x0)
            }
        }
    }
}

/// Linear interpolation of a radial field at radius `r` (zero beyond the grid).
pub fn interpolate_field(u: &Field<RadialGrid>, r: f64) -> f64 {
    let g = u.grid();
    let x = r / g.h();
    if x >= g.cells() as f64 {
        return if x <= g.cells() as f64 + 1e-12 { u.values()[g.cells()] } else { 0.0 };
    }
    let i = x.floor() as usize;
    let w = x - i as f64;
    let v = u.values();
    v[i] * (1.0 - w) + v[i + 1] * w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_profiles() {
        let obs = ObstacleSpec::new(2.0, 1.0).unwrap();
        assert_eq!(InitialData::Cone.radial_value(&obs, 0.5), Some(1.5));
        assert_eq!(InitialData::TruncatedCone { cap: 1.0 }.radial_value(&obs, 0.5), Some(1.0));
        assert_eq!(InitialData::Scaled { factor: 0.5 }.radial_value(&obs, 1.0), Some(0.5));
        assert_eq!(InitialData::Appendix.radial_value(&obs, 1.75), Some(0.5));
        assert_eq!(InitialData::Appendix.radial_value(&obs, 2.2), Some(0.0));
        let s = InitialData::RadialSamples(vec![(0.0, 1.0), (1.0, 0.0)]);
        assert_eq!(s.radial_value(&obs, 0.25), Some(0.75));
        assert_eq!(s.radial_value(&obs, 3.0), Some(0.0));
    }

    #[test]
    fn bumps_respect_obstacles() {
        let obs = ObstacleSpec::new(2.0, 1.0).unwrap();
        let g = BoxGrid::new(2, 2.2, 45).unwrap();
        let b = InitialData::Bumps(vec![Bump { centre: [1.0, 0.5], height: 5.0, width: 0.5 }]);
        assert!(!b.is_radial());
        let u = b.sample_box(&obs, &g).unwrap();
        let radii = g.radii();
        for (v, r) in u.values().iter().zip(&radii) {
            assert!(*v <= obs.upper(*r) && *v >= obs.lower(*r));
        }
        assert!(b.sample_radial(&obs, &RadialGrid::new(2.5, 50).unwrap()).is_err());
    }

    #[test]
    fn field_interpolation() {
        let g = RadialGrid::new(2.0, 20).unwrap();
        let u = Field::new(g, g.nodes().iter().map(|r| 3.0 * r).collect()).unwrap();
        assert!((interpolate_field(&u, 0.55) - 1.65).abs() < 1e-12);
        assert!((interpolate_field(&u, 2.0) - 6.0).abs() < 1e-12);
        assert_eq!(interpolate_field(&u, 2.5), 0.0);
    }
}

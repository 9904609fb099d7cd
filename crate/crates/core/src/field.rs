use crate::error::{Error, Result};
use crate::grid::Grid;

/// Scalar values on the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<G: Grid> {
    grid: G,
    values: Vec<f64>,
}

impl<G: Grid> Field<G> {
    pub fn new(grid: G, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: G) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn grid(&self) -> &G {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn same_grid(&self, other: &Field<G>) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Shape("fields live on different grids".into()));
        }
        Ok(())
    }
}

/// Pointwise median `min(max(u, lower), upper)`.
pub fn clamp_to_obstacles<G: Grid>(u: &Field<G>, lower: &Field<G>, upper: &Field<G>) -> Result<Field<G>> {
    u.same_grid(lower)?;
    u.same_grid(upper)?;
    let values = u
        .values
        .iter()
        .zip(&lower.values)
        .zip(&upper.values)
        .map(|((&v, &lo), &hi)| v.max(lo).min(hi))
        .collect();
    Ok(Field { grid: u.grid.clone(), values })
}

/// Largest adjacent difference quotient.
pub fn lipschitz_constant<G: Grid>(u: &Field<G>) -> Result<f64> {
    if u.len() < 2 {
        return Err(Error::Shape("need at least two nodes".into()));
    }
    Ok(u.grid.max_adjacent_diff(&u.values) / u.grid.spacing())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoxGrid, RadialGrid};

    fn radial() -> RadialGrid {
        RadialGrid::new(2.5, 100).unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Field::new(radial(), vec![0.0; 5]).is_err());
        let mut v = vec![0.0; 101];
        v[3] = f64::NAN;
        assert!(Field::new(radial(), v).is_err());
    }

    #[test]
    fn clamp_is_median() {
        let g = radial();
        let lo = Field::new(g, vec![-1.0; 101]).unwrap();
        let hi = Field::new(g, vec![1.0; 101]).unwrap();
        let u = Field::new(g, (0..101).map(|i| i as f64 / 25.0 - 2.0).collect()).unwrap();
        let c = clamp_to_obstacles(&u, &lo, &hi).unwrap();
        assert_eq!(c.values()[0], -1.0);
        assert_eq!(c.values()[50], 0.0);
        assert_eq!(c.values()[100], 1.0);
        assert_eq!(clamp_to_obstacles(&c, &lo, &hi).unwrap(), c);
    }

    #[test]
    fn clamp_grid_mismatch() {
        let u = Field::zeros(radial());
        let other = Field::zeros(RadialGrid::new(2.5, 50).unwrap());
        assert!(matches!(clamp_to_obstacles(&u, &other, &u), Err(Error::Shape(_))));
    }

    #[test]
    fn lipschitz_of_zero_and_linear() {
        let g = BoxGrid::new(2, 1.0, 11).unwrap();
        assert_eq!(lipschitz_constant(&Field::zeros(g.clone())).unwrap(), 0.0);
        let v = (0..g.len()).map(|f| -2.0 * g.point(f)[0]).collect();
        let u = Field::new(g, v).unwrap();
        assert!((lipschitz_constant(&u).unwrap() - 2.0).abs() < 1e-12);
    }
}

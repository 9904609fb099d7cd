//! Uniform grids: the radial interval [0, r_max] and the centred N-dimensional box.

use crate::error::{Error, Result};

pub trait Grid: Clone + PartialEq + std::fmt::Debug + Send + Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn spacing(&self) -> f64;

    /// Largest |v[i] - v[j]| over axis-adjacent node pairs.
    fn max_adjacent_diff(&self, v: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    r_max: f64,
    n: usize,
}

impl RadialGrid {
    pub const MIN_CELLS: usize = 16;

    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::Parameter(format!("r_max must be positive, got {r_max}")));
        }
        if n < Self::MIN_CELLS {
            return Err(Error::Parameter(format!(
                "radial grid needs at least {} cells, got {n}",
                Self::MIN_CELLS
            )));
        }
        Ok(Self { r_max, n })
    }

    /// Grid on [0, r_max] whose spacing is `h`; `r_max / h` must be an integer.
    pub fn with_spacing(r_max: f64, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Parameter(format!("spacing must be positive, got {h}")));
        }
        let cells = (r_max / h).round();
        if (cells * h - r_max).abs() > 1e-9 * r_max {
            return Err(Error::Parameter(format!(
                "r_max={r_max} is not a multiple of h={h}"
            )));
        }
        Self::new(r_max, cells as usize)
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn cells(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.r_max / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.r_max * i as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.node(i)).collect()
    }

    /// Index of the node at `r`, if `r` is a node up to rounding.
    pub fn index_of(&self, r: f64) -> Option<usize> {
        let x = r / self.h();
        let i = x.round();
        if i < 0.0 || i > self.n as f64 || (x - i).abs() > 1e-9 {
            return None;
        }
        Some(i as usize)
    }

    /// Nearest node index to `r`, clamped into the grid.
    pub fn nearest(&self, r: f64) -> usize {
        ((r / self.h()).round().max(0.0) as usize).min(self.n)
    }
}

impl Grid for RadialGrid {
    fn len(&self) -> usize {
        self.n + 1
    }

    fn spacing(&self) -> f64 {
        self.h()
    }

    fn max_adjacent_diff(&self, v: &[f64]) -> f64 {
        v.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
    }
}

/// Box [-half_width, half_width]^dim with `m` nodes per axis.
/// Node coordinates are `(i - (m-1)/2) * h`, so the grid is symmetric about the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGrid {
    dim: usize,
    half_width: f64,
    m: usize,
    strides: Vec<usize>,
}

impl BoxGrid {
    pub fn new(dim: usize, half_width: f64, m: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Parameter(format!("box dimension must be >= 2, got {dim}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Parameter(format!(
                "half_width must be positive, got {half_width}"
            )));
        }
        if m < 5 {
            return Err(Error::Parameter(format!("need at least 5 nodes per axis, got {m}")));
        }
        let total = (m as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
        if total > 1 << 28 {
            return Err(Error::Parameter(format!("{m}^{dim} nodes is too many")));
        }
        let mut strides = vec![1usize; dim];
        for k in (0..dim - 1).rev() {
            strides[k] = strides[k + 1] * m;
        }
        Ok(Self { dim, half_width, m, strides })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.m - 1) as f64
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.m - 1) as f64 / 2.0) * self.h()
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi(&self, flat: usize, out: &mut [usize]) {
        let mut rest = flat;
        for k in 0..self.dim {
            out[k] = rest / self.strides[k];
            rest %= self.strides[k];
        }
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.dim];
        self.multi(flat, &mut idx);
        idx.iter().map(|&i| self.coord(i)).collect()
    }

    /// |x| at every node, summed in axis order.
    pub fn radii(&self) -> Vec<f64> {
        let mut idx = vec![0; self.dim];
        (0..self.len())
            .map(|f| {
                self.multi(f, &mut idx);
                idx.iter().map(|&i| self.coord(i) * self.coord(i)).sum::<f64>().sqrt()
            })
            .collect()
    }

    pub fn is_edge(&self, flat: usize) -> bool {
        let mut rest = flat;
        for k in 0..self.dim {
            let i = rest / self.strides[k];
            rest %= self.strides[k];
            if i == 0 || i == self.m - 1 {
                return true;
            }
        }
        false
    }
}

impl Grid for BoxGrid {
    fn len(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    fn spacing(&self) -> f64 {
        self.h()
    }

    fn max_adjacent_diff(&self, v: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        let mut idx = vec![0; self.dim];
        for f in 0..v.len() {
            self.multi(f, &mut idx);
            for k in 0..self.dim {
                if idx[k] + 1 < self.m {
                    worst = worst.max((v[f + self.strides[k]] - v[f]).abs());
                }
            }
        }
        worst
    }
}

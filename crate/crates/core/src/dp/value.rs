use crate::error::{Error, Result};

/// A value function stored on a strictly increasing surplus grid.
///
/// Off-grid points are linearly interpolated; beyond the grid the function is
/// continued linearly with the stored edge slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
    slope_left: f64,
    slope_right: f64,
}

impl ValueFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, slope_left: f64, slope_right: f64) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::GridMismatch);
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::validation("grid", "grid must be strictly increasing"));
        }
        Ok(Self {
            grid,
            values,
            slope_left,
            slope_right,
        })
    }

    /// The zero function, used as terminal value and as iteration start.
    pub fn zero(grid: &[f64]) -> Self {
        Self {
            grid: grid.to_vec(),
            values: vec![0.0; grid.len()],
            slope_left: 0.0,
            slope_right: 0.0,
        }
    }

    /// Samples `f` on the grid.
    pub fn from_fn(grid: &[f64], f: impl Fn(f64) -> f64, slope_left: f64, slope_right: f64) -> Self {
        Self {
            grid: grid.to_vec(),
            values: grid.iter().map(|&x| f(x)).collect(),
            slope_left,
            slope_right,
        }
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> (f64, f64) {
        (self.slope_left, self.slope_right)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let g = &self.grid;
        let n = g.len();
        if x <= g[0] {
            return self.values[0] + self.slope_left * (x - g[0]);
        }
        if x >= g[n - 1] {
            return self.values[n - 1] + self.slope_right * (x - g[n - 1]);
        }
        let j = g.partition_point(|&t| t <= x) - 1;
        let w = (x - g[j]) / (g[j + 1] - g[j]);
        self.values[j] + w * (self.values[j + 1] - self.values[j])
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.grid == other.grid
    }

    /// Index of the largest grid point `<= x`.
    pub fn index_below(grid: &[f64], x: f64) -> Option<usize> {
        grid.partition_point(|&t| t <= x).checked_sub(1)
    }

    /// Least-squares slope of the grid values.
    pub fn fitted_slope(&self) -> f64 {
        let n = self.grid.len() as f64;
        let mx = self.grid.iter().sum::<f64>() / n;
        let my = self.values.iter().sum::<f64>() / n;
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        for (&x, &y) in self.grid.iter().zip(&self.values) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
        }
        sxy / sxx
    }
}

/// `count` equally spaced points on `[min, max]`.
pub fn uniform_grid(min: f64, max: f64, count: usize) -> Vec<f64> {
    let step = (max - min) / (count - 1) as f64;
    (0..count)
        .map(|i| if i + 1 == count { max } else { min + step * i as f64 })
        .collect()
}

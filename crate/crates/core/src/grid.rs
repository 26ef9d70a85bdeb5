//! Partitions of `[0, T]` and functions sampled on them.

use crate::error::{domain, Result};

/// Default resolution: `2¹¹` intervals.
pub const DEFAULT_INTERVALS: usize = 1 << 11;

/// A partition `0 = t_0 < t_1 < … < t_N = T` (with `T = 1` unless a longer
/// horizon is requested).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    times: Vec<f64>,
    uniform: bool,
}

impl GridSpec {
    /// Uniform partition of `[0, 1]` into `n_intervals` cells.
    pub fn uniform(n_intervals: usize) -> Result<Self> {
        Self::uniform_on(n_intervals, 1.0)
    }

    /// Uniform partition of `[0, horizon]`.
    pub fn uniform_on(n_intervals: usize, horizon: f64) -> Result<Self> {
        if n_intervals < 2 {
            return domain(format!(
                "a grid needs at least 2 intervals, got {n_intervals}"
            ));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return domain(format!("grid horizon must be positive, got {horizon}"));
        }
        let h = horizon / n_intervals as f64;
        let mut times: Vec<f64> = (0..=n_intervals).map(|i| i as f64 * h).collect();
        times[n_intervals] = horizon;
        Ok(Self {
            times,
            uniform: true,
        })
    }

    /// Arbitrary partition; must start at 0 and be strictly increasing.
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.len() < 3 {
            return domain("a grid needs at least 2 intervals");
        }
        if times[0] != 0.0 {
            return domain(format!("grid must start at 0, got {}", times[0]));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return domain("grid times must be finite and strictly increasing");
        }
        let n = times.len() - 1;
        let h = times[n] / n as f64;
        let uniform = times
            .iter()
            .enumerate()
            .all(|(i, t)| (t - i as f64 * h).abs() <= 1e-12 * times[n]);
        Ok(Self { times, uniform })
    }

    pub fn n_intervals(&self) -> usize {
        self.times.len() - 1
    }

    pub fn n_points(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Common cell width of a uniform grid.
    pub fn step(&self) -> Option<f64> {
        self.uniform
            .then(|| self.horizon() / self.n_intervals() as f64)
    }

    pub fn cell(&self, i: usize) -> (f64, f64) {
        (self.times[i], self.times[i + 1])
    }

    pub fn widths(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Index of the first node `t_k >= t` (clamped to the last node).
    pub fn node_at_or_after(&self, t: f64) -> usize {
        self.times
            .partition_point(|&x| x < t - 1e-12 * self.horizon())
            .min(self.n_intervals())
    }

    /// Index of the node closest to `t`.
    pub fn nearest_node(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&x| x < t);
        if k == 0 {
            0
        } else if k > self.n_intervals() {
            self.n_intervals()
        } else if (self.times[k] - t) < (t - self.times[k - 1]) {
            k
        } else {
            k - 1
        }
    }
}

/// A function on a grid given cell by cell as its values at the two ends of
/// each cell, linear in between. Continuous functions have matching values
/// across nodes; step functions have `left == right` on every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFunction {
    grid: GridSpec,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl CellFunction {
    /// Continuous piecewise-linear interpolant of node values.
    pub fn from_nodes(grid: &GridSpec, values: &[f64]) -> Result<Self> {
        if values.len() != grid.n_points() {
            return domain(format!(
                "expected {} node values, got {}",
                grid.n_points(),
                values.len()
            ));
        }
        Ok(Self {
            grid: grid.clone(),
            left: values[..values.len() - 1].to_vec(),
            right: values[1..].to_vec(),
        })
    }

    /// Piecewise-linear interpolant of `f` sampled at the nodes.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = grid.times().iter().map(|&t| f(t)).collect();
        Self::from_nodes(grid, &values).expect("length matches by construction")
    }

    /// Piecewise-constant function with one value per cell.
    pub fn step(grid: &GridSpec, cell_values: &[f64]) -> Result<Self> {
        if cell_values.len() != grid.n_intervals() {
            return domain(format!(
                "expected {} cell values, got {}",
                grid.n_intervals(),
                cell_values.len()
            ));
        }
        Ok(Self {
            grid: grid.clone(),
            left: cell_values.to_vec(),
            right: cell_values.to_vec(),
        })
    }

    /// `1_{[0, a]}` with `a` snapped to the partition (cells whose midpoint
    /// lies below `a`).
    pub fn indicator(grid: &GridSpec, a: f64) -> Self {
        let vals: Vec<f64> = grid
            .midpoints()
            .iter()
            .map(|&m| if m < a { 1.0 } else { 0.0 })
            .collect();
        Self::step(grid, &vals).expect("length matches by construction")
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn right(&self) -> &[f64] {
        &self.right
    }

    /// Cell averages of the linear reconstruction.
    pub fn cell_means(&self) -> Vec<f64> {
        self.left
            .iter()
            .zip(&self.right)
            .map(|(l, r)| 0.5 * (l + r))
            .collect()
    }

    /// Value at `t`, taking the right-continuous branch at nodes.
    pub fn eval(&self, t: f64) -> f64 {
        let times = self.grid.times();
        let n = self.grid.n_intervals();
        let i = times
            .partition_point(|&x| x <= t)
            .saturating_sub(1)
            .min(n - 1);
        let (a, b) = self.grid.cell(i);
        let w = ((t - a) / (b - a)).clamp(0.0, 1.0);
        self.left[i] + w * (self.right[i] - self.left[i])
    }

    /// Node indices where the function jumps (left limit differs from the
    /// right limit).
    pub fn jump_nodes(&self) -> Vec<usize> {
        (1..self.grid.n_intervals())
            .filter(|&k| {
                let (l, r) = (self.right[k - 1], self.left[k]);
                (l - r).abs() > 1e-14 * (1.0 + l.abs().max(r.abs()))
            })
            .collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            left: self.left.iter().map(|v| c * v).collect(),
            right: self.right.iter().map(|v| c * v).collect(),
        }
    }
}

//! Scalar time series and spatial profiles on uniform grids.

use serde::{Deserialize, Serialize};

/// A scalar time series sampled at `t_k = start + k * step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl Trace {
    pub fn new(start: f64, step: f64, values: Vec<f64>) -> Self {
        Trace { start, step, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    /// `(t_k, value_k)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(|(k, &v)| (self.time(k), v))
    }

    /// Index of the sample at time `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let pos = (t - self.start) / self.step;
        let k = pos.round();
        if (pos - k).abs() > 1e-6 || k < 0.0 || k as usize >= self.values.len() {
            None
        } else {
            Some(k as usize)
        }
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// A spatial profile `y[t]` (or `x[t]`) sampled at `z_j = j/N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateProfile {
    pub t: f64,
    pub values: Vec<f64>,
}

impl StateProfile {
    pub fn new(t: f64, values: Vec<f64>) -> Self {
        StateProfile { t, values }
    }

    /// Number of intervals `N`.
    pub fn resolution(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &StateProfile) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Grid index of time `t` on a grid of `n` steps per unit, if on the grid.
pub(crate) fn grid_index(t: f64, n: usize) -> Option<i64> {
    let pos = t * n as f64;
    let k = pos.round();
    ((pos - k).abs() <= 1e-6).then_some(k as i64)
}

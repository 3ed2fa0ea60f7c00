use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODULE: &str = "ide_sim";

/// A discontinuity of `v` at a grid node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    /// Grid index of the jump time.
    pub index: i64,
    pub t: f64,
    pub left_limit: f64,
    pub right_value: f64,
}

/// Sliding window of `v` over `[t - 1, t]` on the grid `Δ = 1/N`.
///
/// Node values are right limits. Jumps inside `(t - 1, t]` keep their left
/// limits so quadrature can split intervals at the discontinuity: a node
/// adjacent to a jump contributes its left limit to the interval on its left
/// and its right value to the interval on its right.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryBuffer {
    n: usize,
    // Oldest first: values[m] is v at index now - N + m.
    values: VecDeque<f64>,
    jumps: VecDeque<Jump>,
    now: i64,
}

impl HistoryBuffer {
    /// A buffer ending at grid index `now`, from `N + 1` values, oldest first.
    pub fn new(values: Vec<f64>, now: i64) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::input(MODULE, "history needs at least 3 nodes"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input(MODULE, "history values must be finite"));
        }
        Ok(HistoryBuffer {
            n: values.len() - 1,
            values: values.into(),
            jumps: VecDeque::new(),
            now,
        })
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn now_index(&self) -> i64 {
        self.now
    }

    pub fn t_now(&self) -> f64 {
        self.now as f64 / self.n as f64
    }

    /// Right value of `v(t_now - m Δ)`.
    pub fn at_lag(&self, lag: usize) -> f64 {
        self.values[self.n - lag]
    }

    pub fn current(&self) -> f64 {
        self.at_lag(0)
    }

    /// Window values, oldest first.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }

    pub fn jumps(&self) -> impl Iterator<Item = &Jump> {
        self.jumps.iter()
    }

    pub fn sup_abs(&self) -> f64 {
        let nodes = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        self.jumps
            .iter()
            .fold(nodes, |m, j| m.max(j.left_limit.abs()))
    }

    /// `∫₀¹ kernel(s) v(t_now - s) ds` over the window, `kernel` sampled at `s_m = m/N`.
    ///
    /// The `s = 0` endpoint sees `v(t_now⁻)`, the left limit.
    pub fn window_integral(&self, kernel: &[f64]) -> f64 {
        debug_assert_eq!(kernel.len(), self.n + 1);
        let h = self.step();
        let n = self.n;
        let mut sum = 0.5 * (kernel[0] * self.at_lag(0) + kernel[n] * self.at_lag(n));
        for m in 1..n {
            sum += kernel[m] * self.at_lag(m);
        }
        let mut sum = h * sum;
        for jump in &self.jumps {
            let lag = (self.now - jump.index) as usize;
            let delta = jump.left_limit - jump.right_value;
            if lag < n {
                // Endpoint: half weight, left limit only. Interior: split node.
                sum += 0.5 * h * kernel[lag] * delta;
            }
        }
        sum
    }

    /// `Σ_{m=1}^{N} w_m kernel_m v(t_now + Δ - s_m)`: the trapezoid sum for the
    /// next node without its own `s = 0` term.
    pub fn tail_integral(&self, kernel: &[f64]) -> f64 {
        debug_assert_eq!(kernel.len(), self.n + 1);
        let h = self.step();
        let n = self.n;
        // Next lag m reads old lag m - 1.
        let mut sum = 0.5 * kernel[n] * self.at_lag(n - 1);
        for m in 1..n {
            sum += kernel[m] * self.at_lag(m - 1);
        }
        let mut sum = h * sum;
        for jump in &self.jumps {
            let lag = (self.now + 1 - jump.index) as usize;
            if lag < n {
                sum += 0.5 * h * kernel[lag] * (jump.left_limit - jump.right_value);
            }
        }
        sum
    }

    /// Appends the value at `now + 1` and drops the oldest node.
    pub fn push(&mut self, value: f64) {
        self.values.pop_front();
        self.values.push_back(value);
        self.now += 1;
        let oldest = self.now - self.n as i64;
        while self.jumps.front().is_some_and(|j| j.index <= oldest) {
            self.jumps.pop_front();
        }
    }

    /// Replaces the current node by `right_value`, recording a jump whose left
    /// limit is the value stored so far. Returns the jump if one occurred.
    pub fn apply_jump(&mut self, right_value: f64) -> Option<Jump> {
        let left = self.current();
        let last = self.values.len() - 1;
        self.values[last] = right_value;
        if left == right_value {
            return None;
        }
        let jump = Jump {
            index: self.now,
            t: self.t_now(),
            left_limit: left,
            right_value,
        };
        self.jumps.push_back(jump);
        Some(jump)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_integral_of_constants() {
        let buf = HistoryBuffer::new(vec![2.0; 11], 0).unwrap();
        let kernel = vec![1.5; 11];
        assert!((buf.window_integral(&kernel) - 3.0).abs() < 1e-14);
        // Tail omits the half-weighted s = 0 node.
        assert!((buf.tail_integral(&kernel) - 3.0 * (1.0 - 0.05)).abs() < 1e-14);
    }

    #[test]
    fn jump_splits_the_node() {
        // v = 1 on [t-1, t), jumping to 0 at t.
        let mut buf = HistoryBuffer::new(vec![1.0; 11], 0).unwrap();
        let jump = buf.apply_jump(0.0).unwrap();
        assert_eq!(jump.left_limit, 1.0);
        let kernel = vec![1.0; 11];
        // The integral only sees the left limit at s = 0.
        assert!((buf.window_integral(&kernel) - 1.0).abs() < 1e-14);
        // One step later the jump sits at lag 1: the interval (t, t+Δ) is 0.
        buf.push(0.0);
        assert!((buf.window_integral(&kernel) - 0.9).abs() < 1e-14);
        assert_eq!(buf.jumps().count(), 1);
        for _ in 0..10 {
            buf.push(0.0);
        }
        assert_eq!(buf.jumps().count(), 0);
        assert_eq!(buf.window_integral(&kernel), 0.0);
    }

    #[test]
    fn no_jump_when_value_unchanged() {
        let mut buf = HistoryBuffer::new(vec![0.0; 5], 3).unwrap();
        assert!(buf.apply_jump(0.0).is_none());
        assert_eq!(buf.t_now(), 0.75);
    }

    #[test]
    fn rejects_nonfinite() {
        assert!(HistoryBuffer::new(vec![0.0, f64::NAN, 1.0], 0).is_err());
    }
}

//! Sampling schedules for the zero-order hold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::grid_index;

const MODULE: &str = "ide_sim";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `τ_i = i T`.
    Periodic,
    /// Gaps drawn uniformly from `[T/2, T]`.
    Jittered,
}

/// Increasing sample times `τ_0 = 0 < τ_1 < ...` with gaps bounded by `sup_gap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSchedule {
    times: Vec<f64>,
    sup_gap: f64,
}

impl SamplingSchedule {
    pub fn new(times: Vec<f64>, sup_gap: f64) -> Result<Self> {
        if !(sup_gap > 0.0) {
            return Err(Error::input(MODULE, "sup_gap must be positive"));
        }
        if times.first() != Some(&0.0) {
            return Err(Error::input(MODULE, "schedule must start at 0"));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::input(MODULE, "schedule times must be strictly increasing"));
            }
            if w[1] - w[0] > sup_gap * (1.0 + 1e-12) {
                return Err(Error::input(
                    MODULE,
                    format!("gap {} exceeds sup_gap {sup_gap}", w[1] - w[0]),
                ));
            }
        }
        Ok(SamplingSchedule { times, sup_gap })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sup_gap(&self) -> f64 {
        self.sup_gap
    }

    pub fn max_gap(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Grid indices of the sample times up to `horizon` on a grid with `n`
    /// steps per unit; fails if any of them is off the grid or if the
    /// schedule leaves a gap longer than `sup_gap` before `horizon`.
    pub fn grid_indices(&self, n: usize, horizon: f64) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for &t in self.times.iter().take_while(|&&t| t <= horizon + 1e-12) {
            let k = grid_index(t, n).ok_or_else(|| {
                Error::input(MODULE, format!("sample time {t} is not on the 1/{n} grid"))
            })?;
            out.push(k as usize);
        }
        let last = self.times[out.len() - 1];
        if horizon - last > self.sup_gap * (1.0 + 1e-12) {
            return Err(Error::input(
                MODULE,
                format!("schedule ends at {last}, does not cover horizon {horizon}"),
            ));
        }
        Ok(out)
    }
}

/// Builds a schedule on the grid of `n` steps per unit covering `[0, horizon]`.
///
/// Gaps are rounded down to whole grid steps so the snapped schedule still
/// satisfies `gap ≤ T`.
pub fn make_schedule(
    kind: ScheduleKind,
    sup_gap: f64,
    horizon: f64,
    seed: u64,
    n: usize,
) -> Result<SamplingSchedule> {
    if !(sup_gap > 0.0) || !(horizon >= 0.0) {
        return Err(Error::input(MODULE, "T must be positive and horizon nonnegative"));
    }
    let dt = 1.0 / n as f64;
    if sup_gap < 2.0 * dt {
        return Err(Error::input(
            MODULE,
            format!("T = {sup_gap} is below two grid steps ({})", 2.0 * dt),
        ));
    }
    let to_steps = |gap: f64| ((gap * n as f64 + 1e-9).floor() as usize).max(1);
    let end = (horizon * n as f64 - 1e-9).ceil().max(0.0) as usize;
    let mut steps = vec![0usize];
    match kind {
        ScheduleKind::Periodic => {
            let period = to_steps(sup_gap);
            while *steps.last().unwrap() < end {
                steps.push(steps.last().unwrap() + period);
            }
        }
        ScheduleKind::Jittered => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            while *steps.last().unwrap() < end {
                let gap = rng.gen_range(0.5 * sup_gap..=sup_gap);
                steps.push(steps.last().unwrap() + to_steps(gap));
            }
        }
    }
    let times = steps.into_iter().map(|k| k as f64 * dt).collect();
    SamplingSchedule::new(times, sup_gap)
}

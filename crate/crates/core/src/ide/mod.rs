//! Closed-loop simulation through the integral delay equation
//!
//! ```text
//! v(t) = u_i - ∫₀¹ k̃(s) v(t - s) ds,   u_i = ∫₀¹ k̃(s) v(τ_i - s) ds,   t ∈ [τ_i, τ_{i+1})
//! ```
//!
//! satisfied by the boundary value `v(t) = x(t, 0)` of the transformed state,
//! plus the maps between the plant state `y` and the target state `x`.
//!
//! Time is discretized on the grid `Δ = 1/N` so that the unit delay is exactly
//! `N` steps. The trapezoid rule applied to the delay integral contains the
//! unknown `v(t)` at its `s = 0` endpoint; each step solves that scalar linear
//! equation exactly.

mod history;

use std::collections::BTreeMap;

pub use history::{HistoryBuffer, Jump};

use crate::error::{Error, Result};
use crate::function::FunctionSpec;
use crate::kernels::{GainProfile, TriangularKernel};
use crate::quad;
use crate::schedule::SamplingSchedule;
use crate::trace::{grid_index, StateProfile, Trace};

const MODULE: &str = "ide_sim";

fn check_resolution(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::input(
            MODULE,
            format!("{what} resolution {got} does not match {want}"),
        ));
    }
    Ok(())
}

/// `x(z) = y(z) - ∫_z^1 k(z,s) y(s) ds`.
pub fn forward_transform(y: &StateProfile, k: &TriangularKernel) -> Result<StateProfile> {
    volterra(y, k, -1.0)
}

/// `y(z) = x(z) + ∫_z^1 l(z,s) x(s) ds`.
pub fn inverse_transform(x: &StateProfile, l: &TriangularKernel) -> Result<StateProfile> {
    volterra(x, l, 1.0)
}

fn volterra(prof: &StateProfile, kernel: &TriangularKernel, sign: f64) -> Result<StateProfile> {
    let n = kernel.resolution();
    check_resolution("profile", prof.resolution(), n)?;
    let h = kernel.step();
    let values = (0..=n)
        .map(|j| prof.values[j] + sign * quad::trapezoid_product(kernel.row(j), &prof.values[j..], h))
        .collect();
    Ok(StateProfile::new(prof.t, values))
}

/// Initial history `v₀(-z) = y₀(z) - ∫_z^1 k(z,s) y₀(s) ds` on `[-1, 0]`.
///
/// The node at `t = 0` holds the limit `v₀(0⁻)`; the first sample turns it
/// into a left limit.
pub fn history_from_initial(y0: &FunctionSpec, k: &TriangularKernel) -> Result<HistoryBuffer> {
    let n = k.resolution();
    let y = StateProfile::new(0.0, y0.sample_1d(n)?);
    let x = forward_transform(&y, k)?;
    HistoryBuffer::new(x.values.into_iter().rev().collect(), 0)
}

/// Held input `u_i = ∫₀¹ k̃(s) v(τ_i - s) ds` at the buffer's current time.
pub fn zoh_input(gain: &GainProfile, history: &HistoryBuffer) -> Result<f64> {
    check_resolution("history", history.resolution(), gain.resolution())?;
    Ok(history.window_integral(gain.ktilde()))
}

/// Advances the buffer one node by the implicit trapezoid discretization of
/// the delay equation with input `u` held.
pub fn ide_step(gain: &GainProfile, history: &mut HistoryBuffer, u: f64) -> Result<f64> {
    check_resolution("history", history.resolution(), gain.resolution())?;
    let k = gain.ktilde();
    let pivot = 1.0 + 0.5 * history.step() * k[0];
    if pivot.abs() < 1e-12 {
        return Err(Error::numerical(
            MODULE,
            format!("degenerate pivot {pivot:e}; refine the time grid"),
        ));
    }
    let v = (u - history.tail_integral(k)) / pivot;
    if !v.is_finite() {
        return Err(Error::numerical(MODULE, "delay equation produced a non-finite value"));
    }
    history.push(v);
    Ok(v)
}

/// Right derivative `-k̃(0) v(t) + k̃(1) v(t-1) - ∫₀¹ k̃'(s) v(t-s) ds` at the buffer's time.
fn ode_rhs(gain: &GainProfile, history: &HistoryBuffer) -> f64 {
    let k = gain.ktilde();
    let n = gain.resolution();
    -k[0] * history.current() + k[n] * history.at_lag(n) - history.window_integral(gain.dktilde())
}

/// One Heun step of the differential form of the delay equation.
///
/// Cross-check integrator only; [`solve_ide`] never uses it.
pub fn ode_form_step(gain: &GainProfile, history: &mut HistoryBuffer) -> Result<f64> {
    check_resolution("history", history.resolution(), gain.resolution())?;
    let k = gain.ktilde();
    let dk = gain.dktilde();
    let n = gain.resolution();
    let h = history.step();
    let v = history.current();
    let slope = ode_rhs(gain, history);
    let predicted = v + h * slope;
    let slope_next = -k[0] * predicted + k[n] * history.at_lag(n - 1)
        - (0.5 * h * dk[0] * predicted + history.tail_integral(dk));
    let next = v + 0.5 * h * (slope + slope_next);
    if !next.is_finite() {
        return Err(Error::numerical(MODULE, "ODE-form step produced a non-finite value"));
    }
    history.push(next);
    Ok(next)
}

/// A completed closed-loop run of the delay equation.
#[derive(Debug, Clone)]
pub struct IdeRun {
    n: usize,
    /// `v` at indices `-N..=0`; the last entry is `v₀(0⁻)`.
    history: Vec<f64>,
    /// Right values of `v` at `t = 0, Δ, ..., horizon`.
    pub v_trace: Trace,
    /// Held input, right-continuous.
    pub u_trace: Trace,
    pub jumps: Vec<Jump>,
    /// The schedule restricted to the horizon (snapped to the grid).
    pub schedule: SamplingSchedule,
    pub gain: GainProfile,
    left_limits: BTreeMap<i64, f64>,
}

impl IdeRun {
    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.v_trace.time(self.v_trace.len() - 1)
    }

    /// `sup_{-1 ≤ s < 0} |v₀(s)|`.
    pub fn initial_sup(&self) -> f64 {
        self.history.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// The initial history `v₀` at indices `-N..=0`.
    pub fn initial_history(&self) -> &[f64] {
        &self.history
    }

    /// Right value of `v` at grid index `idx ≥ -N`.
    pub fn v_at(&self, idx: i64) -> f64 {
        if idx >= 0 {
            self.v_trace.values[idx as usize]
        } else {
            self.history[(idx + self.n as i64) as usize]
        }
    }

    /// Left limit of `v` at grid index `idx`.
    pub fn v_left(&self, idx: i64) -> f64 {
        self.left_limits
            .get(&idx)
            .copied()
            .unwrap_or_else(|| self.v_at(idx))
    }
}

struct Sampling {
    indices: Vec<usize>,
    end: usize,
}

fn sampling(schedule: &SamplingSchedule, n: usize, horizon: f64) -> Result<Sampling> {
    if !(horizon > 0.0) {
        return Err(Error::input(MODULE, "horizon must be positive"));
    }
    let end = grid_index(horizon, n)
        .ok_or_else(|| Error::input(MODULE, format!("horizon {horizon} is not on the 1/{n} grid")))?
        as usize;
    let indices = schedule.grid_indices(n, horizon)?;
    Ok(Sampling { indices, end })
}

/// Solves the sampled-data delay equation on `[0, horizon]`.
///
/// At each sample time the buffer first reaches `τ_i` with the previous input
/// (the left limit), then the input is refreshed and `v(τ_i)` is recomputed
/// with it; by construction of the held input this right value is zero.
pub fn solve_ide(
    gain: &GainProfile,
    schedule: &SamplingSchedule,
    history0: &HistoryBuffer,
    horizon: f64,
) -> Result<IdeRun> {
    let n = gain.resolution();
    check_resolution("history", history0.resolution(), n)?;
    if history0.now_index() != 0 {
        return Err(Error::input(MODULE, "initial history must end at t = 0"));
    }
    let plan = sampling(schedule, n, horizon)?;
    let mut history = history0.clone();
    let initial: Vec<f64> = history.values().collect();

    let mut v = Vec::with_capacity(plan.end + 1);
    let mut u_values = Vec::with_capacity(plan.end + 1);
    let mut jumps = Vec::new();
    let mut u = 0.0;
    let mut next_sample = plan.indices.iter().peekable();
    for idx in 0..=plan.end {
        if idx > 0 {
            ide_step(gain, &mut history, u)?;
        }
        if next_sample.next_if_eq(&&idx).is_some() {
            u = zoh_input(gain, &history)?;
            let right = u - history.window_integral(gain.ktilde());
            jumps.extend(history.apply_jump(right));
        }
        v.push(history.current());
        u_values.push(u);
    }

    let dt = 1.0 / n as f64;
    let times = plan.indices.iter().map(|&k| k as f64 * dt).collect();
    Ok(IdeRun {
        n,
        history: initial,
        v_trace: Trace::new(0.0, dt, v),
        u_trace: Trace::new(0.0, dt, u_values),
        left_limits: jumps.iter().map(|j| (j.index, j.left_limit)).collect(),
        jumps,
        schedule: SamplingSchedule::new(times, schedule.sup_gap())?,
        gain: gain.clone(),
    })
}

/// Integrates the differential form between samples, restarting from
/// `v(τ_i) = 0` at every sample. Returns the `v` trace on `[0, horizon]`.
pub fn solve_ode_form(
    gain: &GainProfile,
    schedule: &SamplingSchedule,
    history0: &HistoryBuffer,
    horizon: f64,
) -> Result<Trace> {
    let n = gain.resolution();
    check_resolution("history", history0.resolution(), n)?;
    let plan = sampling(schedule, n, horizon)?;
    let mut history = history0.clone();
    let mut v = Vec::with_capacity(plan.end + 1);
    let mut next_sample = plan.indices.iter().peekable();
    for idx in 0..=plan.end {
        if idx > 0 {
            ode_form_step(gain, &mut history)?;
        }
        if next_sample.next_if_eq(&&idx).is_some() {
            history.apply_jump(0.0);
        }
        v.push(history.current());
    }
    Ok(Trace::new(0.0, 1.0 / n as f64, v))
}

/// Plant profile `y(t, z) = v(t - z) + ∫_z^1 l(z,s) v(t - s) ds` at grid time `t`.
pub fn reconstruct_y(run: &IdeRun, l: &TriangularKernel, t: f64) -> Result<StateProfile> {
    let n = run.n;
    check_resolution("kernel", l.resolution(), n)?;
    let idx = grid_index(t, n)
        .filter(|&k| k >= 0 && (k as usize) < run.v_trace.len())
        .ok_or_else(|| Error::input(MODULE, format!("t = {t} is not a grid time of the run")))?;
    let h = l.step();
    let window: Vec<f64> = (0..=n).map(|m| run.v_at(idx - m as i64)).collect();
    let jumps: Vec<(usize, f64)> = run
        .jumps
        .iter()
        .filter(|j| j.index <= idx && j.index > idx - n as i64)
        .map(|j| ((idx - j.index) as usize, j.left_limit - j.right_value))
        .collect();
    let values = (0..=n)
        .map(|j| {
            let row = l.row(j);
            let mut integral = quad::trapezoid_product(row, &window[j..], h);
            for &(lag, delta) in &jumps {
                // The s = z endpoint sees v((t - z)⁻); interior nodes are split.
                if lag >= j && lag < n {
                    integral += 0.5 * h * row[lag - j] * delta;
                }
            }
            window[j] + integral
        })
        .collect();
    Ok(StateProfile::new(t, values))
}

/// Mild solution of the transport equation `x_t + x_z = 0`, `x(t,0) = v(t)`:
/// `x(t,z) = v(t - z)` for `t ≥ z` and `x₀(z - t)` otherwise.
pub fn transport_mild(x0: &StateProfile, v_trace: &Trace, t: f64) -> Result<StateProfile> {
    let n = x0.resolution();
    if (v_trace.step * n as f64 - 1.0).abs() > 1e-9 || v_trace.start != 0.0 {
        return Err(Error::input(MODULE, "trace must start at 0 with step 1/N"));
    }
    if t < 0.0 {
        return Err(Error::input(MODULE, "t must be nonnegative"));
    }
    let idx = grid_index(t, n)
        .ok_or_else(|| Error::input(MODULE, format!("t = {t} is not on the grid")))?
        as usize;
    let values = (0..=n)
        .map(|j| {
            if idx >= j {
                v_trace.values.get(idx - j).copied().ok_or_else(|| {
                    Error::input(MODULE, format!("trace too short for t = {t}"))
                })
            } else {
                Ok(x0.values[j - idx])
            }
        })
        .collect::<Result<_>>()?;
    Ok(StateProfile::new(t, values))
}

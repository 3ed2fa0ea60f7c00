//! Brute-force simulation of the closed-loop plant
//!
//! ```text
//! y_t + y_z = g(z) y(t,1) + ∫_z^1 f(z,s) y(t,s) ds,   y(t,0) = u(t) - ∫₀¹ p(s) y(t,s) ds,
//! ```
//!
//! on the grid `Δt = Δz = 1/N`. With unit transport speed the characteristics
//! pass exactly through grid nodes, so advection is exact and only the source
//! and boundary quadratures introduce error. The source is integrated along
//! each characteristic with Heun's method.

use crate::error::{Error, Result};
use crate::function::{FunctionSpec, ProblemData};
use crate::kernels::TriangularKernel;
use crate::quad;
use crate::schedule::SamplingSchedule;
use crate::trace::{grid_index, StateProfile, Trace};

const MODULE: &str = "fd_oracle";

/// Smallest resolution accepted by [`simulate_fd`].
pub const MIN_RESOLUTION: usize = 50;

/// How the boundary input is produced.
#[derive(Debug, Clone, Copy)]
pub enum FdControl<'a> {
    /// `u ≡ 0`.
    OpenLoop,
    /// Sample-and-hold of `u_i = ∫₀¹ (p(s) + k(0,s)) y(τ_i, s) ds`.
    Sampled {
        schedule: &'a SamplingSchedule,
        k: &'a TriangularKernel,
    },
}

/// Output of [`simulate_fd`].
#[derive(Debug, Clone)]
pub struct FdRun {
    n: usize,
    /// Snapshots at the requested times, in request order.
    pub profiles: Vec<StateProfile>,
    /// `‖y[t]‖∞` at every grid time.
    pub supnorm_trace: Trace,
    /// Held input, right-continuous.
    pub u_trace: Trace,
    /// Outlet trace `y(t, 1)`.
    pub y1_trace: Trace,
    /// `x(t,0) = y(t,0) - ∫₀¹ k(0,s) y(t,s) ds`, closed loop only.
    pub v_trace: Option<Trace>,
    /// Grid indices at which the input was refreshed.
    pub sample_indices: Vec<usize>,
}

impl FdRun {
    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn profile_at(&self, t: f64) -> Option<&StateProfile> {
        self.profiles.iter().find(|p| (p.t - t).abs() < 0.5 / self.n as f64)
    }
}

fn controller_weights(p: &[f64], k: &TriangularKernel) -> Vec<f64> {
    p.iter().zip(k.row(0)).map(|(a, b)| a + b).collect()
}

/// `u_i = ∫₀¹ (p(s) + k(0,s)) y(s) ds` by the trapezoid rule.
pub fn controller_u(y: &StateProfile, problem: &ProblemData, k: &TriangularKernel) -> Result<f64> {
    let n = k.resolution();
    if y.resolution() != n {
        return Err(Error::input(
            MODULE,
            format!("profile resolution {} does not match kernel resolution {n}", y.resolution()),
        ));
    }
    let w = controller_weights(&problem.p.sample_1d(n)?, k);
    Ok(quad::trapezoid_product(&w, &y.values, k.step()))
}

/// Sampled plant data at one resolution.
struct Plant {
    n: usize,
    h: f64,
    g: Vec<f64>,
    // Dense (N+1)² samples, row-major in z; None when f ≡ 0.
    f: Option<Vec<f64>>,
    p: Vec<f64>,
    pivot: f64,
}

impl Plant {
    fn new(problem: &ProblemData, n: usize) -> Result<Self> {
        problem.validate()?;
        let h = 1.0 / n as f64;
        let p = problem.p.sample_1d(n)?;
        let pivot = 1.0 + 0.5 * h * p[0];
        if pivot.abs() < 1e-12 {
            return Err(Error::numerical(
                MODULE,
                format!("degenerate boundary pivot {pivot:e}; refine the grid"),
            ));
        }
        Ok(Plant {
            n,
            h,
            g: problem.g.sample_1d(n)?,
            f: if problem.f.is_zero() { None } else { Some(problem.f.sample_2d(n)?) },
            p,
            pivot,
        })
    }

    /// Source `g(z_j) y(1) + ∫_{z_j}^1 f(z_j,s) y(s) ds` for `j ≥ from`.
    fn source(&self, y: &[f64], from: usize, out: &mut [f64]) {
        let n = self.n;
        let outlet = y[n];
        for j in from..=n {
            let mut s = self.g[j] * outlet;
            if let Some(f) = &self.f {
                let row = &f[j * (n + 1) + j..(j + 1) * (n + 1)];
                s += quad::trapezoid_product(row, &y[j..], self.h);
            }
            out[j] = s;
        }
    }

    /// Solves `y(0) = u - ∫₀¹ p y` for `y(0)`; the trapezoid endpoint at
    /// `s = 0` contains `y(0)` itself.
    fn boundary(&self, y: &[f64], u: f64) -> f64 {
        let n = self.n;
        let mut tail = 0.5 * self.p[n] * y[n];
        for m in 1..n {
            tail += self.p[m] * y[m];
        }
        (u - self.h * tail) / self.pivot
    }
}

/// Marches the plant on `[0, horizon]` and records traces and snapshots.
///
/// At a sample time the boundary node is first computed with the previous
/// input, the new input is evaluated on that profile, and the boundary node
/// is then recomputed with it.
pub fn simulate_fd(
    problem: &ProblemData,
    control: FdControl<'_>,
    y0: &FunctionSpec,
    horizon: f64,
    n: usize,
    snapshot_times: &[f64],
) -> Result<FdRun> {
    if n < MIN_RESOLUTION {
        return Err(Error::input(MODULE, format!("resolution must be at least {MIN_RESOLUTION}")));
    }
    if !(horizon > 0.0) {
        return Err(Error::input(MODULE, "horizon must be positive"));
    }
    let end = grid_index(horizon, n)
        .ok_or_else(|| Error::input(MODULE, format!("horizon {horizon} is not on the 1/{n} grid")))?
        as usize;
    let mut snapshots = Vec::with_capacity(snapshot_times.len());
    for &t in snapshot_times {
        match grid_index(t, n) {
            Some(k) if k >= 0 && k as usize <= end => snapshots.push(k as usize),
            _ => {
                return Err(Error::input(
                    MODULE,
                    format!("snapshot time {t} is not a grid time in [0, {horizon}]"),
                ))
            }
        }
    }

    let plant = Plant::new(problem, n)?;
    let (samples, weights, k0) = match control {
        FdControl::OpenLoop => (Vec::new(), None, None),
        FdControl::Sampled { schedule, k } => {
            if k.resolution() != n {
                return Err(Error::input(
                    MODULE,
                    format!("kernel resolution {} does not match {n}", k.resolution()),
                ));
            }
            (
                schedule.grid_indices(n, horizon)?,
                Some(controller_weights(&plant.p, k)),
                Some(k.row(0).to_vec()),
            )
        }
    };

    let h = plant.h;
    let mut y = y0.sample_1d(n)?;
    let mut prev = vec![0.0; n + 1];
    let mut predicted = vec![0.0; n + 1];
    let mut src_old = vec![0.0; n + 1];
    let mut src_new = vec![0.0; n + 1];

    let mut supnorm = Vec::with_capacity(end + 1);
    let mut u_values = Vec::with_capacity(end + 1);
    let mut y1 = Vec::with_capacity(end + 1);
    let mut v = Vec::with_capacity(end + 1);
    let mut profiles: Vec<Option<StateProfile>> = vec![None; snapshots.len()];
    let mut next_sample = samples.iter().peekable();
    let mut u = 0.0;

    for idx in 0..=end {
        if idx > 0 {
            std::mem::swap(&mut y, &mut prev);
            plant.source(&prev, 0, &mut src_old);
            for j in 1..=n {
                predicted[j] = prev[j - 1] + h * src_old[j - 1];
            }
            plant.source(&predicted, 1, &mut src_new);
            for j in 1..=n {
                y[j] = prev[j - 1] + 0.5 * h * (src_old[j - 1] + src_new[j]);
            }
            y[0] = plant.boundary(&y, u);
        } else if samples.first() != Some(&0) {
            // Without a sample at t = 0 the corner node follows the boundary law.
            y[0] = plant.boundary(&y, u);
        }
        if next_sample.next_if_eq(&&idx).is_some() {
            if let Some(w) = &weights {
                u = quad::trapezoid_product(w, &y, h);
                y[0] = plant.boundary(&y, u);
            }
        }
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::numerical(
                MODULE,
                format!("state became non-finite at t = {}", idx as f64 * h),
            ));
        }
        supnorm.push(y.iter().fold(0.0_f64, |m, x| m.max(x.abs())));
        u_values.push(u);
        y1.push(y[n]);
        if let Some(k0) = &k0 {
            v.push(y[0] - quad::trapezoid_product(k0, &y, h));
        }
        for (slot, &at) in profiles.iter_mut().zip(&snapshots) {
            if at == idx {
                *slot = Some(StateProfile::new(idx as f64 * h, y.clone()));
            }
        }
    }

    Ok(FdRun {
        n,
        profiles: profiles.into_iter().map(|p| p.expect("snapshot recorded")).collect(),
        supnorm_trace: Trace::new(0.0, h, supnorm),
        u_trace: Trace::new(0.0, h, u_values),
        y1_trace: Trace::new(0.0, h, y1),
        v_trace: k0.map(|_| Trace::new(0.0, h, v)),
        sample_indices: samples,
    })
}

//! Backstepping kernels on the triangle `0 ≤ z ≤ s ≤ 1` and the reduced gain.
//!
//! The kernel `l` solves
//!
//! ```text
//! l_z + l_s = f(z,s) + ∫_z^s f(z,w) l(w,s) dw,      l(z,1) = -g(z)
//! ```
//!
//! and the kernel `k` solves
//!
//! ```text
//! k_z + k_s = f(z,s) - ∫_z^s k(z,w) f(w,s) dw,      k(z,1) = -g(z) + ∫_z^1 k(z,s) g(s) ds.
//! ```
//!
//! Both are integrated along the characteristics `s - z = const` from the edge
//! `s = 1` downward with the trapezoid rule. The non-local source terms (and the
//! implicit boundary condition of `k`) are resolved by successive
//! approximations over the whole triangle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::ProblemData;
use crate::quad;

const MODULE: &str = "kernels";

/// Default sup-change tolerance of the fixed-point iteration.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default iteration cap of the fixed-point iteration.
pub const DEFAULT_MAX_ITER: usize = 200;

/// A kernel sampled at `(z_i, s_j) = (i/N, j/N)` with `i ≤ j`.
///
/// Storage is a dense row-major `(N+1)²` array indexed `[i * (N+1) + j]`;
/// entries below the diagonal are zero and never read.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularKernel {
    n: usize,
    values: Vec<f64>,
}

impl TriangularKernel {
    pub fn zeros(n: usize) -> Self {
        TriangularKernel {
            n,
            values: vec![0.0; (n + 1) * (n + 1)],
        }
    }

    /// Samples a closed-form kernel on the triangle.
    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut kernel = Self::zeros(n);
        let h = 1.0 / n as f64;
        for i in 0..=n {
            for j in i..=n {
                kernel.set(i, j, f(i as f64 * h, j as f64 * h));
            }
        }
        kernel
    }

    /// Grid resolution (intervals per unit length).
    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i <= j && j <= self.n);
        self.values[i * (self.n + 1) + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * (self.n + 1) + j] = v;
    }

    /// Row `i` restricted to the triangle: values at `s_j` for `j = i..=N`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let start = i * (self.n + 1);
        &self.values[start + i..start + self.n + 1]
    }

    /// Interpolated value at `(z, s)` with `0 ≤ z ≤ s ≤ 1`.
    ///
    /// Cells entirely inside the triangle use bilinear interpolation. Cells cut
    /// by the diagonal use linear interpolation on their upper half, so only
    /// nodes with `z ≤ s` are ever read.
    pub fn eval(&self, z: f64, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&z) || !(0.0..=1.0).contains(&s) || z > s {
            return Err(Error::input(
                MODULE,
                format!("({z}, {s}) is outside the triangle 0 <= z <= s <= 1"),
            ));
        }
        let n = self.n;
        let (pz, ps) = (z * n as f64, s * n as f64);
        let i = (pz.floor() as usize).min(n - 1);
        let j = (ps.floor() as usize).min(n - 1);
        let (fz, fs) = (pz - i as f64, ps - j as f64);
        if i < j {
            Ok((1.0 - fz) * ((1.0 - fs) * self.get(i, j) + fs * self.get(i, j + 1))
                + fz * ((1.0 - fs) * self.get(i + 1, j) + fs * self.get(i + 1, j + 1)))
        } else {
            // Diagonal cell, upper half: vertices (i,i), (i,i+1), (i+1,i+1).
            let fz = fz.min(fs);
            Ok((1.0 - fs) * self.get(i, i)
                + (fs - fz) * self.get(i, i + 1)
                + fz * self.get(i + 1, i + 1))
        }
    }

    /// Largest absolute value on the triangle.
    pub fn sup_norm(&self) -> f64 {
        (0..=self.n)
            .flat_map(|i| self.row(i).iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Sup-distance between two kernels on the same grid.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        same_grid(self, other)?;
        Ok((0..=self.n)
            .flat_map(|i| self.row(i).iter().zip(other.row(i)))
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }
}

fn same_grid(a: &TriangularKernel, b: &TriangularKernel) -> Result<()> {
    if a.n != b.n {
        return Err(Error::input(
            MODULE,
            format!("kernel resolutions differ ({} vs {})", a.n, b.n),
        ));
    }
    Ok(())
}

/// The reduced feedback gain `k̃(s)` with the constants entering the
/// sampling-period bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainProfile {
    n: usize,
    ktilde: Vec<f64>,
    dktilde: Vec<f64>,
    /// `|k̃(1)| + ∫₀¹ |k̃'(s)| ds`.
    pub m: f64,
    /// `k̃(0)`.
    pub a: f64,
}

impl GainProfile {
    /// Builds a gain from samples at `s_j = j/N`, differentiating numerically.
    pub fn from_samples(ktilde: Vec<f64>) -> Result<Self> {
        if ktilde.len() < 3 {
            return Err(Error::input(MODULE, "gain needs at least 3 samples"));
        }
        if ktilde.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(MODULE, "gain samples are not finite"));
        }
        let n = ktilde.len() - 1;
        let h = 1.0 / n as f64;
        let mut dktilde = vec![0.0; n + 1];
        dktilde[0] = (-3.0 * ktilde[0] + 4.0 * ktilde[1] - ktilde[2]) / (2.0 * h);
        dktilde[n] = (3.0 * ktilde[n] - 4.0 * ktilde[n - 1] + ktilde[n - 2]) / (2.0 * h);
        for j in 1..n {
            dktilde[j] = (ktilde[j + 1] - ktilde[j - 1]) / (2.0 * h);
        }
        let abs_d: Vec<f64> = dktilde.iter().map(|d| d.abs()).collect();
        let m = ktilde[n].abs() + quad::trapezoid(&abs_d, h);
        let a = ktilde[0];
        Ok(GainProfile {
            n,
            ktilde,
            dktilde,
            m,
            a,
        })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_samples((0..=n).map(|j| f(j as f64 / n as f64)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_samples(vec![0.0; n + 1]).expect("zero gain is valid")
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    /// `k̃(s_j)` for `j = 0..=N`.
    pub fn ktilde(&self) -> &[f64] {
        &self.ktilde
    }

    /// Finite-difference derivative samples `k̃'(s_j)`.
    pub fn dktilde(&self) -> &[f64] {
        &self.dktilde
    }
}

#[derive(Clone, Copy)]
enum Which {
    K,
    L,
}

struct Sampled {
    n: usize,
    g: Vec<f64>,
    // f on the full grid, None when identically zero.
    f: Option<Vec<f64>>,
}

impl Sampled {
    fn new(problem: &ProblemData, n: usize) -> Result<Self> {
        problem.validate()?;
        let g = problem.g.sample_1d(n)?;
        let f = if problem.f.is_zero() {
            None
        } else {
            Some(problem.f.sample_2d(n)?)
        };
        Ok(Sampled { n, g, f })
    }

    #[inline]
    fn f_at(f: &[f64], n: usize, i: usize, j: usize) -> f64 {
        f[i * (n + 1) + j]
    }
}

/// Source term of the characteristic ODE at every node of the triangle.
fn source(data: &Sampled, kernel: &TriangularKernel, which: Which) -> Option<TriangularKernel> {
    let f = data.f.as_ref()?;
    let n = data.n;
    let h = 1.0 / n as f64;
    let mut out = TriangularKernel::zeros(n);
    let mut buf = Vec::with_capacity(n + 1);
    for i in 0..=n {
        for j in i..=n {
            buf.clear();
            let integral = match which {
                // ∫_z^s f(z,w) l(w,s) dw
                Which::L => {
                    buf.extend((i..=j).map(|w| Sampled::f_at(f, n, i, w) * kernel.get(w, j)));
                    quad::trapezoid(&buf, h)
                }
                // -∫_z^s k(z,w) f(w,s) dw
                Which::K => {
                    buf.extend((i..=j).map(|w| kernel.get(i, w) * Sampled::f_at(f, n, w, j)));
                    -quad::trapezoid(&buf, h)
                }
            };
            out.set(i, j, Sampled::f_at(f, n, i, j) + integral);
        }
    }
    Some(out)
}

/// Boundary values on the edge `s = 1`, indexed by `z_i`.
fn boundary(data: &Sampled, kernel: &TriangularKernel, which: Which) -> Vec<f64> {
    let n = data.n;
    let h = 1.0 / n as f64;
    match which {
        Which::L => data.g.iter().map(|g| -g).collect(),
        Which::K => (0..=n)
            .map(|i| -data.g[i] + quad::trapezoid_product(kernel.row(i), &data.g[i..], h))
            .collect(),
    }
}

/// Integrates along each characteristic from `s = 1` downward.
fn sweep(n: usize, edge: &[f64], src: Option<&TriangularKernel>) -> TriangularKernel {
    let h = 1.0 / n as f64;
    let mut out = TriangularKernel::zeros(n);
    for d in 0..=n {
        let top = n - d;
        let mut value = edge[top];
        out.set(top, n, value);
        for i in (0..top).rev() {
            if let Some(src) = src {
                value -= 0.5 * h * (src.get(i, i + d) + src.get(i + 1, i + 1 + d));
            }
            out.set(i, i + d, value);
        }
    }
    out
}

fn solve(
    problem: &ProblemData,
    n: usize,
    tol: f64,
    max_iter: usize,
    which: Which,
) -> Result<TriangularKernel> {
    if n < 8 {
        return Err(Error::input(MODULE, format!("resolution {n} < 8")));
    }
    if !(tol > 0.0) {
        return Err(Error::input(MODULE, "tolerance must be positive"));
    }
    let data = Sampled::new(problem, n)?;

    // Seed: the edge data -g carried unchanged along characteristics.
    let seed_edge: Vec<f64> = data.g.iter().map(|g| -g).collect();
    let mut current = sweep(n, &seed_edge, None);
    let mut last_change = f64::INFINITY;
    for _ in 0..max_iter {
        let edge = boundary(&data, &current, which);
        let src = source(&data, &current, which);
        let next = sweep(n, &edge, src.as_ref());
        last_change = next.sup_distance(&current)?;
        if !last_change.is_finite() {
            return Err(Error::numerical(MODULE, "kernel iteration diverged"));
        }
        current = next;
        if last_change < tol {
            return Ok(current);
        }
    }
    Err(Error::NoConvergence {
        module: MODULE,
        iterations: max_iter,
        last_change,
    })
}

/// Solves the kernel equations for the direct transformation `k`.
pub fn solve_kernel_k(
    problem: &ProblemData,
    n: usize,
    tol: f64,
    max_iter: usize,
) -> Result<TriangularKernel> {
    solve(problem, n, tol, max_iter, Which::K)
}

/// Solves the kernel equations for the inverse transformation `l`.
pub fn solve_kernel_l(
    problem: &ProblemData,
    n: usize,
    tol: f64,
    max_iter: usize,
) -> Result<TriangularKernel> {
    solve(problem, n, tol, max_iter, Which::L)
}

/// Sup over the grid of `|l - k - ∫_z^s l(z,w) k(w,s) dw|`.
pub fn check_inverse_identity(k: &TriangularKernel, l: &TriangularKernel) -> Result<f64> {
    same_grid(k, l)?;
    let n = k.n;
    let h = k.step();
    let mut worst = 0.0_f64;
    let mut buf = Vec::with_capacity(n + 1);
    for i in 0..=n {
        for j in i..=n {
            buf.clear();
            buf.extend((i..=j).map(|w| l.get(i, w) * k.get(w, j)));
            let r = l.get(i, j) - k.get(i, j) - quad::trapezoid(&buf, h);
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}

/// Assembles `k̃(s) = q(s) + ∫₀^s q(w) l(w,s) dw` with `q = p + k(0,·)`.
pub fn build_gain(
    problem: &ProblemData,
    k: &TriangularKernel,
    l: &TriangularKernel,
) -> Result<GainProfile> {
    same_grid(k, l)?;
    let n = k.n;
    let h = k.step();
    let p = problem.p.sample_1d(n)?;
    let q: Vec<f64> = p.iter().zip(k.row(0)).map(|(p, k0)| p + k0).collect();
    let mut buf = Vec::with_capacity(n + 1);
    let ktilde = (0..=n)
        .map(|j| {
            buf.clear();
            buf.extend((0..=j).map(|w| q[w] * l.get(w, j)));
            q[j] + quad::trapezoid(&buf, h)
        })
        .collect();
    GainProfile::from_samples(ktilde)
}

/// Closed-form kernels of the exponential example (`g = A e^{rz}`, `f = p = 0`).
pub mod closed_form {
    /// `k(z,s) = -A e^r exp((r - A e^r)(z - s))`.
    pub fn k(amplitude: f64, r: f64) -> impl Fn(f64, f64) -> f64 {
        let c = amplitude * r.exp();
        move |z, s| -c * ((r - c) * (z - s)).exp()
    }

    /// `l(z,s) = -A exp(r(z - s + 1))`.
    pub fn l(amplitude: f64, r: f64) -> impl Fn(f64, f64) -> f64 {
        move |z, s| -amplitude * (r * (z - s + 1.0)).exp()
    }

    /// `k̃(s) = -A e^r e^{-rs}`.
    pub fn ktilde(amplitude: f64, r: f64) -> impl Fn(f64) -> f64 {
        let c = amplitude * r.exp();
        move |s| -c * (-r * s).exp()
    }
}

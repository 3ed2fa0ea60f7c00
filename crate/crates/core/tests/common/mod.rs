//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the crate's numerics; values are either closed
//! forms or computed by textbook methods (composite Simpson, bisection).
#![allow(dead_code)]

use std::f64::consts::E;

use zohpde::{FunctionSpec, StateProfile, TriangularKernel};

/// Frozen high-precision reference values for `A = r = 1`.
pub mod frozen {
    /// Root of `(1 + λ) e^λ / (e^{1+λ} - 1) = 1`.
    pub const LAMBDA: f64 = 1.493_753_530_376_087_6;
    /// `1 / (e - 1)`.
    pub const THRESHOLD: f64 = 0.581_976_706_869_326_4;
    /// `ln(1 / (e p_{-e}(0.1))) / 1.1`.
    pub const SIGMA_MAX: f64 = 1.057_812_837_950_209_2;
    /// `-e ∫₀¹ e^{(e-1)s} y₀(s) ds` for the example initial profile.
    pub const U0: f64 = 0.859_140_914_229_522_6;
}

/// Composite Simpson rule with `panels` (rounded up to even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let m = panels + panels % 2;
    let h = (b - a) / m as f64;
    let mut sum = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "no sign change on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closed-form direct kernel for `g = A e^{rz}`.
pub fn k_exact(a: f64, r: f64, z: f64, s: f64) -> f64 {
    let c = a * r.exp();
    -c * ((r - c) * (z - s)).exp()
}

/// Closed-form inverse kernel for `g = A e^{rz}`.
pub fn l_exact(a: f64, r: f64, z: f64, s: f64) -> f64 {
    -a * (r * (z - s + 1.0)).exp()
}

/// The example initial profile `-(e^z - e + 1)/2`.
pub fn y0_exact(z: f64) -> f64 {
    -0.5 * (z.exp() - E + 1.0)
}

pub fn y0_spec() -> FunctionSpec {
    zohpde::example_initial_profile()
}

/// Sup error of a kernel against `exact` over grid nodes and over an interior
/// point of every cell of the triangle (where interpolation error shows).
pub fn kernel_error(kernel: &TriangularKernel, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let n = kernel.resolution();
    let h = 1.0 / n as f64;
    let mut worst = 0.0_f64;
    for i in 0..=n {
        for j in i..=n {
            let (z, s) = (i as f64 * h, j as f64 * h);
            worst = worst.max((kernel.get(i, j) - exact(z, s)).abs());
            if j > i {
                let (z, s) = (z + h / 3.0, s - h / 3.0);
                worst = worst.max((kernel.eval(z, s).unwrap() - exact(z, s)).abs());
            }
        }
    }
    worst
}

pub fn sampled_profile(f: impl Fn(f64) -> f64, n: usize) -> StateProfile {
    StateProfile::new(0.0, (0..=n).map(|j| f(j as f64 / n as f64)).collect())
}

/// A problem with every term active, used where the exponential example is
/// too special (its inverse kernel is exact on the grid).
pub fn nonlocal_problem() -> zohpde::ProblemData {
    zohpde::ProblemData::new(
        FunctionSpec::ExpExample { amplitude: 0.5, r: 0.5 },
        FunctionSpec::Polynomial { coefficients: vec![0.3, 0.2, -0.4, 0.5] },
        FunctionSpec::Polynomial { coefficients: vec![0.2, 0.1] },
    )
    .unwrap()
}

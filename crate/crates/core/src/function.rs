//! Problem data: the functions `g`, `f`, `p` of the plant and initial profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODULE: &str = "kernels";

/// Whether a function is evaluated on `[0,1]` or on `[0,1]²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    OneDim,
    TwoDim,
}

/// A scalar function on `[0,1]` or `[0,1]²`.
///
/// Two-dimensional polynomials and tables are stored row-major as square
/// arrays: `coefficients[a * (d + 1) + b]` multiplies `z^a s^b`, and
/// `samples[i * n + j]` is the value at `(i/(n-1), j/(n-1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Zero,
    /// `A exp(r x)` with `A, r > 0`.
    ExpExample {
        #[serde(rename = "A")]
        amplitude: f64,
        r: f64,
    },
    /// `scale * exp(rate * x) + offset`.
    ExpAffine { scale: f64, rate: f64, offset: f64 },
    Polynomial { coefficients: Vec<f64> },
    /// Uniform samples over the unit interval (or square), linearly interpolated.
    Tabulated { samples: Vec<f64> },
}

fn square_side(len: usize) -> Option<usize> {
    let side = (len as f64).sqrt().round() as usize;
    (side * side == len).then_some(side)
}

impl FunctionSpec {
    pub fn validate(&self, arity: Arity) -> Result<()> {
        match (self, arity) {
            (FunctionSpec::Zero, _) => Ok(()),
            (FunctionSpec::ExpExample { amplitude, r }, Arity::OneDim) => {
                if !(amplitude.is_finite() && *amplitude > 0.0 && r.is_finite() && *r > 0.0) {
                    return Err(Error::input(MODULE, "exp_example requires A > 0 and r > 0"));
                }
                Ok(())
            }
            (FunctionSpec::ExpAffine { scale, rate, offset }, Arity::OneDim) => {
                if ![scale, rate, offset].iter().all(|x| x.is_finite()) {
                    return Err(Error::input(MODULE, "exp_affine parameters must be finite"));
                }
                Ok(())
            }
            (FunctionSpec::ExpExample { .. } | FunctionSpec::ExpAffine { .. }, Arity::TwoDim) => {
                Err(Error::input(MODULE, "exponential specs are one-dimensional only"))
            }
            (FunctionSpec::Polynomial { coefficients }, arity) => {
                if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::input(
                        MODULE,
                        "polynomial needs at least one finite coefficient",
                    ));
                }
                if arity == Arity::TwoDim && square_side(coefficients.len()).is_none() {
                    return Err(Error::input(
                        MODULE,
                        "two-dimensional polynomial needs a square coefficient array",
                    ));
                }
                Ok(())
            }
            (FunctionSpec::Tabulated { samples }, arity) => {
                if samples.iter().any(|c| !c.is_finite()) {
                    return Err(Error::input(MODULE, "tabulated samples must be finite"));
                }
                let side = match arity {
                    Arity::OneDim => samples.len(),
                    Arity::TwoDim => square_side(samples.len()).ok_or_else(|| {
                        Error::input(MODULE, "two-dimensional table must be square")
                    })?,
                };
                if side < 2 {
                    return Err(Error::input(MODULE, "tabulated spec needs at least 2 samples per axis"));
                }
                Ok(())
            }
        }
    }

    /// True when the function is identically zero; lets solvers skip work.
    pub fn is_zero(&self) -> bool {
        match self {
            FunctionSpec::Zero => true,
            FunctionSpec::Polynomial { coefficients } => coefficients.iter().all(|&c| c == 0.0),
            FunctionSpec::Tabulated { samples } => samples.iter().all(|&c| c == 0.0),
            FunctionSpec::ExpAffine { scale, offset, .. } => *scale == 0.0 && *offset == 0.0,
            FunctionSpec::ExpExample { .. } => false,
        }
    }

    /// Evaluates a one-dimensional spec at `x ∈ [0,1]`.
    pub fn eval1(&self, x: f64) -> Result<f64> {
        self.validate(Arity::OneDim)?;
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::input(MODULE, format!("evaluation point {x} outside [0,1]")));
        }
        Ok(self.eval1_unchecked(x))
    }

    /// Evaluates a two-dimensional spec at `(z, s) ∈ [0,1]²`.
    pub fn eval2(&self, z: f64, s: f64) -> Result<f64> {
        self.validate(Arity::TwoDim)?;
        if !((0.0..=1.0).contains(&z) && (0.0..=1.0).contains(&s)) {
            return Err(Error::input(
                MODULE,
                format!("evaluation point ({z}, {s}) outside [0,1]²"),
            ));
        }
        Ok(self.eval2_unchecked(z, s))
    }

    fn eval1_unchecked(&self, x: f64) -> f64 {
        match self {
            FunctionSpec::Zero => 0.0,
            FunctionSpec::ExpExample { amplitude, r } => amplitude * (r * x).exp(),
            FunctionSpec::ExpAffine { scale, rate, offset } => scale * (rate * x).exp() + offset,
            FunctionSpec::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            FunctionSpec::Tabulated { samples } => {
                let cells = (samples.len() - 1) as f64;
                let pos = x * cells;
                let i = (pos.floor() as usize).min(samples.len() - 2);
                let frac = pos - i as f64;
                samples[i] * (1.0 - frac) + samples[i + 1] * frac
            }
        }
    }

    fn eval2_unchecked(&self, z: f64, s: f64) -> f64 {
        match self {
            FunctionSpec::Zero => 0.0,
            FunctionSpec::Polynomial { coefficients } => {
                let side = square_side(coefficients.len()).unwrap_or(1);
                coefficients
                    .chunks(side)
                    .rev()
                    .fold(0.0, |acc, row| {
                        acc * z + row.iter().rev().fold(0.0, |inner, c| inner * s + c)
                    })
            }
            FunctionSpec::Tabulated { samples } => {
                let side = square_side(samples.len()).unwrap_or(2);
                let cells = (side - 1) as f64;
                let (pz, ps) = (z * cells, s * cells);
                let i = (pz.floor() as usize).min(side - 2);
                let j = (ps.floor() as usize).min(side - 2);
                let (fz, fs) = (pz - i as f64, ps - j as f64);
                let at = |a: usize, b: usize| samples[a * side + b];
                (1.0 - fz) * ((1.0 - fs) * at(i, j) + fs * at(i, j + 1))
                    + fz * ((1.0 - fs) * at(i + 1, j) + fs * at(i + 1, j + 1))
            }
            // Rejected by validate().
            FunctionSpec::ExpExample { .. } | FunctionSpec::ExpAffine { .. } => f64::NAN,
        }
    }

    /// Samples a one-dimensional spec at `x_j = j/n`, `j = 0..=n`.
    pub fn sample_1d(&self, n: usize) -> Result<Vec<f64>> {
        self.validate(Arity::OneDim)?;
        Ok((0..=n)
            .map(|j| self.eval1_unchecked(j as f64 / n as f64))
            .collect())
    }

    /// Samples a two-dimensional spec on the full `(n+1)²` grid, row-major in `z`.
    pub fn sample_2d(&self, n: usize) -> Result<Vec<f64>> {
        self.validate(Arity::TwoDim)?;
        let h = 1.0 / n as f64;
        let mut out = Vec::with_capacity((n + 1) * (n + 1));
        for i in 0..=n {
            for j in 0..=n {
                out.push(self.eval2_unchecked(i as f64 * h, j as f64 * h));
            }
        }
        Ok(out)
    }
}

/// The plant data: in-domain feedback `g`, non-local kernel `f`, and the
/// boundary weight `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemData {
    pub g: FunctionSpec,
    pub f: FunctionSpec,
    pub p: FunctionSpec,
}

impl ProblemData {
    pub fn new(g: FunctionSpec, f: FunctionSpec, p: FunctionSpec) -> Result<Self> {
        let problem = ProblemData { g, f, p };
        problem.validate()?;
        Ok(problem)
    }

    /// `g(z) = A exp(rz)`, `f ≡ 0`, `p ≡ 0`.
    pub fn exp_example(amplitude: f64, r: f64) -> Result<Self> {
        Self::new(
            FunctionSpec::ExpExample { amplitude, r },
            FunctionSpec::Zero,
            FunctionSpec::Zero,
        )
    }

    pub fn zero() -> Self {
        ProblemData {
            g: FunctionSpec::Zero,
            f: FunctionSpec::Zero,
            p: FunctionSpec::Zero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.g.validate(Arity::OneDim)?;
        self.f.validate(Arity::TwoDim)?;
        self.p.validate(Arity::OneDim)
    }
}

/// The initial profile used in the worked example: `-(e^z - e + 1)/2`.
pub fn example_initial_profile() -> FunctionSpec {
    let e = std::f64::consts::E;
    FunctionSpec::ExpAffine {
        scale: -0.5,
        rate: 1.0,
        offset: 0.5 * (e - 1.0),
    }
}

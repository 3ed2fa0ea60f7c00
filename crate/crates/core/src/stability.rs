//! Sampling-period bounds, the open-loop test of the exponential example, and
//! empirical decay envelopes.
//!
//! The admissibility condition linking a decay rate `σ` to a maximum sampling
//! gap `T` is
//!
//! ```text
//! M p_a(T) exp(σ (1 + T)) < 1,    p_a(t) = ∫₀^t e^{-a(t-s)} ds,
//! ```
//!
//! with `M = |k̃(1)| + ∫|k̃'|` and `a = k̃(0)`.

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::Trace;

const MODULE: &str = "stability";

/// Bisection stops once the bracket is this small (relative to its magnitude).
const ROOT_TOL: f64 = 1e-14;

/// `p_a(t) = (1 - e^{-at}) / a`, with the limit `t` as `a → 0`.
pub fn p_a(a: f64, t: f64) -> f64 {
    if a.abs() < 1e-12 {
        t
    } else {
        -(-a * t).exp_m1() / a
    }
}

/// Result of solving the admissibility condition for one unknown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    /// No positive value satisfies the condition.
    Infeasible,
    /// Every positive value satisfies the condition (zero gain).
    Unbounded,
}

impl Bound {
    pub fn finite(self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(v),
            _ => None,
        }
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bound::Finite(v) => s.serialize_f64(*v),
            Bound::Infeasible => s.serialize_str("infeasible"),
            Bound::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Bound::Finite(v)),
            Raw::Tag(t) if t == "infeasible" => Ok(Bound::Infeasible),
            Raw::Tag(t) if t == "unbounded" => Ok(Bound::Unbounded),
            Raw::Tag(t) => Err(de::Error::custom(format!("unknown bound tag {t:?}"))),
        }
    }
}

/// Largest `σ` for which `M p_a(T) e^{σ(1+T)} < 1` can hold: the equality root.
/// Callers must use `σ < σ_max`.
pub fn max_sigma(m: f64, a: f64, t: f64) -> Result<Bound> {
    if !(t > 0.0) || !(m >= 0.0) {
        return Err(Error::input(MODULE, "need T > 0 and M >= 0"));
    }
    if m == 0.0 {
        return Ok(Bound::Unbounded);
    }
    let mp = m * p_a(a, t);
    if mp >= 1.0 {
        return Ok(Bound::Infeasible);
    }
    Ok(Bound::Finite((1.0 / mp).ln() / (1.0 + t)))
}

/// Bisection on a bracket with `f(lo) < 0 < f(hi)` for an increasing `f`.
fn bisect_increasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    if !(f(lo) <= 0.0 && f(hi) >= 0.0) {
        return Err(Error::numerical(MODULE, format!("bisection bracket [{lo}, {hi}] does not straddle a root")));
    }
    for _ in 0..500 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= ROOT_TOL * hi.abs().max(1e-300) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest sampling gap `T` for which rate `σ` satisfies the admissibility
/// condition (the equality root in `T`).
pub fn max_period(m: f64, a: f64, sigma: f64) -> Result<Bound> {
    if !(sigma > 0.0) || !(m >= 0.0) {
        return Err(Error::input(MODULE, "need sigma > 0 and M >= 0"));
    }
    if m == 0.0 {
        return Ok(Bound::Unbounded);
    }
    let lhs = |t: f64| m * p_a(a, t) * (sigma * (1.0 + t)).exp() - 1.0;
    let lo = 1e-12;
    if lhs(lo) >= 0.0 {
        return Ok(Bound::Infeasible);
    }
    let mut hi = 1.0;
    while lhs(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::numerical(MODULE, "could not bracket the maximum period"));
        }
    }
    bisect_increasing(lhs, lo, hi).map(Bound::Finite)
}

/// `σ_max` for each `T` in `periods`: the data behind the σ–T trade-off curve.
pub fn sigma_curve(m: f64, a: f64, periods: &[f64]) -> Result<Vec<(f64, Bound)>> {
    periods
        .iter()
        .map(|&t| max_sigma(m, a, t).map(|b| (t, b)))
        .collect()
}

/// Open-loop stability verdict for `g(z) = A e^{rz}`, `f = p = 0`, `u ≡ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenLoopReport {
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub r: f64,
    pub threshold: f64,
    pub stable: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
}

/// `(r + λ) e^λ / (e^{r+λ} - 1)`.
fn mode_amplitude(r: f64, lambda: f64) -> f64 {
    (r + lambda) * lambda.exp() / (r + lambda).exp_m1()
}

/// Stable iff `A < r / (e^r - 1)`; otherwise also returns the growth rate
/// `λ ≥ 0` of the unstable mode.
pub fn open_loop_test(amplitude: f64, r: f64) -> Result<OpenLoopReport> {
    if !(amplitude > 0.0 && r > 0.0) {
        return Err(Error::input(MODULE, "need A > 0 and r > 0"));
    }
    let threshold = r / r.exp_m1();
    let stable = amplitude < threshold;
    let lambda = if stable {
        None
    } else {
        let residual = |lambda: f64| mode_amplitude(r, lambda) - amplitude;
        if residual(0.0) >= 0.0 {
            Some(0.0)
        } else {
            let mut hi = 1.0;
            while residual(hi) < 0.0 {
                hi *= 2.0;
            }
            Some(bisect_increasing(residual, 0.0, hi)?)
        }
    };
    Ok(OpenLoopReport {
        amplitude,
        r,
        threshold,
        stable,
        lambda,
    })
}

/// The unstable open-loop mode `e^{λ(t+1-z)} (e^{(r+λ)z} - 1) / (e^{r+λ} - 1)`.
pub fn unstable_mode(r: f64, lambda: f64) -> impl Fn(f64, f64) -> f64 {
    let denom = (r + lambda).exp_m1();
    move |t, z| (lambda * (t + 1.0 - z)).exp() * ((r + lambda) * z).exp_m1() / denom
}

/// Sup over `(t, z) ∈ [0,1] × (0,1)` of the residual of
/// `x_t + x_z = A e^{rz} x(t,1)` for the unstable mode, with the transport
/// derivative taken by central differences along the characteristic.
pub fn verify_unstable_mode(amplitude: f64, r: f64, lambda: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::input(MODULE, "resolution must be at least 2"));
    }
    let x = unstable_mode(r, lambda);
    let h = 1.0 / n as f64;
    let mut worst = 0.0_f64;
    for i in 0..=n {
        let t = i as f64 * h;
        for j in 1..n {
            let z = j as f64 * h;
            let transport = (x(t + h, z + h) - x(t - h, z - h)) / (2.0 * h);
            let source = amplitude * (r * z).exp() * x(t, 1.0);
            worst = worst.max((transport - source).abs());
        }
    }
    Ok(worst)
}

/// Least-squares line through `(t, ln value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub points: usize,
}

fn least_squares(points: &[(f64, f64)]) -> LogLinearFit {
    let count = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / count;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, y) in points {
        sxy += (t - mean_t) * (y - mean_y);
        sxx += (t - mean_t) * (t - mean_t);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    LogLinearFit {
        intercept: mean_y - slope * mean_t,
        slope,
        points: points.len(),
    }
}

/// Fits `ln trace` against `t` over all positive samples in `[t_start, t_end]`.
pub fn fit_log_linear(trace: &Trace, t_start: f64, t_end: f64) -> Result<LogLinearFit> {
    let points: Vec<(f64, f64)> = trace
        .iter()
        .filter(|&(t, v)| t >= t_start - 1e-12 && t <= t_end + 1e-12 && v > 0.0)
        .map(|(t, v)| (t, v.ln()))
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData { found: points.len() });
    }
    Ok(least_squares(&points))
}

/// Empirical constants of `‖y[t]‖ ≤ G e^{-σt} ‖y₀‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub g_fit: f64,
    pub sigma_fit: f64,
    pub peaks: usize,
}

/// Fits an exponential envelope to a norm trace over `[t_start, end]`.
///
/// Only the peak envelope enters the fit: samples that are at least as large
/// as every later sample in the window. `G_fit` is normalized by the first
/// sample of the trace (the initial norm) when it is positive.
pub fn fit_envelope(trace: &Trace, t_start: f64) -> Result<EnvelopeFit> {
    if t_start < 1.0 {
        return Err(Error::input(MODULE, "t_start must be at least 1 (dead-time transient)"));
    }
    let window: Vec<(f64, f64)> = trace.iter().filter(|&(t, _)| t >= t_start - 1e-12).collect();
    let mut peaks = Vec::new();
    let mut running = f64::NEG_INFINITY;
    for &(t, v) in window.iter().rev() {
        if v >= running {
            running = v;
            if v > 0.0 {
                peaks.push((t, v.ln()));
            }
        }
    }
    if peaks.len() < 3 {
        return Err(Error::InsufficientData { found: peaks.len() });
    }
    peaks.reverse();
    let fit = least_squares(&peaks);
    let scale = trace.values.first().copied().filter(|&v| v > 0.0).unwrap_or(1.0);
    Ok(EnvelopeFit {
        g_fit: fit.intercept.exp() / scale,
        sigma_fit: (-fit.slope).max(0.0),
        peaks: peaks.len(),
    })
}

/// Outcome of checking `|v(t)| e^{σt} ≤ (1 + slack) sup|v₀|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    /// `max_t |v(t)| e^{σt} / sup|v₀|`.
    pub worst_ratio: f64,
    pub ok: bool,
}

pub fn check_decay_envelope(v: &Trace, v0_sup: f64, sigma: f64, slack: f64) -> EnvelopeCheck {
    let worst = v
        .iter()
        .map(|(t, x)| x.abs() * (sigma * t).exp())
        .fold(0.0_f64, f64::max);
    let worst_ratio = if v0_sup > 0.0 {
        worst / v0_sup
    } else if worst == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    EnvelopeCheck {
        worst_ratio,
        ok: worst_ratio <= 1.0 + slack,
    }
}

/// Theoretical and empirical stability summary of a closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    #[serde(rename = "M")]
    pub m: f64,
    pub a: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub sigma_max: Bound,
    pub sigma_used: f64,
    #[serde(rename = "G_fit")]
    pub g_fit: f64,
    pub sigma_fit: f64,
    pub envelope_ok: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn p_a_basics() {
        assert_eq!(p_a(0.0, 0.7), 0.7);
        assert_eq!(p_a(3.0, 0.0), 0.0);
        assert_eq!(p_a(-2.0, 0.0), 0.0);
        // Continuous across the a = 0 switch.
        assert!((p_a(1e-11, 0.5) - 0.5).abs() < 1e-11);
        assert!((p_a(2.0, 1.0) - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn sigma_bound_sentinels() {
        assert_eq!(max_sigma(0.0, 1.0, 0.1).unwrap(), Bound::Unbounded);
        assert_eq!(max_sigma(20.0, 0.0, 0.1).unwrap(), Bound::Infeasible);
        assert_eq!(max_period(0.0, 0.0, 1.0).unwrap(), Bound::Unbounded);
        assert!(max_sigma(1.0, 0.0, 0.0).unwrap_err().is_input());
        assert!(max_period(1.0, 0.0, -1.0).unwrap_err().is_input());
    }

    #[test]
    fn closed_form_sigma() {
        let s = max_sigma(1.0, 0.0, 0.1).unwrap().finite().unwrap();
        assert!((s - 10f64.ln() / 1.1).abs() < 1e-14);
        let t = max_period(1.0, 0.0, s).unwrap().finite().unwrap();
        assert!((t - 0.1).abs() < 1e-12);
    }

    #[test]
    fn open_loop_boundary_case() {
        let r: f64 = 1.0;
        let rep = open_loop_test(r / r.exp_m1(), r).unwrap();
        assert!(!rep.stable);
        assert_eq!(rep.lambda, Some(0.0));
        let stable = open_loop_test(0.5, 1.0).unwrap();
        assert!(stable.stable && stable.lambda.is_none());
    }

    #[test]
    fn mode_vanishes_at_inlet() {
        let x = unstable_mode(1.0, 1.49);
        for t in [0.0, 0.3, 2.0] {
            assert_eq!(x(t, 0.0), 0.0);
        }
    }

    #[test]
    fn envelope_fit_on_exact_data() {
        let trace = Trace::new(0.0, 0.01, (0..=800).map(|k| 3.0 * (-2.0 * k as f64 * 0.01).exp()).collect());
        let fit = fit_envelope(&trace, 1.0).unwrap();
        assert!((fit.sigma_fit - 2.0).abs() < 1e-6);
        assert!((fit.g_fit - 1.0).abs() < 1e-6);
        let flat = Trace::new(0.0, 0.1, vec![2.0; 50]);
        assert!(fit_envelope(&flat, 1.0).unwrap().sigma_fit < 1e-12);
        assert!(matches!(
            fit_envelope(&Trace::new(0.0, 0.5, vec![1.0, 1.0, 1.0, 0.0]), 1.0),
            Err(Error::InsufficientData { .. })
        ));
        assert!(fit_envelope(&flat, 0.5).unwrap_err().is_input());
    }

    #[test]
    fn envelope_check_zero_history() {
        let v = Trace::new(0.0, 0.1, vec![0.0; 10]);
        assert!(check_decay_envelope(&v, 0.0, 1.0, 0.05).ok);
    }

    #[test]
    fn report_json_field_names() {
        let rep = StabilityReport {
            m: E,
            a: -E,
            t: 0.1,
            sigma_max: Bound::Infeasible,
            sigma_used: 0.0,
            g_fit: 1.0,
            sigma_fit: 2.0,
            envelope_ok: true,
        };
        let json = serde_json::to_value(&rep).unwrap();
        let keys: Vec<&str> = json.as_object().unwrap().keys().map(|s| s.as_str()).collect();
        for k in ["M", "a", "T", "sigma_max", "sigma_used", "G_fit", "sigma_fit", "envelope_ok"] {
            assert!(keys.contains(&k), "missing {k}");
        }
        assert_eq!(json["sigma_max"], "infeasible");
        let back: StabilityReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, rep);

        let ol = serde_json::to_value(open_loop_test(0.5, 1.0).unwrap()).unwrap();
        assert!(ol.get("lambda").is_none());
        assert!(ol.get("A").is_some());
    }
}

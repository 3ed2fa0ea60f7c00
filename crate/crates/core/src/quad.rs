//! Composite trapezoid rule on uniform grids.

/// Trapezoid sum of `values` sampled with spacing `h`.
///
/// Returns 0 for fewer than two samples (an empty integration range).
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            h * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Trapezoid sum of the pointwise product `a[k] * b[k]`.
pub fn trapezoid_product(a: &[f64], b: &[f64], h: f64) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = a[1..n - 1]
        .iter()
        .zip(&b[1..n - 1])
        .map(|(x, y)| x * y)
        .sum();
    h * (inner + 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]))
}

/// Trapezoid weight of node `k` out of `len` nodes.
#[inline]
pub fn weight(k: usize, len: usize, h: f64) -> f64 {
    if len < 2 {
        0.0
    } else if k == 0 || k == len - 1 {
        0.5 * h
    } else {
        h
    }
}

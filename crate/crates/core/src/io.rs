//! CSV serialization of kernels, gains, traces and profiles.
//!
//! Numbers are written with 17 significant digits so that files round-trip
//! exactly.

use std::io::{self, Write};

use crate::ide::Jump;
use crate::kernels::{GainProfile, TriangularKernel};
use crate::stability::Bound;
use crate::trace::{StateProfile, Trace};

/// Formats a number with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer<W: Write>(out: W, header: &[&str]) -> io::Result<csv::Writer<W>> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

/// Columns `z, s, value` over the triangle, every `stride`-th node in each direction.
pub fn write_kernel<W: Write>(out: W, k: &TriangularKernel, stride: usize) -> io::Result<()> {
    let stride = stride.max(1);
    let n = k.resolution();
    let h = k.step();
    let mut w = writer(out, &["z", "s", "value"])?;
    for i in (0..=n).step_by(stride) {
        for j in (i..=n).step_by(stride) {
            w.write_record([num(i as f64 * h), num(j as f64 * h), num(k.get(i, j))])?;
        }
    }
    w.flush()
}

/// Columns `s, ktilde, dktilde`.
pub fn write_gain<W: Write>(out: W, gain: &GainProfile) -> io::Result<()> {
    let h = 1.0 / gain.resolution() as f64;
    let mut w = writer(out, &["s", "ktilde", "dktilde"])?;
    for (m, (k, dk)) in gain.ktilde().iter().zip(gain.dktilde()).enumerate() {
        w.write_record([num(m as f64 * h), num(*k), num(*dk)])?;
    }
    w.flush()
}

/// Column `t` followed by one column per trace; traces must share their time grid.
pub fn write_traces<W: Write>(out: W, columns: &[(&str, &Trace)]) -> io::Result<()> {
    let mut header = vec!["t"];
    header.extend(columns.iter().map(|c| c.0));
    let mut w = writer(out, &header)?;
    let Some((_, first)) = columns.first() else {
        return w.flush();
    };
    let len = columns.iter().map(|c| c.1.len()).min().unwrap_or(0);
    for k in 0..len {
        let mut row = vec![num(first.time(k))];
        row.extend(columns.iter().map(|c| num(c.1.values[k])));
        w.write_record(&row)?;
    }
    w.flush()
}

/// Columns `z, y`.
pub fn write_profile<W: Write>(out: W, profile: &StateProfile) -> io::Result<()> {
    let h = 1.0 / profile.resolution().max(1) as f64;
    let mut w = writer(out, &["z", "y"])?;
    for (j, y) in profile.values.iter().enumerate() {
        w.write_record([num(j as f64 * h), num(*y)])?;
    }
    w.flush()
}

/// Columns `index, t, left_limit, right_value`.
pub fn write_jumps<W: Write>(out: W, jumps: &[Jump]) -> io::Result<()> {
    let mut w = writer(out, &["index", "t", "left_limit", "right_value"])?;
    for j in jumps {
        w.write_record([j.index.to_string(), num(j.t), num(j.left_limit), num(j.right_value)])?;
    }
    w.flush()
}

fn bound_field(b: Bound) -> String {
    match b {
        Bound::Finite(v) => num(v),
        Bound::Infeasible => "infeasible".into(),
        Bound::Unbounded => "unbounded".into(),
    }
}

/// Columns `T, sigma_max`.
pub fn write_sigma_curve<W: Write>(out: W, curve: &[(f64, Bound)]) -> io::Result<()> {
    let mut w = writer(out, &["T", "sigma_max"])?;
    for &(t, b) in curve {
        w.write_record([num(t), bound_field(b)])?;
    }
    w.flush()
}

//! Parameter sweeps over `T`, `N` or the schedule seed.

use std::path::Path;

use rayon::prelude::*;
use zohpde::io::num;
use zohpde::Bound;

use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};
use crate::output::{Manifest, OutputDir};
use crate::scenario::{run_scenario, ScenarioOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    #[value(name = "T")]
    Period,
    #[value(name = "N")]
    Resolution,
    #[value(name = "seed")]
    Seed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisValue {
    Period(f64),
    Resolution(usize),
    Seed(u64),
}

impl AxisValue {
    fn label(self) -> String {
        match self {
            AxisValue::Period(t) => format!("{t}"),
            AxisValue::Resolution(n) => n.to_string(),
            AxisValue::Seed(s) => s.to_string(),
        }
    }

    fn apply(self, cfg: &mut ScenarioConfig) -> Result<()> {
        match self {
            AxisValue::Resolution(n) => cfg.resolution = n,
            AxisValue::Period(t) => schedule(cfg)?.period = t,
            AxisValue::Seed(s) => schedule(cfg)?.seed = s,
        }
        Ok(())
    }
}

fn schedule(cfg: &mut ScenarioConfig) -> Result<&mut crate::config::ScheduleConfig> {
    cfg.schedule
        .as_mut()
        .ok_or_else(|| CliError::config("schedule", "the sweep axis needs a schedule"))
}

fn parse_int<T: std::str::FromStr>(text: &str) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| CliError::config("--values", format!("`{text}` is not a non-negative integer")))
}

/// Parses comma-separated values; integer axes also accept ranges `a..b`.
pub fn parse_values(axis: Axis, items: &[String]) -> Result<Vec<AxisValue>> {
    let mut out = Vec::new();
    for item in items.iter().flat_map(|s| s.split(',')).filter(|s| !s.trim().is_empty()) {
        match axis {
            Axis::Period => {
                let t: f64 = item
                    .trim()
                    .parse()
                    .map_err(|_| CliError::config("--values", format!("`{item}` is not a number")))?;
                out.push(AxisValue::Period(t));
            }
            Axis::Resolution | Axis::Seed => {
                let (lo, hi) = match item.split_once("..") {
                    Some((a, b)) => (parse_int::<u64>(a)?, parse_int::<u64>(b)?),
                    None => {
                        let v = parse_int::<u64>(item)?;
                        (v, v + 1)
                    }
                };
                for v in lo..hi {
                    out.push(match axis {
                        Axis::Seed => AxisValue::Seed(v),
                        _ => AxisValue::Resolution(v as usize),
                    });
                }
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::config("--values", "no sweep values given"));
    }
    Ok(out)
}

/// One summary row; `outcome` holds the error message of a failed run.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: AxisValue,
    pub outcome: std::result::Result<RowData, String>,
}

#[derive(Debug, Clone)]
pub struct RowData {
    pub sigma_max: Option<Bound>,
    pub sigma_fit: Option<f64>,
    pub max_cross_error: Option<f64>,
    pub envelope_ok: Option<bool>,
}

impl RowData {
    fn from_outcome(o: &ScenarioOutcome) -> Self {
        RowData {
            sigma_max: o.stability.as_ref().map(|s| s.sigma_max),
            sigma_fit: o.stability.as_ref().map(|s| s.sigma_fit),
            max_cross_error: o.summary.max_cross_pathway_error,
            envelope_ok: o.stability.as_ref().map(|s| s.envelope_ok),
        }
    }
}

/// Worker pool sized by `ZOH_THREADS` when set, else by rayon's default.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(text) = std::env::var("ZOH_THREADS") {
        let n: usize = text
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::config("ZOH_THREADS", format!("`{text}` is not a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::config("ZOH_THREADS", e.to_string()))
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn bound(b: Option<Bound>) -> String {
    match b {
        Some(Bound::Finite(v)) => num(v),
        Some(Bound::Infeasible) => "infeasible".into(),
        Some(Bound::Unbounded) => "unbounded".into(),
        None => String::new(),
    }
}

fn write_summary(w: &mut Vec<u8>, rows: &[SweepRow]) -> std::io::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["value", "sigma_max", "sigma_fit", "max_cross_error", "envelope_ok", "status"])?;
    for row in rows {
        let record = match &row.outcome {
            Ok(d) => [
                row.value.label(),
                bound(d.sigma_max),
                opt(d.sigma_fit),
                opt(d.max_cross_error),
                d.envelope_ok.map(|b| b.to_string()).unwrap_or_default(),
                "ok".into(),
            ],
            Err(msg) => [
                row.value.label(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                format!("error: {msg}"),
            ],
        };
        csv.write_record(&record)?;
    }
    csv.flush()
}

/// Runs the template once per value in parallel. Each run writes into its own
/// `run_NNN` subdirectory; `summary.csv` and the combined manifest are written
/// after all runs finish. Failed runs are recorded, not fatal.
pub fn sweep(template: &ScenarioConfig, values: &[AxisValue], out_root: &Path) -> Result<(Vec<SweepRow>, Manifest)> {
    let mut configs = Vec::with_capacity(values.len());
    for (i, &value) in values.iter().enumerate() {
        let mut cfg = template.clone();
        value.apply(&mut cfg)?;
        cfg.output_dir = out_root.join(format!("run_{i:03}"));
        configs.push(cfg);
    }
    let mut out = OutputDir::create(out_root)?;
    let pool = thread_pool()?;
    let results: Vec<_> = pool.install(|| configs.par_iter().map(run_scenario).collect());

    let mut rows = Vec::with_capacity(values.len());
    for (i, (value, result)) in values.iter().zip(results).enumerate() {
        let outcome = match result {
            Ok(o) => {
                out.adopt(&format!("run_{i:03}"), &o.manifest);
                Ok(RowData::from_outcome(&o))
            }
            Err(e) => Err(e.to_string()),
        };
        rows.push(SweepRow { value: *value, outcome });
    }
    out.write("summary.csv", |w| write_summary(w, &rows))?;
    Ok((rows, out.finish()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_parsing() {
        let v = parse_values(Axis::Seed, &["0..3,7".into()]).unwrap();
        assert_eq!(v, vec![AxisValue::Seed(0), AxisValue::Seed(1), AxisValue::Seed(2), AxisValue::Seed(7)]);
        let v = parse_values(Axis::Period, &["0.05,0.1".into(), "0.2".into()]).unwrap();
        assert_eq!(v.len(), 3);
        assert!(parse_values(Axis::Resolution, &["1.5".into()]).is_err());
        assert!(parse_values(Axis::Period, &["".into()]).is_err());
    }
}

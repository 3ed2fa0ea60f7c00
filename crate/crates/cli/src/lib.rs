//! Command-line front end: scenario runs, sweeps, kernel solves and the
//! sampling-period trade-off curve.

// Negated comparisons are how inputs reject NaN; index loops mirror the
// quadrature formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod output;
pub mod scenario;
pub mod sweep;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use zohpde::io as csv_out;
use zohpde::stability::sigma_curve;

use config::{Pathways, ScenarioConfig};
use error::{CliError, Result};
use output::OutputDir;
use scenario::Design;

#[derive(Debug, Parser)]
#[command(name = "zohpde", version, about = "Sampled-data boundary control of hyperbolic PIDEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the kernel equations and write kernels and gain.
    SolveKernels(ScenarioArgs),
    /// Run one scenario.
    Run(ScenarioArgs),
    /// Run a scenario once per value of a parameter.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum)]
        axis: sweep::Axis,
        /// Comma-separated values; N and seed also accept ranges `a..b`.
        #[arg(long, required = true, num_args = 1..)]
        values: Vec<String>,
    },
    /// Write `sigma_max` against the sampling period.
    StabilityCurve(CurveArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub pathway: Option<Pathways>,
    /// Schedule seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ScenarioArgs {
    pub fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(p) = self.pathway {
            cfg.pathways = p;
        }
        if let Some(seed) = self.seed {
            if let Some(s) = cfg.schedule.as_mut() {
                s.seed = seed;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Take M and a from the gain of this scenario.
    #[arg(long, conflicts_with_all = ["m", "a"])]
    pub config: Option<PathBuf>,
    #[arg(long = "M", requires = "a")]
    pub m: Option<f64>,
    #[arg(long, requires = "m", allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Explicit periods; otherwise an even grid on (0, t-max].
    #[arg(long, value_delimiter = ',')]
    pub periods: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn curve(args: &CurveArgs) -> Result<()> {
    let (m, a, out_dir) = match (&args.config, args.m, args.a) {
        (Some(path), _, _) => {
            let cfg = ScenarioConfig::load(path)?;
            let design = Design::solve(&cfg.problem, cfg.resolution)?;
            let out = args.out.clone().unwrap_or(cfg.output_dir);
            (design.gain.m, design.gain.a, out)
        }
        (None, Some(m), Some(a)) => {
            let out = args
                .out
                .clone()
                .ok_or_else(|| CliError::config("--out", "required without --config"))?;
            (m, a, out)
        }
        _ => return Err(CliError::config("--config", "give either --config or both --M and --a")),
    };
    let periods = match &args.periods {
        Some(p) => p.clone(),
        None => {
            if args.points == 0 || !(args.t_max > 0.0) {
                return Err(CliError::config("--points", "need points > 0 and t-max > 0"));
            }
            (1..=args.points)
                .map(|i| args.t_max * i as f64 / args.points as f64)
                .collect()
        }
    };
    let curve = sigma_curve(m, a, &periods)?;
    let mut out = OutputDir::create(out_dir)?;
    out.write("sigma_curve.csv", |w| csv_out::write_sigma_curve(w, &curve))?;
    out.finish()?;
    println!("M = {m}, a = {a}: {} periods", curve.len());
    Ok(())
}

/// Executes a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SolveKernels(args) => {
            let cfg = args.load()?;
            let design = Design::solve(&cfg.problem, cfg.resolution)?;
            let mut out = OutputDir::create(&cfg.output_dir)?;
            design.write(&mut out)?;
            out.write_json(
                "gain_constants.json",
                &serde_json::json!({ "M": design.gain.m, "a": design.gain.a }),
            )?;
            out.finish()?;
            println!("M = {}, a = {}", design.gain.m, design.gain.a);
        }
        Command::Run(args) => {
            let cfg = args.load()?;
            let outcome = scenario::run_scenario(&cfg)?;
            if let Some(r) = &outcome.stability {
                println!("{}", serde_json::to_string(r).expect("report serializes"));
            }
            if let Some(r) = &outcome.open_loop {
                println!("{}", serde_json::to_string(r).expect("report serializes"));
            }
            println!("{} files in {}", outcome.manifest.files.len(), cfg.output_dir.display());
        }
        Command::Sweep { scenario: args, axis, values } => {
            let cfg = args.load()?;
            let values = sweep::parse_values(axis, &values)?;
            let (rows, _) = sweep::sweep(&cfg, &values, &cfg.output_dir)?;
            let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
            println!("{} runs, {failed} failed; summary in {}", rows.len(), cfg.output_dir.join("summary.csv").display());
        }
        Command::StabilityCurve(args) => curve(&args)?,
    }
    Ok(())
}

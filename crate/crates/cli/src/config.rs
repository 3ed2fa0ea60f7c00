//! Scenario configuration: a single JSON document, validated before use.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zohpde::{example_initial_profile, Arity, FunctionSpec, ProblemData, ScheduleKind};

use crate::error::{CliError, Result};

/// Resolution floor of the finite-difference pathway.
pub const MIN_FD_RESOLUTION: usize = zohpde::fd::MIN_RESOLUTION;
/// Resolution floor of the kernel solver.
pub const MIN_RESOLUTION: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Pathways {
    Ide,
    Fd,
    Both,
}

impl Pathways {
    pub fn ide(self) -> bool {
        matches!(self, Pathways::Ide | Pathways::Both)
    }

    pub fn fd(self) -> bool {
        matches!(self, Pathways::Fd | Pathways::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controller {
    /// Sample-and-hold of the continuous-time backstepping law.
    Emulated,
    /// `u ≡ 0`.
    OpenLoop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub kind: ScheduleKind,
    /// Upper bound on the sampling gaps.
    #[serde(rename = "T")]
    pub period: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub problem: ProblemData,
    #[serde(default = "example_initial_profile")]
    pub initial_condition: FunctionSpec,
    pub resolution: usize,
    pub horizon: f64,
    #[serde(default)]
    pub schedule: Option<ScheduleConfig>,
    pub controller: Controller,
    #[serde(default)]
    pub sigma_request: Option<f64>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    pub output_dir: PathBuf,
    #[serde(default = "default_pathways")]
    pub pathways: Pathways,
}

fn default_pathways() -> Pathways {
    Pathways::Both
}

fn on_grid(t: f64, n: usize) -> bool {
    let pos = t * n as f64;
    (pos - pos.round()).abs() <= 1e-6
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config("<document>", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, e: zohpde::Error| CliError::config(name, e.to_string());
        self.problem.g.validate(Arity::OneDim).map_err(|e| field("problem.g", e))?;
        self.problem.f.validate(Arity::TwoDim).map_err(|e| field("problem.f", e))?;
        self.problem.p.validate(Arity::OneDim).map_err(|e| field("problem.p", e))?;
        self.initial_condition
            .validate(Arity::OneDim)
            .map_err(|e| field("initial_condition", e))?;

        let n = self.resolution;
        let floor = if self.pathways.fd() { MIN_FD_RESOLUTION } else { MIN_RESOLUTION };
        if n < floor {
            return Err(CliError::config("resolution", format!("must be at least {floor}")));
        }
        if !(self.horizon > 0.0) || !on_grid(self.horizon, n) {
            return Err(CliError::config(
                "horizon",
                format!("must be positive and a multiple of 1/{n}"),
            ));
        }
        for (i, &t) in self.snapshot_times.iter().enumerate() {
            if !(0.0..=self.horizon).contains(&t) || !on_grid(t, n) {
                return Err(CliError::config(
                    format!("snapshot_times[{i}]"),
                    format!("{t} is not a grid time in [0, {}]", self.horizon),
                ));
            }
        }
        if let Some(sigma) = self.sigma_request {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(CliError::config("sigma_request", "must be positive"));
            }
        }
        match (self.controller, &self.schedule) {
            (Controller::Emulated, None) => {
                return Err(CliError::config("schedule", "required for the emulated controller"));
            }
            (Controller::OpenLoop, _) if !self.pathways.fd() => {
                return Err(CliError::config(
                    "pathways",
                    "the open loop is only simulated by finite differences",
                ));
            }
            _ => {}
        }
        if let Some(s) = &self.schedule {
            let min = 2.0 / n as f64;
            if !(s.period >= min) || !s.period.is_finite() {
                return Err(CliError::config(
                    "schedule.T",
                    format!("must be at least two grid steps ({min})"),
                ));
            }
        }
        Ok(())
    }
}

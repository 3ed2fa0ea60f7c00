//! One scenario run: kernels, gain, stability bound, simulations, artifacts.

use serde::Serialize;
use zohpde::io as csv_out;
use zohpde::kernels::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use zohpde::stability::{check_decay_envelope, fit_log_linear, EnvelopeFit};
use zohpde::{
    build_gain, fit_envelope, forward_transform, history_from_initial, make_schedule, max_sigma,
    open_loop_test, reconstruct_y, simulate_fd, solve_ide, solve_kernel_k, solve_kernel_l, Bound,
    FdControl, FdRun, FunctionSpec, GainProfile, IdeRun, OpenLoopReport, ProblemData,
    SamplingSchedule, StabilityReport, StateProfile, Trace, TriangularKernel,
};

use crate::config::{Controller, ScenarioConfig};
use crate::error::Result;
use crate::output::{time_tag, Manifest, OutputDir};

/// Envelope fits ignore the first time unit, the dead time of the loop.
const FIT_START: f64 = 1.0;
/// Relative slack of the decay-envelope check.
const ENVELOPE_SLACK: f64 = 0.05;
/// Fraction of `σ_max` used when no rate is requested.
const DEFAULT_SIGMA_FRACTION: f64 = 0.99;
/// Window of the open-loop growth fit.
const GROWTH_WINDOW: (f64, f64) = (2.0, 7.0);

/// Every `stride`-th node is written (or reconstructed) for `O(N²)` artifacts.
pub fn coarse_stride(n: usize) -> usize {
    (n / 100).max(1)
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossError {
    pub t: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeSummary {
    /// Which norm trace the fit used (`fd` or `ide`).
    pub source: String,
    pub peaks: usize,
    /// `max_t |v(t)| e^{σt} / sup|v₀|` at the rate actually used.
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub controller: Controller,
    pub resolution: usize,
    pub horizon: f64,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope: Option<EnvelopeSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cross_pathway: Vec<CrossError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_cross_pathway_error: Option<f64>,
    /// Slope of `ln ‖y‖∞` over the growth window, open loop only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub open_loop_growth: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub manifest: Manifest,
    pub stability: Option<StabilityReport>,
    pub open_loop: Option<OpenLoopReport>,
    pub summary: Summary,
}

/// Kernels and gain of a problem.
pub struct Design {
    pub k: TriangularKernel,
    pub l: TriangularKernel,
    pub gain: GainProfile,
}

impl Design {
    pub fn solve(problem: &ProblemData, n: usize) -> Result<Self> {
        let k = solve_kernel_k(problem, n, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        let l = solve_kernel_l(problem, n, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        let gain = build_gain(problem, &k, &l)?;
        Ok(Design { k, l, gain })
    }

    /// Writes `kernel_k.csv`, `kernel_l.csv` (strided) and `gain.csv`.
    pub fn write(&self, out: &mut OutputDir) -> Result<()> {
        let stride = coarse_stride(self.gain.resolution());
        out.write("kernel_k.csv", |w| csv_out::write_kernel(w, &self.k, stride))?;
        out.write("kernel_l.csv", |w| csv_out::write_kernel(w, &self.l, stride))?;
        out.write("gain.csv", |w| csv_out::write_gain(w, &self.gain))
    }
}

fn write_profile(out: &mut OutputDir, pathway: &str, profile: &StateProfile) -> Result<()> {
    let name = format!("profile_{pathway}_t{}.csv", time_tag(profile.t));
    out.write(&name, |w| csv_out::write_profile(w, profile))
}

/// Runs a validated scenario and writes its artifacts to `cfg.output_dir`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let mut out = OutputDir::create(&cfg.output_dir)?;
    let mut summary = Summary {
        controller: cfg.controller,
        resolution: cfg.resolution,
        horizon: cfg.horizon,
        warnings: Vec::new(),
        envelope: None,
        cross_pathway: Vec::new(),
        max_cross_pathway_error: None,
        open_loop_growth: None,
    };
    let (stability, open_loop) = match cfg.controller {
        Controller::Emulated => (Some(closed_loop(cfg, &mut out, &mut summary)?), None),
        Controller::OpenLoop => (None, open_loop_run(cfg, &mut out, &mut summary)?),
    };
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    out.write_json("summary.json", &summary)?;
    Ok(ScenarioOutcome {
        manifest: out.finish()?,
        stability,
        open_loop,
        summary,
    })
}

/// Sup-norm of the reconstructed plant state every `stride` steps.
fn ide_norm_trace(run: &IdeRun, l: &TriangularKernel, stride: usize) -> Result<Trace> {
    let n = run.resolution();
    let dt = 1.0 / n as f64;
    let values = (0..run.v_trace.len())
        .step_by(stride)
        .map(|idx| reconstruct_y(run, l, idx as f64 * dt).map(|y| y.sup_norm()))
        .collect::<zohpde::Result<Vec<f64>>>()?;
    Ok(Trace::new(0.0, stride as f64 * dt, values))
}

fn closed_loop(cfg: &ScenarioConfig, out: &mut OutputDir, summary: &mut Summary) -> Result<StabilityReport> {
    let n = cfg.resolution;
    let sched_cfg = cfg.schedule.as_ref().expect("validated");
    let design = Design::solve(&cfg.problem, n)?;
    design.write(out)?;
    let gain = &design.gain;
    let schedule = make_schedule(sched_cfg.kind, sched_cfg.period, cfg.horizon, sched_cfg.seed, n)?;

    let sigma_max = max_sigma(gain.m, gain.a, sched_cfg.period)?;
    let sigma_used = match (cfg.sigma_request, sigma_max) {
        (Some(s), _) => s,
        (None, Bound::Finite(s)) => DEFAULT_SIGMA_FRACTION * s,
        (None, _) => 0.0,
    };
    match sigma_max {
        Bound::Infeasible => summary.warnings.push(format!(
            "no decay rate is certified for T = {} (M p_a(T) >= 1); simulating anyway",
            sched_cfg.period
        )),
        Bound::Finite(s) if sigma_used >= s => summary.warnings.push(format!(
            "requested rate {sigma_used} is not below sigma_max = {s}; simulating anyway"
        )),
        _ => {}
    }

    let ide = if cfg.pathways.ide() {
        Some(ide_pathway(cfg, &design, &schedule, out)?)
    } else {
        None
    };
    let fd = if cfg.pathways.fd() {
        Some(fd_pathway(cfg, FdControl::Sampled { schedule: &schedule, k: &design.k }, out)?)
    } else {
        None
    };

    if let (Some((ide, _)), Some(fd)) = (&ide, &fd) {
        for profile in &fd.profiles {
            let y = reconstruct_y(ide, &design.l, profile.t)?;
            summary.cross_pathway.push(CrossError {
                t: profile.t,
                error: y.sup_distance(profile),
            });
        }
        summary.max_cross_pathway_error = summary.cross_pathway.iter().map(|c| c.error).reduce(f64::max);
    }

    // Fit on the finite-difference norm when available: it is exact at every step.
    let (source, norm) = match (&fd, &ide) {
        (Some(fd), _) => ("fd", &fd.supnorm_trace),
        (None, Some((_, norm))) => ("ide", norm),
        (None, None) => unreachable!("validated pathways"),
    };
    let fit = fit_norm(norm, cfg.horizon, summary);

    // The envelope is checked on the boundary trace of the transformed state.
    let (v, v0_sup) = match (&ide, &fd) {
        (Some((ide, _)), _) => (&ide.v_trace, ide.initial_sup()),
        (None, Some(fd)) => {
            let y0 = StateProfile::new(0.0, cfg.initial_condition.sample_1d(n)?);
            (fd.v_trace.as_ref().expect("closed loop"), forward_transform(&y0, &design.k)?.sup_norm())
        }
        (None, None) => unreachable!("validated pathways"),
    };
    let check = check_decay_envelope(v, v0_sup, sigma_used, ENVELOPE_SLACK);
    summary.envelope = Some(EnvelopeSummary {
        source: source.into(),
        peaks: fit.map_or(0, |f| f.peaks),
        worst_ratio: check.worst_ratio,
    });

    let report = StabilityReport {
        m: gain.m,
        a: gain.a,
        t: sched_cfg.period,
        sigma_max,
        sigma_used,
        g_fit: fit.map_or(0.0, |f| f.g_fit),
        sigma_fit: fit.map_or(0.0, |f| f.sigma_fit),
        envelope_ok: check.ok,
    };
    out.write_json("stability_report.json", &report)?;
    Ok(report)
}

fn fit_norm(norm: &Trace, horizon: f64, summary: &mut Summary) -> Option<EnvelopeFit> {
    if horizon <= FIT_START {
        summary
            .warnings
            .push(format!("horizon {horizon} leaves no data after the dead time; envelope fit skipped"));
        return None;
    }
    match fit_envelope(norm, FIT_START) {
        Ok(fit) => Some(fit),
        Err(e) => {
            summary.warnings.push(format!("envelope fit skipped: {e}"));
            None
        }
    }
}

fn ide_pathway(
    cfg: &ScenarioConfig,
    design: &Design,
    schedule: &SamplingSchedule,
    out: &mut OutputDir,
) -> Result<(IdeRun, Trace)> {
    let history = history_from_initial(&cfg.initial_condition, &design.k)?;
    let run = solve_ide(&design.gain, schedule, &history, cfg.horizon)?;
    out.write("ide_trace.csv", |w| {
        csv_out::write_traces(w, &[("v", &run.v_trace), ("u", &run.u_trace)])
    })?;
    out.write("ide_jumps.csv", |w| csv_out::write_jumps(w, &run.jumps))?;
    let norm = ide_norm_trace(&run, &design.l, coarse_stride(cfg.resolution))?;
    out.write("ide_norm.csv", |w| csv_out::write_traces(w, &[("supnorm", &norm)]))?;
    for &t in &cfg.snapshot_times {
        write_profile(out, "ide", &reconstruct_y(&run, &design.l, t)?)?;
    }
    Ok((run, norm))
}

fn fd_pathway(cfg: &ScenarioConfig, control: FdControl<'_>, out: &mut OutputDir) -> Result<FdRun> {
    let run = simulate_fd(
        &cfg.problem,
        control,
        &cfg.initial_condition,
        cfg.horizon,
        cfg.resolution,
        &cfg.snapshot_times,
    )?;
    out.write("fd_trace.csv", |w| {
        csv_out::write_traces(
            w,
            &[("y1", &run.y1_trace), ("u", &run.u_trace), ("supnorm", &run.supnorm_trace)],
        )
    })?;
    for profile in &run.profiles {
        write_profile(out, "fd", profile)?;
    }
    Ok(run)
}

/// `(A, r)` when the plant is the exponential example with `f = p = 0`.
fn exp_example(problem: &ProblemData) -> Option<(f64, f64)> {
    match (&problem.g, problem.f.is_zero(), problem.p.is_zero()) {
        (FunctionSpec::ExpExample { amplitude, r }, true, true) => Some((*amplitude, *r)),
        _ => None,
    }
}

fn open_loop_run(
    cfg: &ScenarioConfig,
    out: &mut OutputDir,
    summary: &mut Summary,
) -> Result<Option<OpenLoopReport>> {
    if cfg.pathways.ide() {
        summary
            .warnings
            .push("the delay-equation pathway only applies to the closed loop; skipped".into());
    }
    let run = fd_pathway(cfg, FdControl::OpenLoop, out)?;
    let (lo, hi) = (GROWTH_WINDOW.0, GROWTH_WINDOW.1.min(cfg.horizon));
    if hi > lo {
        match fit_log_linear(&run.supnorm_trace, lo, hi) {
            Ok(fit) => summary.open_loop_growth = Some(fit.slope),
            Err(e) => summary.warnings.push(format!("growth fit skipped: {e}")),
        }
    }
    let report = match exp_example(&cfg.problem) {
        Some((amplitude, r)) => {
            let report = open_loop_test(amplitude, r)?;
            out.write_json("open_loop_report.json", &report)?;
            Some(report)
        }
        None => {
            summary
                .warnings
                .push("the open-loop stability test needs g = A exp(rz) with f = p = 0".into());
            None
        }
    };
    Ok(report)
}

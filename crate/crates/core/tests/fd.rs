mod common;

use std::f64::consts::E;

use zohpde::kernels::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use zohpde::*;

#[test]
fn controller_matches_simpson_oracle() {
    // Plain trapezoid error here is about 2.8e-6 at N = 1000, 7e-7 at 2000.
    let n = 2000;
    let problem = ProblemData::exp_example(1.0, 1.0).unwrap();
    let k = TriangularKernel::from_fn(n, |z, s| common::k_exact(1.0, 1.0, z, s));
    let y = common::sampled_profile(common::y0_exact, n);
    let u = controller_u(&y, &problem, &k).unwrap();
    let oracle = common::simpson(|s| -E * ((E - 1.0) * s).exp() * common::y0_exact(s), 0.0, 1.0, 4 * n);
    assert!((oracle - common::frozen::U0).abs() < 1e-12);
    assert!((u - oracle).abs() < 1e-6, "u = {u}, oracle = {oracle}");
}

#[test]
fn zero_problem_flushes_after_one_time_unit() {
    let run = simulate_fd(&ProblemData::zero(), FdControl::OpenLoop, &common::y0_spec(), 3.0, 200, &[1.0, 2.5])
        .unwrap();
    assert!(run.profiles.iter().all(|p| p.sup_norm() == 0.0));
    assert!(run.supnorm_trace.values[200..].iter().all(|&v| v == 0.0));
    assert!(run.supnorm_trace.values[199] > 0.0);
}

#[test]
fn closed_loop_outlet_decays() {
    let n = 500;
    let problem = ProblemData::exp_example(1.0, 1.0).unwrap();
    let k = solve_kernel_k(&problem, n, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let sched = make_schedule(ScheduleKind::Periodic, 0.1, 8.0, 0, n).unwrap();
    let run = simulate_fd(&problem, FdControl::Sampled { schedule: &sched, k: &k }, &common::y0_spec(), 8.0, n, &[])
        .unwrap();
    let early = run.y1_trace.values[..n].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let late = run.y1_trace.values[7 * n..].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    assert!(late < 1e-6 * early, "early {early}, late {late}");
    let fit = fit_envelope(&run.supnorm_trace, 1.0).unwrap();
    assert!(fit.sigma_fit > 1.0);
    // Right after a sample the transformed boundary trace only keeps the
    // O(Δ) quadrature weight of the refreshed inlet node.
    let v = run.v_trace.unwrap();
    for &i in &run.sample_indices {
        let bound = 3.0 / n as f64 * run.supnorm_trace.values[i];
        assert!(v.values[i].abs() <= bound, "sample {i}: {}", v.values[i]);
    }
}

#[test]
fn open_loop_below_threshold_decays() {
    let problem = ProblemData::exp_example(0.5, 1.0).unwrap();
    let run = simulate_fd(&problem, FdControl::OpenLoop, &common::y0_spec(), 10.0, 200, &[]).unwrap();
    let fit = stability::fit_log_linear(&run.supnorm_trace, 2.0, 10.0).unwrap();
    assert!(fit.slope < 0.0);
    assert!(open_loop_test(0.5, 1.0).unwrap().stable);
}

#[test]
fn snapshots_keep_request_order() {
    let run = simulate_fd(&ProblemData::zero(), FdControl::OpenLoop, &common::y0_spec(), 1.0, 100, &[0.5, 0.1])
        .unwrap();
    assert_eq!(run.profiles[0].t, 0.5);
    assert!(run.profile_at(0.1).is_some());
    assert!(run.profile_at(0.3).is_none());
}

mod common;

use zohpde::kernels::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use zohpde::*;

struct Setup {
    n: usize,
    k: TriangularKernel,
    l: TriangularKernel,
    gain: GainProfile,
    history: HistoryBuffer,
}

fn setup(n: usize) -> Setup {
    let problem = ProblemData::exp_example(1.0, 1.0).unwrap();
    let k = solve_kernel_k(&problem, n, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let l = solve_kernel_l(&problem, n, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let gain = build_gain(&problem, &k, &l).unwrap();
    let history = history_from_initial(&common::y0_spec(), &k).unwrap();
    Setup { n, k, l, gain, history }
}

#[test]
fn first_input_matches_quadrature_oracle() {
    let s = setup(1000);
    let sched = make_schedule(ScheduleKind::Periodic, 0.1, 1.0, 0, s.n).unwrap();
    let run = solve_ide(&s.gain, &sched, &s.history, 1.0).unwrap();
    assert!((run.u_trace.values[0] - common::frozen::U0).abs() < 1e-5);
}

#[test]
fn v_vanishes_at_every_sample_and_input_is_held() {
    let s = setup(500);
    let sched = make_schedule(ScheduleKind::Jittered, 0.1, 4.0, 3, s.n).unwrap();
    let run = solve_ide(&s.gain, &sched, &s.history, 4.0).unwrap();
    let samples: Vec<usize> = run.schedule.times().iter().map(|&t| run.v_trace.index_of(t).unwrap()).collect();
    for &i in &samples {
        assert!(run.v_trace.values[i].abs() < 1e-12);
    }
    for i in 1..run.u_trace.len() {
        if run.u_trace.values[i] != run.u_trace.values[i - 1] {
            assert!(samples.contains(&i));
        }
    }
    // One jump per sample, apart from samples where v was already zero.
    assert!(run.jumps.len() <= samples.len() && run.jumps.len() + 1 >= samples.len());
}

#[test]
fn differential_form_agrees() {
    let s = setup(1000);
    let sched = make_schedule(ScheduleKind::Periodic, 0.1, 4.0, 0, s.n).unwrap();
    let run = solve_ide(&s.gain, &sched, &s.history, 4.0).unwrap();
    let ode = solve_ode_form(&s.gain, &sched, &s.history, 4.0).unwrap();
    let diff = run
        .v_trace
        .values
        .iter()
        .zip(&ode.values)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(diff < 1e-5, "max difference {diff}");
}

#[test]
fn reconstruction_at_zero_recovers_initial_profile() {
    let s = setup(400);
    let sched = make_schedule(ScheduleKind::Periodic, 0.1, 1.0, 0, s.n).unwrap();
    let run = solve_ide(&s.gain, &sched, &s.history, 1.0).unwrap();
    let y = reconstruct_y(&run, &s.l, 0.0).unwrap();
    // The inlet node carries the right value set by the first sample.
    for j in 1..=s.n {
        let z = j as f64 / s.n as f64;
        assert!((y.values[j] - common::y0_exact(z)).abs() < 1e-4, "z = {z}");
    }
}

#[test]
fn reconstruction_is_consistent_with_the_mild_solution() {
    let s = setup(400);
    let sched = make_schedule(ScheduleKind::Periodic, 0.1, 2.0, 0, s.n).unwrap();
    let run = solve_ide(&s.gain, &sched, &s.history, 2.0).unwrap();
    let y0 = common::sampled_profile(common::y0_exact, s.n);
    let x0 = forward_transform(&y0, &s.k).unwrap();
    for t in [0.55, 1.5] {
        let y = reconstruct_y(&run, &s.l, t).unwrap();
        let x = forward_transform(&y, &s.k).unwrap();
        let mild = transport_mild(&x0, &run.v_trace, t).unwrap();
        // Compare away from the nodes carrying jumps of v.
        let jump_nodes: Vec<usize> = run
            .jumps
            .iter()
            .filter_map(|j| {
                let lag = (t * s.n as f64).round() as i64 - j.index;
                (0..=s.n as i64).contains(&lag).then_some(lag as usize)
            })
            .collect();
        for z in 0..=s.n {
            if jump_nodes.iter().any(|&m| m.abs_diff(z) <= 1) {
                continue;
            }
            // The forward transform integrates across the jumps of y without
            // splitting them, which costs O(Δ · jump) upstream of each line.
            assert!((x.values[z] - mild.values[z]).abs() < 5e-3, "t = {t}, node {z}");
        }
    }
}

#[test]
fn zero_gain_gives_zero_boundary_trace() {
    let n = 50;
    let gain = GainProfile::zeros(n);
    let history = history_from_initial(&common::y0_spec(), &TriangularKernel::zeros(n)).unwrap();
    let sched = make_schedule(ScheduleKind::Periodic, 0.1, 2.0, 0, n).unwrap();
    let run = solve_ide(&gain, &sched, &history, 2.0).unwrap();
    assert!(run.v_trace.values.iter().all(|&v| v == 0.0));
    assert!(run.initial_sup() > 0.0);
}

#[test]
fn off_grid_schedule_is_rejected() {
    let s = setup(100);
    let sched = SamplingSchedule::new(vec![0.0, 0.105, 0.2], 0.1).unwrap_err();
    assert!(sched.is_input());
    let sched = SamplingSchedule::new(vec![0.0, 0.0995, 0.1990], 0.1).unwrap();
    assert!(solve_ide(&s.gain, &sched, &s.history, 0.2).unwrap_err().is_input());
}

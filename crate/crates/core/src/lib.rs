//! Sampled-data boundary feedback for first-order hyperbolic PIDEs.
//!
//! The crate computes the backstepping kernels and the reduced gain of the
//! emulated controller, simulates the closed loop either through the integral
//! delay equation of the transformed boundary trace or by finite differences
//! on the plant itself, and evaluates the sampling-period stability bound.

// Negated comparisons are how inputs reject NaN; index loops mirror the
// quadrature formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fd;
pub mod function;
pub mod ide;
pub mod io;
pub mod kernels;
pub mod quad;
pub mod schedule;
pub mod stability;
pub mod trace;

pub use error::{Error, Result};
pub use fd::{controller_u, simulate_fd, FdControl, FdRun};
pub use function::{example_initial_profile, Arity, FunctionSpec, ProblemData};
pub use ide::{
    forward_transform, history_from_initial, inverse_transform, reconstruct_y, solve_ide,
    solve_ode_form, transport_mild, HistoryBuffer, IdeRun, Jump,
};
pub use kernels::{
    build_gain, check_inverse_identity, solve_kernel_k, solve_kernel_l, GainProfile,
    TriangularKernel,
};
pub use schedule::{make_schedule, SamplingSchedule, ScheduleKind};
pub use stability::{
    fit_envelope, max_period, max_sigma, open_loop_test, p_a, verify_unstable_mode, Bound,
    OpenLoopReport, StabilityReport,
};
pub use trace::{StateProfile, Trace};

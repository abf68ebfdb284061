//! Direct collocation: the flatness constraints and rigid-body kinematics
//! imposed on a uniform knot grid, solved by Newton's method.
//!
//! Unknowns per knot are the Euler angles, body rates and thrusts. Each
//! interior node carries three force equations and one yaw equation; each
//! interval carries six integration defects. The hover trim closes the
//! system at one end.

mod band;
mod certificate;
mod problem;
mod solve;

pub use band::{BandLu, BandMatrix};
pub use certificate::{certify, knot_residuals};
pub use problem::{
    extra_output_constraints, transcribe, Boundary, CollocationProblem, Counts, ExtraOutputs,
    Layout, Mode,
};
pub use solve::{
    restore_feasibility, solve_min_effort, solve_min_effort_with, solve_square, solve_square_with,
    tangent_projection, SolveOptions, SolveReport, KKT_TOLERANCE, MAX_ITERATIONS, SQUARE_TOLERANCE,
};

/// Knot count used when none is given.
pub const DEFAULT_KNOTS: usize = 100;

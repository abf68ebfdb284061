//! Trajectory generation for multirotors with unaligned propellers.
//!
//! Position and heading are flat outputs for these vehicles. This crate
//! recovers attitude and thrusts from a flat trajectory either by integrating
//! the flatness ODEs directly or by direct collocation, and replays the result
//! through the rigid-body dynamics.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collocation;
pub mod error;
pub mod flat;
pub mod flatness;
pub mod ode;
pub mod scalar;
pub mod se3;
pub mod simulation;
pub mod trajectory;
pub mod vehicle;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision aliases for the generic core types.
pub mod f64 {
    pub type Vehicle = crate::vehicle::Vehicle<f64>;
    pub type FlatTrajectory = crate::flat::FlatTrajectory<f64>;
    pub type StateTrajectory = crate::trajectory::StateTrajectory<f64>;
    pub type CollocationProblem = crate::collocation::CollocationProblem<f64>;
    pub type EulerAngles = crate::se3::EulerAngles<f64>;
}

/// Single-precision aliases for the generic core types.
pub mod f32 {
    pub type Vehicle = crate::vehicle::Vehicle<f32>;
    pub type FlatTrajectory = crate::flat::FlatTrajectory<f32>;
    pub type StateTrajectory = crate::trajectory::StateTrajectory<f32>;
    pub type CollocationProblem = crate::collocation::CollocationProblem<f32>;
    pub type EulerAngles = crate::se3::EulerAngles<f32>;
}

//! Recovering attitude and inputs from the flat output by integrating the
//! flatness ODEs directly.

pub mod rank2;
pub mod rank3;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::flat::FlatSample;
use crate::scalar::{lit, Real};
use crate::se3::{minimal_rotation_to, rot_z, RotationMatrix};

pub use rank2::{
    hover_theta_t, integrate_rank2, rank2_ode_rhs, roll_pitch, thrust_identity_defect, Rank2Eval,
    Rank2State,
};
pub use rank3::{
    hover_initial_state, integrate_rank3, integrate_rank3_span, rank3_rhs, Rank3State,
};

/// Heading-frame thrust demand `f = Rz(sigma_4)^T (sigma'' - g)` with
/// `g = [0, 0, -gravity]`.
pub fn thrust_demand<T: Real>(sample: &FlatSample<T>, gravity: T) -> Vector3<T> {
    let g = Vector3::new(T::zero(), T::zero(), -gravity);
    rot_z(sample.yaw(0)).transpose() * (sample.pos(2) - g)
}

/// The rotation taking `e1` onto the thrust demand, with the demand itself.
pub fn theta_f<T: Real>(
    sample: &FlatSample<T>,
    gravity: T,
) -> Result<(RotationMatrix<T>, Vector3<T>)> {
    let f = thrust_demand(sample, gravity);
    let n = f.norm();
    if n <= lit(1e-6) {
        return Err(Error::FreeFall(n.as_f64()));
    }
    Ok((minimal_rotation_to(&f)?, f))
}

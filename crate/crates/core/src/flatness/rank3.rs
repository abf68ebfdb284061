//! Full-rank allocation: attitude follows from a second-order ODE driven by
//! the flat output.

use nalgebra::{DVector, SMatrix, SVector, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::flat::{FlatSample, FlatTrajectory};
use crate::ode::rk4_step;
use crate::scalar::{lit, Real};
use crate::se3::{euler_rate_matrix, euler_rate_matrix_inverse, euler_to_rotation, EulerAngles};
use crate::trajectory::{Source, StateTrajectory};
use crate::vehicle::{hover_solve, Vehicle};

/// Attitude and body rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rank3State<T: Real> {
    pub angles: EulerAngles<T>,
    pub omega: Vector3<T>,
}

impl<T: Real> Rank3State<T> {
    fn to_vector(self) -> Vector6<T> {
        let a = self.angles.to_vector();
        Vector6::new(
            a[0],
            a[1],
            a[2],
            self.omega[0],
            self.omega[1],
            self.omega[2],
        )
    }

    fn from_vector(x: &Vector6<T>) -> Self {
        Self {
            angles: EulerAngles::new(x[0], x[1], x[2]),
            omega: Vector3::new(x[3], x[4], x[5]),
        }
    }
}

/// Row of `E^-1` giving the yaw rate, and its partials in roll and pitch.
fn yaw_row<T: Real>(a: EulerAngles<T>) -> [Vector3<T>; 3] {
    let (sf, cf) = a.roll.sin_cos();
    let (st, ct) = a.pitch.sin_cos();
    let z = T::zero();
    [
        Vector3::new(z, sf / ct, cf / ct),
        Vector3::new(z, cf / ct, -sf / ct),
        Vector3::new(z, sf * st / (ct * ct), cf * st / (ct * ct)),
    ]
}

/// Thrusts and angular acceleration consistent with the flat sample at the
/// given attitude and rates.
///
/// Solves force balance (3), Euler's equation (3) and the yaw-acceleration
/// condition `psi'' = sigma_4''` (1) for the four thrusts and `omega'`.
pub fn rank3_rhs<T: Real>(
    sample: &FlatSample<T>,
    angles: EulerAngles<T>,
    omega: &Vector3<T>,
    vehicle: &Vehicle<T>,
) -> Result<(DVector<T>, Vector3<T>)> {
    if vehicle.n() != 4 || vehicle.rank_a() != 3 {
        return Err(Error::InfeasibleMethod(format!(
            "rank-3 flatness needs N = 4 and rank(A) = 3, got N = {} and rank {}",
            vehicle.n(),
            vehicle.rank_a()
        )));
    }
    let rot = euler_to_rotation(angles);
    let theta_dot = euler_rate_matrix_inverse(angles)? * omega;
    let [row, d_roll, d_pitch] = yaw_row(angles);
    let row_dot = d_roll * theta_dot[0] + d_pitch * theta_dot[1];

    let mut m = SMatrix::<T, 7, 7>::zeros();
    let mut rhs = SVector::<T, 7>::zeros();
    let accel = sample.pos(2) - vehicle.gravity_vector();
    let force = rot.matrix().transpose() * accel * vehicle.mass();
    let j = vehicle.inertia();
    let gyro = omega.cross(&(j * omega));
    for i in 0..3 {
        for k in 0..4 {
            m[(i, k)] = vehicle.a()[(i, k)];
            m[(3 + i, k)] = -vehicle.b()[(i, k)];
        }
        for k in 0..3 {
            m[(3 + i, 4 + k)] = j[(i, k)];
        }
        m[(6, 4 + i)] = row[i];
        rhs[i] = force[i];
        rhs[3 + i] = -gyro[i];
    }
    rhs[6] = sample.yaw(2) - row_dot.dot(omega);
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularSystem("rank-3 input/acceleration system"))?;
    let u = DVector::from_iterator(4, sol.iter().take(4).copied());
    let omega_dot = Vector3::new(sol[4], sol[5], sol[6]);
    Ok((u, omega_dot))
}

/// Hover attitude with the trajectory's initial yaw and matching yaw rate.
pub fn hover_initial_state<T: Real>(
    traj: &FlatTrajectory<T>,
    vehicle: &Vehicle<T>,
) -> Result<Rank3State<T>> {
    let hover = hover_solve(vehicle)?;
    let s = traj.eval(T::zero());
    let angles = EulerAngles::new(hover.angles.roll, hover.angles.pitch, s.yaw(0));
    let omega = euler_rate_matrix(angles)? * Vector3::new(T::zero(), T::zero(), s.yaw(1));
    Ok(Rank3State { angles, omega })
}

/// RK4 integration of `theta' = E^-1 omega`, `omega'` from [`rank3_rhs`],
/// starting at `t = 0`.
pub fn integrate_rank3<T: Real>(
    traj: &FlatTrajectory<T>,
    x0: Rank3State<T>,
    vehicle: &Vehicle<T>,
    steps: usize,
) -> Result<StateTrajectory<T>> {
    integrate_rank3_span(traj, x0, T::zero(), traj.tf(), vehicle, steps)
}

/// Integrates from `t0` to `t1`; `t1 < t0` runs backward in time. The
/// returned knots are always in increasing time.
pub fn integrate_rank3_span<T: Real>(
    traj: &FlatTrajectory<T>,
    x0: Rank3State<T>,
    t0: T,
    t1: T,
    vehicle: &Vehicle<T>,
    steps: usize,
) -> Result<StateTrajectory<T>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("step count must be positive".into()));
    }
    let h = (t1 - t0) / lit(steps as f64);
    let mut f = |t: T, x: &Vector6<T>| -> Result<Vector6<T>> {
        let s = Rank3State::from_vector(x);
        let sample = traj.eval(t);
        let (_, wd) = rank3_rhs(&sample, s.angles, &s.omega, vehicle)?;
        let td = euler_rate_matrix_inverse(s.angles)? * s.omega;
        Ok(Vector6::new(td[0], td[1], td[2], wd[0], wd[1], wd[2]))
    };
    let mut out = StateTrajectory {
        source: Source::AnalyticRank3,
        times: Vec::with_capacity(steps + 1),
        angles: Vec::with_capacity(steps + 1),
        rates: Vec::with_capacity(steps + 1),
        inputs: Vec::with_capacity(steps + 1),
        mid_inputs: None,
    };
    let mut x = x0.to_vector();
    for k in 0..=steps {
        let t = if k == steps {
            t1
        } else {
            t0 + h * lit(k as f64)
        };
        let s = Rank3State::from_vector(&x);
        let (u, _) = rank3_rhs(&traj.eval(t), s.angles, &s.omega, vehicle)?;
        out.times.push(t);
        out.angles.push(s.angles);
        out.rates.push(s.omega);
        out.inputs.push(u);
        if k < steps {
            x = rk4_step(&mut f, t, &x, h)?;
        }
    }
    if h < T::zero() {
        out.times.reverse();
        out.angles.reverse();
        out.rates.reverse();
        out.inputs.reverse();
    }
    Ok(out)
}

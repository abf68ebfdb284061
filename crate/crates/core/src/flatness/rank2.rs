//! Rank-2 allocation: one attitude angle `Theta_T` stays free and obeys a
//! second-order ODE in the SVD-reframed body basis.

use nalgebra::{DVector, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::flat::{FlatSample, FlatTrajectory};
use crate::ode::rk4_step;
use crate::scalar::{lit, Real};
use crate::se3::{rot_x, rot_y, rot_z, vee_skew_part, EulerAngles};
use crate::trajectory::{Source, StateTrajectory};
use crate::vehicle::{hover_solve, ReframedVehicle};

use super::thrust_demand;

/// The free attitude angle and its rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rank2State<T: Real> {
    pub theta_t: T,
    pub theta_t_dot: T,
}

/// Everything [`rank2_ode_rhs`] recovers at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank2Eval<T: Real> {
    pub theta_t_ddot: T,
    /// Reframed inputs `V^T u`.
    pub u_bar: DVector<T>,
    /// Physical inputs `V u_bar`.
    pub u: DVector<T>,
    pub angles: EulerAngles<T>,
    /// Physical body rates.
    pub omega: Vector3<T>,
    /// Reframed body rates `Q^T omega` and their derivative.
    pub omega_bar: Vector3<T>,
    pub omega_bar_dot: Vector3<T>,
}

fn wrap<T: Real>(a: T) -> T {
    let pi = T::pi();
    let two_pi = T::two_pi();
    a - two_pi * ((a + pi) / two_pi).floor()
}

/// Roll and pitch of the physical attitude for a given thrust demand and
/// `Theta_T`. The reframed attitude is `Rz(sigma_4) Ry(pitch) Rx(roll) Q`,
/// which keeps the physical Euler yaw equal to `sigma_4` while aligning the
/// reframed thrust plane with the demand.
pub fn roll_pitch<T: Real>(
    demand: &Vector3<T>,
    theta_t: T,
    reframed: &ReframedVehicle<T>,
) -> Result<(T, T)> {
    let f = demand / demand.norm();
    let (st, ct) = theta_t.sin_cos();
    let b = reframed.q * Vector3::new(ct, -st, T::zero());
    // Ry(pitch)^T f and Rx(roll) b share their x component
    let r = f[0].hypot(f[2]);
    if r < b[0].abs() {
        return Err(Error::SingularSystem(
            "thrust plane cannot reach the demanded direction",
        ));
    }
    let gamma = f[2].atan2(f[0]);
    let base = (b[0] / r).clamp(-T::one(), T::one()).acos();
    let p1 = wrap(base - gamma);
    let p2 = wrap(-base - gamma);
    let pitch = if p1.abs() <= p2.abs() { p1 } else { p2 };
    let v = rot_y(pitch).transpose() * f;
    let roll = wrap(v[2].atan2(v[1]) - b[2].atan2(b[1]));
    Ok((roll, pitch))
}

/// `Rz(sigma_4) Ry(pitch) Rx(roll) Q` for a local flat-output state.
fn reframed_rotation<T: Real>(
    accel: &Vector3<T>,
    yaw: T,
    theta_t: T,
    reframed: &ReframedVehicle<T>,
) -> Result<Matrix3<T>> {
    let g = reframed.vehicle.gravity_vector();
    let demand = rot_z(yaw).transpose() * (accel - g);
    let (roll, pitch) = roll_pitch(&demand, theta_t, reframed)?;
    Ok(rot_z(yaw) * rot_y(pitch) * rot_x(roll) * reframed.q)
}

/// Reframed attitude at time offset `s` along the path with constant
/// `Theta_T` rate, using the local Taylor expansion of the flat output.
fn rotation_along<T: Real>(
    sample: &FlatSample<T>,
    state: &Rank2State<T>,
    s: T,
    reframed: &ReframedVehicle<T>,
) -> Result<Matrix3<T>> {
    let half = lit::<T>(0.5) * s * s;
    let accel = sample.pos(2) + sample.pos(3) * s + sample.pos(4) * half;
    let yaw = sample.yaw(0) + sample.yaw(1) * s + sample.yaw(2) * half;
    reframed_rotation(&accel, yaw, state.theta_t + state.theta_t_dot * s, reframed)
}

/// `Theta_T''` and the inputs at one instant.
///
/// The first two reframed inputs come from the force balance; the last two
/// and `Theta_T''` from the reframed Euler equation. Rates and their
/// derivatives are evaluated by central differences of the reframed attitude.
pub fn rank2_ode_rhs<T: Real>(
    sample: &FlatSample<T>,
    state: Rank2State<T>,
    reframed: &ReframedVehicle<T>,
) -> Result<Rank2Eval<T>> {
    let veh = &reframed.vehicle;
    if veh.n() != 4 {
        return Err(Error::InfeasibleMethod(format!(
            "rank-2 flatness needs N = 4, got {}",
            veh.n()
        )));
    }
    let two = lit::<T>(2.0);
    let h2 = T::default_epsilon().powf(lit(0.25));
    let r0 = rotation_along(sample, &state, T::zero(), reframed)?;
    let rp = rotation_along(sample, &state, h2, reframed)?;
    let rm = rotation_along(sample, &state, -h2, reframed)?;
    let rd = (rp - rm) / (two * h2);
    let rdd = (rp - r0 * two + rm) / (h2 * h2);
    let w = r0.transpose() * rd;
    let omega_bar = vee_skew_part(&w);
    let xi_dot = vee_skew_part(&(r0.transpose() * rdd - w * w));

    let h1 = T::default_epsilon().cbrt();
    let shift = |d: T| {
        let st = Rank2State {
            theta_t: state.theta_t + d,
            theta_t_dot: state.theta_t_dot,
        };
        rotation_along(sample, &st, T::zero(), reframed)
    };
    let a = vee_skew_part(&(r0.transpose() * (shift(h1)? - shift(-h1)?) / (two * h1)));

    let g = veh.gravity_vector();
    let demand = rot_z(sample.yaw(0)).transpose() * (sample.pos(2) - g);
    let thrust = demand.norm() * veh.mass();
    let (st, ct) = state.theta_t.sin_cos();
    let lam = reframed.lambda;
    let u12 = Vector2::new(ct * thrust / lam[0], -st * thrust / lam[1]);

    let jb = reframed.j_bar;
    let bb = &reframed.b_bar;
    let ja = jb * a;
    let m = Matrix3::from_columns(&[-bb.column(2), -bb.column(3), ja]);
    let rhs = bb.column(0) * u12[0] + bb.column(1) * u12[1]
        - omega_bar.cross(&(jb * omega_bar))
        - jb * xi_dot;
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularSystem("rank-2 elimination block"))?;
    let u_bar = DVector::from_vec(vec![u12[0], u12[1], sol[0], sol[1]]);
    let u = &reframed.v * &u_bar;
    let (roll, pitch) = roll_pitch(&demand, state.theta_t, reframed)?;
    Ok(Rank2Eval {
        theta_t_ddot: sol[2],
        omega: reframed.q * omega_bar,
        omega_bar_dot: a * sol[2] + xi_dot,
        omega_bar,
        u,
        u_bar,
        angles: EulerAngles::new(roll, pitch, sample.yaw(0)),
    })
}

/// `Theta_T` that reproduces the hover trim of the reframed vehicle.
pub fn hover_theta_t<T: Real>(reframed: &ReframedVehicle<T>) -> Result<T> {
    let hover = hover_solve(&reframed.vehicle)?;
    let ub = reframed.v.transpose() * &hover.u;
    Ok((-reframed.lambda[1] * ub[1]).atan2(reframed.lambda[0] * ub[0]))
}

/// RK4 integration of `(Theta_T, Theta_T')` over the whole trajectory.
pub fn integrate_rank2<T: Real>(
    traj: &FlatTrajectory<T>,
    x0: Rank2State<T>,
    reframed: &ReframedVehicle<T>,
    steps: usize,
) -> Result<(StateTrajectory<T>, Vec<Rank2State<T>>)> {
    if steps == 0 {
        return Err(Error::InvalidArgument("step count must be positive".into()));
    }
    let h = traj.tf() / lit(steps as f64);
    let mut f = |t: T, x: &Vector2<T>| -> Result<Vector2<T>> {
        let st = Rank2State {
            theta_t: x[0],
            theta_t_dot: x[1],
        };
        let ev = rank2_ode_rhs(&traj.eval(t), st, reframed)?;
        Ok(Vector2::new(x[1], ev.theta_t_ddot))
    };
    let mut out = StateTrajectory {
        source: Source::AnalyticRank2,
        times: Vec::with_capacity(steps + 1),
        angles: Vec::with_capacity(steps + 1),
        rates: Vec::with_capacity(steps + 1),
        inputs: Vec::with_capacity(steps + 1),
        mid_inputs: None,
    };
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = Vector2::new(x0.theta_t, x0.theta_t_dot);
    for k in 0..=steps {
        let t = if k == steps {
            traj.tf()
        } else {
            h * lit(k as f64)
        };
        let st = Rank2State {
            theta_t: x[0],
            theta_t_dot: x[1],
        };
        let ev = rank2_ode_rhs(&traj.eval(t), st, reframed)?;
        out.times.push(t);
        out.angles.push(ev.angles);
        out.rates.push(ev.omega);
        out.inputs.push(ev.u);
        states.push(st);
        if k < steps {
            x = rk4_step(&mut f, t, &x, h)?;
        }
    }
    Ok((out, states))
}

/// Thrust-magnitude identity `lambda1^2 u1^2 + lambda2^2 u2^2 = |m f|^2`,
/// returned as its relative defect.
pub fn thrust_identity_defect<T: Real>(
    sample: &FlatSample<T>,
    u_bar: &DVector<T>,
    reframed: &ReframedVehicle<T>,
) -> T {
    let veh = &reframed.vehicle;
    let f = thrust_demand(sample, veh.gravity()) * veh.mass();
    let lam = reframed.lambda;
    let lhs = (lam[0] * u_bar[0]).powi(2) + (lam[1] * u_bar[1]).powi(2);
    let target = f.norm_squared();
    (lhs - target).abs() / target
}

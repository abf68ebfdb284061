//! Independent residual check of a collocation solution.
//!
//! Deliberately shares no evaluation code with the transcription: the
//! attitude is applied as three elementary rotations, `E` is inverted by LU,
//! and the angular acceleration comes from a solve against `J`.

use nalgebra::{DVector, Matrix3, Vector3, Vector6};

use super::problem::{Boundary, CollocationProblem};
use crate::error::{Error, Result};
use crate::flat::FlatTrajectory;
use crate::scalar::{lit, Real};
use crate::se3::EulerAngles;
use crate::trajectory::{Scheme, StateTrajectory};
use crate::vehicle::Vehicle;

/// `R^T v` for `R = Rz Ry Rx`, applied one axis at a time.
fn to_body<T: Real>(a: &EulerAngles<T>, v: Vector3<T>) -> Vector3<T> {
    let (s, c) = a.yaw.sin_cos();
    let v = Vector3::new(c * v[0] + s * v[1], -s * v[0] + c * v[1], v[2]);
    let (s, c) = a.pitch.sin_cos();
    let v = Vector3::new(c * v[0] - s * v[2], v[1], s * v[0] + c * v[2]);
    let (s, c) = a.roll.sin_cos();
    Vector3::new(v[0], c * v[1] + s * v[2], -s * v[1] + c * v[2])
}

fn rhs<T: Real>(p: &CollocationProblem<T>, x: &Vector6<T>, u: &DVector<T>) -> Result<Vector6<T>> {
    let (phi, th) = (x[0], x[1]);
    let e = Matrix3::new(
        T::one(),
        T::zero(),
        -th.sin(),
        T::zero(),
        phi.cos(),
        phi.sin() * th.cos(),
        T::zero(),
        -phi.sin(),
        phi.cos() * th.cos(),
    );
    let w = Vector3::new(x[3], x[4], x[5]);
    let ang = e
        .lu()
        .solve(&w)
        .ok_or(Error::SingularSystem("Euler-rate matrix"))?;
    let j = *p.vehicle.inertia();
    let mut torque = -w.cross(&(j * w));
    for (i, prop) in p.vehicle.propellers().iter().enumerate() {
        torque += (prop.r.cross(&prop.v) + prop.v * prop.c) * u[i];
    }
    let wd = j
        .lu()
        .solve(&torque)
        .ok_or(Error::SingularSystem("inertia"))?;
    Ok(Vector6::new(ang[0], ang[1], ang[2], wd[0], wd[1], wd[2]))
}

fn body_thrust<T: Real>(veh: &Vehicle<T>, u: &DVector<T>) -> Vector3<T> {
    let mut thrust = Vector3::zeros();
    for (i, prop) in veh.propellers().iter().enumerate() {
        thrust += prop.v * u[i];
    }
    thrust
}

fn force_and_yaw<T: Real>(
    veh: &Vehicle<T>,
    flat: &FlatTrajectory<T>,
    a: &EulerAngles<T>,
    u: &DVector<T>,
    t: T,
) -> T {
    let s = flat.eval(t);
    let acc = s.pos(2) + Vector3::z() * veh.gravity();
    let force = body_thrust(veh, u) - to_body(a, acc) * veh.mass();
    force.amax().max((a.yaw - s.yaw(0)).abs())
}

/// Per-knot force-balance and heading residual of any trajectory, whatever
/// produced it. Does not need a transcription, so it also checks analytic
/// solutions and trajectories read back from disk.
pub fn knot_residuals<T: Real>(
    vehicle: &Vehicle<T>,
    flat: &FlatTrajectory<T>,
    traj: &StateTrajectory<T>,
) -> Result<Vec<T>> {
    if traj.inputs.iter().any(|u| u.len() != vehicle.n()) {
        return Err(Error::InvalidArgument(
            "input count does not match the vehicle".into(),
        ));
    }
    Ok((0..traj.len())
        .map(|k| {
            force_and_yaw(
                vehicle,
                flat,
                &traj.angles[k],
                &traj.inputs[k],
                traj.times[k],
            )
        })
        .collect())
}

fn path<T: Real>(p: &CollocationProblem<T>, x: &Vector6<T>, u: &DVector<T>, t: T) -> T {
    let a = EulerAngles::new(x[0], x[1], x[2]);
    let mut worst = force_and_yaw(&p.vehicle, &p.flat, &a, u, t);
    if let Some(e) = p.extra {
        let thrust = body_thrust(&p.vehicle, u);
        let n = thrust.norm();
        worst = worst
            .max((thrust[0] / n - e.sigma5).abs())
            .max((thrust[1] / n - e.sigma6).abs());
    }
    worst
}

fn state<T: Real>(traj: &StateTrajectory<T>, k: usize) -> Vector6<T> {
    let a = traj.angles[k];
    let w = traj.rates[k];
    Vector6::new(a.roll, a.pitch, a.yaw, w[0], w[1], w[2])
}

/// Infinity norm of path, defect and boundary residuals of `traj` against
/// `problem`.
pub fn certify<T: Real>(problem: &CollocationProblem<T>, traj: &StateTrajectory<T>) -> Result<T> {
    let n = traj.len() - 1;
    if n != problem.intervals() {
        return Err(Error::InvalidArgument(
            "trajectory does not match grid".into(),
        ));
    }
    let h = problem.flat.tf() / lit(n as f64);
    let euler = problem.scheme == Scheme::Euler;
    let initial = matches!(problem.boundary, Boundary::Initial | Boundary::Both);
    let terminal = matches!(problem.boundary, Boundary::Terminal | Boundary::Both);
    let mut worst = T::zero();

    for k in 0..=n {
        let pinned = (k == 0 && initial) || (k == n && problem.boundary == Boundary::Terminal);
        if pinned || (euler && k == n) {
            continue;
        }
        worst = worst.max(path(
            problem,
            &state(traj, k),
            &traj.inputs[k],
            traj.times[k],
        ));
    }
    for k in 0..n {
        let (x0, x1) = (state(traj, k), state(traj, k + 1));
        let f0 = rhs(problem, &x0, &traj.inputs[k])?;
        let d = match problem.scheme {
            Scheme::Euler => x1 - x0 - f0 * h,
            Scheme::Trapezoidal => {
                let f1 = rhs(problem, &x1, &traj.inputs[k + 1])?;
                x1 - x0 - (f0 + f1) * (h / lit::<T>(2.0))
            }
            Scheme::HermiteSimpson => {
                let um = &traj
                    .mid_inputs
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("missing midpoint inputs".into()))?[k];
                let f1 = rhs(problem, &x1, &traj.inputs[k + 1])?;
                let xm = (x0 + x1) / lit::<T>(2.0) + (f0 - f1) * (h / lit(8.0));
                let fm = rhs(problem, &xm, um)?;
                let tm = (traj.times[k] + traj.times[k + 1]) / lit(2.0);
                worst = worst.max(path(problem, &xm, um, tm));
                x1 - x0 - (f0 + fm * lit::<T>(4.0) + f1) * (h / lit(6.0))
            }
        };
        worst = worst.max(d.amax());
    }

    let hover = &problem.hover;
    let ends = [
        (0, initial, true),
        (
            n,
            terminal,
            problem.boundary == Boundary::Terminal && !euler,
        ),
    ];
    for (k, applies, inputs) in ends {
        if !applies {
            continue;
        }
        let s = problem.flat.eval(traj.times[k]);
        let a = EulerAngles::new(hover.angles.roll, hover.angles.pitch, s.yaw(0));
        let w = Vector3::new(
            -a.pitch.sin() * s.yaw(1),
            a.roll.sin() * a.pitch.cos() * s.yaw(1),
            a.roll.cos() * a.pitch.cos() * s.yaw(1),
        );
        let target = Vector6::new(a.roll, a.pitch, a.yaw, w[0], w[1], w[2]);
        let x = state(traj, k);
        if k == n && problem.boundary == Boundary::Both {
            // roll and pitch at hover with zero rates; yaw follows the path
            let idle = DVector::zeros(problem.vehicle.n());
            let rates = rhs(problem, &x, &idle)?;
            let err = [x[0] - a.roll, x[1] - a.pitch, rates[0], rates[1]];
            for e in err {
                worst = worst.max(e.abs());
            }
            continue;
        }
        worst = worst.max((x - target).amax());
        if inputs {
            worst = worst.max((&traj.inputs[k] - &hover.u).amax());
        }
    }
    Ok(worst)
}

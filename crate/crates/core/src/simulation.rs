//! Open-loop replay of input schedules through the rigid-body dynamics.

use nalgebra::{DVector, SVector, Vector3};

use crate::error::{Error, Result};
use crate::flat::FlatTrajectory;
use crate::ode::rk4_step;
use crate::scalar::{lit, Real};
use crate::se3::{euler_rate_matrix_inverse, euler_to_rotation, EulerAngles};
use crate::trajectory::{Scheme, Source, StateTrajectory};
use crate::vehicle::Vehicle;

/// Position guard for [`forward_simulate`], m.
pub const DIVERGENCE_LIMIT: f64 = 1e3;

/// `[P, P', theta, omega]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullState<T: Real> {
    pub p: Vector3<T>,
    pub v: Vector3<T>,
    pub angles: EulerAngles<T>,
    pub omega: Vector3<T>,
}

impl<T: Real> FullState<T> {
    pub fn to_vector(&self) -> SVector<T, 12> {
        let a = self.angles.to_vector();
        let mut x = SVector::zeros();
        for i in 0..3 {
            x[i] = self.p[i];
            x[3 + i] = self.v[i];
            x[6 + i] = a[i];
            x[9 + i] = self.omega[i];
        }
        x
    }

    pub fn from_vector(x: &SVector<T, 12>) -> Self {
        Self {
            p: x.fixed_rows::<3>(0).into_owned(),
            v: x.fixed_rows::<3>(3).into_owned(),
            angles: EulerAngles::new(x[6], x[7], x[8]),
            omega: x.fixed_rows::<3>(9).into_owned(),
        }
    }
}

/// Time derivative of the full state, in the layout of [`FullState::to_vector`].
pub fn dynamics_rhs<T: Real>(
    state: &FullState<T>,
    u: &DVector<T>,
    vehicle: &Vehicle<T>,
) -> Result<SVector<T, 12>> {
    let r = euler_to_rotation(state.angles);
    let acc = vehicle.gravity_vector() + r * (vehicle.a() * u) / vehicle.mass();
    let td = euler_rate_matrix_inverse(state.angles)? * state.omega;
    let j = vehicle.inertia();
    let wd = vehicle.inertia_inv() * (vehicle.b() * u - state.omega.cross(&(j * state.omega)));
    let mut dx = SVector::zeros();
    for i in 0..3 {
        dx[i] = state.v[i];
        dx[3 + i] = acc[i];
        dx[6 + i] = td[i];
        dx[9 + i] = wd[i];
    }
    Ok(dx)
}

/// Piecewise cubic Hermite input interpolation. Each interval carries its own
/// end slopes: three-point slopes across knots, or, when midpoint inputs are
/// present, the slopes of the quadratic through knot, midpoint and knot. The
/// latter integrates exactly like Simpson's rule, so any knot/midpoint
/// oscillation that the collocation scheme cannot see is not turned into a
/// bias.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSchedule<T: Real> {
    times: Vec<T>,
    values: Vec<DVector<T>>,
    /// Slope at the start and at the end of each interval.
    slopes: Vec<(DVector<T>, DVector<T>)>,
}

impl<T: Real> InputSchedule<T> {
    pub fn new(times: Vec<T>, values: Vec<DVector<T>>) -> Result<Self> {
        Self::check(&times, &values)?;
        let n = times.len();
        let knot_slope = |k: usize| -> DVector<T> {
            if n == 1 {
                DVector::zeros(values[0].len())
            } else if k == 0 {
                (&values[1] - &values[0]) / (times[1] - times[0])
            } else if k == n - 1 {
                (&values[k] - &values[k - 1]) / (times[k] - times[k - 1])
            } else {
                let (h0, h1) = (times[k] - times[k - 1], times[k + 1] - times[k]);
                // derivative of the parabola through three points
                (&values[k + 1] - &values[k]) * (h0 / (h1 * (h0 + h1)))
                    + (&values[k] - &values[k - 1]) * (h1 / (h0 * (h0 + h1)))
            }
        };
        let slopes = (0..n.saturating_sub(1))
            .map(|k| (knot_slope(k), knot_slope(k + 1)))
            .collect();
        Ok(Self {
            times,
            values,
            slopes,
        })
    }

    /// Quadratic per interval through the knot inputs and `mids`.
    pub fn with_midpoints(
        times: Vec<T>,
        values: Vec<DVector<T>>,
        mids: &[DVector<T>],
    ) -> Result<Self> {
        Self::check(&times, &values)?;
        if mids.len() + 1 != times.len() {
            return Err(Error::InvalidArgument(
                "need one midpoint input per interval".into(),
            ));
        }
        let (three, four) = (lit::<T>(3.0), lit::<T>(4.0));
        let slopes = mids
            .iter()
            .enumerate()
            .map(|(k, um)| {
                let h = times[k + 1] - times[k];
                let (u0, u1) = (&values[k], &values[k + 1]);
                let s0 = (um * four - u0 * three - u1) / h;
                let s1 = (u1 * three + u0 - um * four) / h;
                (s0, s1)
            })
            .collect();
        Ok(Self {
            times,
            values,
            slopes,
        })
    }

    fn check(times: &[T], values: &[DVector<T>]) -> Result<()> {
        if times.is_empty() || values.len() != times.len() {
            return Err(Error::InvalidArgument(
                "input schedule needs matching, non-empty times and values".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "input schedule times must increase".into(),
            ));
        }
        Ok(())
    }

    /// Schedule matching how `traj` was discretized.
    pub fn from_trajectory(traj: &StateTrajectory<T>) -> Result<Self> {
        match &traj.mid_inputs {
            None => Self::new(traj.times.clone(), traj.inputs.clone()),
            Some(mids) => Self::with_midpoints(traj.times.clone(), traj.inputs.clone(), mids),
        }
    }

    pub fn at(&self, t: T) -> DVector<T> {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return self.values[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1].clone();
        }
        let k = self.times.partition_point(|x| *x <= t).clamp(1, n - 1) - 1;
        let h = self.times[k + 1] - self.times[k];
        let s = (t - self.times[k]) / h;
        let (two, three) = (lit::<T>(2.0), lit::<T>(3.0));
        let s2 = s * s;
        let s3 = s2 * s;
        let (d0, d1) = &self.slopes[k];
        &self.values[k] * (two * s3 - three * s2 + T::one())
            + d0 * ((s3 - two * s2 + s) * h)
            + &self.values[k + 1] * (three * s2 - two * s3)
            + d1 * ((s3 - s2) * h)
    }
}

/// Tracking error of a replay against the flat output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingMetrics<T: Real> {
    pub rms_position: T,
    pub max_position: T,
    pub max_yaw: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<FullState<T>>,
    pub inputs: Vec<DVector<T>>,
    pub metrics: Option<TrackingMetrics<T>>,
}

/// Fixed-step RK4 replay from `x0` over `[0, tf]`. When `reference` is given
/// the tracking metrics are filled in.
pub fn forward_simulate<T: Real>(
    vehicle: &Vehicle<T>,
    schedule: &InputSchedule<T>,
    x0: FullState<T>,
    tf: T,
    steps: usize,
    reference: Option<&FlatTrajectory<T>>,
) -> Result<SimulationResult<T>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("step count must be positive".into()));
    }
    let h = tf / lit(steps as f64);
    let mut f = |t: T, x: &SVector<T, 12>| -> Result<SVector<T, 12>> {
        dynamics_rhs(&FullState::from_vector(x), &schedule.at(t), vehicle)
    };
    let mut res = SimulationResult {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        inputs: Vec::with_capacity(steps + 1),
        metrics: None,
    };
    let limit = lit::<T>(DIVERGENCE_LIMIT);
    let mut x = x0.to_vector();
    for k in 0..=steps {
        let t = if k == steps { tf } else { h * lit(k as f64) };
        let s = FullState::from_vector(&x);
        let norm = s.p.norm();
        if !(norm <= limit) {
            return Err(Error::Diverged {
                t: t.as_f64(),
                norm: norm.as_f64(),
            });
        }
        res.times.push(t);
        res.states.push(s);
        res.inputs.push(schedule.at(t));
        if k < steps {
            x = rk4_step(&mut f, t, &x, h)?;
        }
    }
    if let Some(flat) = reference {
        let mut sq = T::zero();
        let mut max_p = T::zero();
        let mut max_yaw = T::zero();
        for (t, s) in res.times.iter().zip(&res.states) {
            let r = flat.eval(*t);
            let e = (s.p - r.pos(0)).norm();
            sq += e * e;
            max_p = max_p.max(e);
            max_yaw = max_yaw.max((s.angles.yaw - r.yaw(0)).abs());
        }
        res.metrics = Some(TrackingMetrics {
            rms_position: (sq / lit((steps + 1) as f64)).sqrt(),
            max_position: max_p,
            max_yaw,
        });
    }
    Ok(res)
}

/// Replays a generated trajectory from its first knot, with position and
/// velocity taken from the flat output.
pub fn replay<T: Real>(
    vehicle: &Vehicle<T>,
    traj: &StateTrajectory<T>,
    flat: &FlatTrajectory<T>,
    steps: usize,
) -> Result<SimulationResult<T>> {
    let s0 = flat.eval(traj.times[0]);
    let x0 = FullState {
        p: s0.pos(0),
        v: s0.pos(1),
        angles: traj.angles[0],
        omega: traj.rates[0],
    };
    let schedule = InputSchedule::from_trajectory(traj)?;
    forward_simulate(vehicle, &schedule, x0, traj.tf(), steps, Some(flat))
}

/// Element-wise `N u / (m g)`.
pub fn normalized_input<T: Real>(u: &DVector<T>, vehicle: &Vehicle<T>) -> DVector<T> {
    crate::vehicle::normalized_input(u, vehicle)
}

/// Quadrature rule for the effort integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// Left Riemann sum over the knots.
    LeftRiemann,
    Trapezoidal,
    /// Simpson with the interval-midpoint inputs.
    Simpson,
}

impl Quadrature {
    /// The rule consistent with the scheme that produced `traj`.
    pub fn for_trajectory<T: Real>(traj: &StateTrajectory<T>) -> Self {
        match traj.source {
            Source::Collocation(Scheme::Euler) => Quadrature::LeftRiemann,
            Source::Collocation(Scheme::HermiteSimpson) if traj.mid_inputs.is_some() => {
                Quadrature::Simpson
            }
            _ => Quadrature::Trapezoidal,
        }
    }
}

/// `(1 / (N t_f)) * integral of u_n^T u_n dt` with `u_n = N u / (m g)`.
pub fn effort_cost<T: Real>(
    traj: &StateTrajectory<T>,
    vehicle: &Vehicle<T>,
    rule: Quadrature,
) -> Result<T> {
    let n = traj.len();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two knots".into()));
    }
    let sq = |u: &DVector<T>| normalized_input(u, vehicle).norm_squared();
    let mut total = T::zero();
    for k in 0..n - 1 {
        let h = traj.times[k + 1] - traj.times[k];
        total += match rule {
            Quadrature::LeftRiemann => sq(&traj.inputs[k]) * h,
            Quadrature::Trapezoidal => {
                (sq(&traj.inputs[k]) + sq(&traj.inputs[k + 1])) * h * lit(0.5)
            }
            Quadrature::Simpson => {
                let mids = traj.mid_inputs.as_ref().ok_or_else(|| {
                    Error::InvalidArgument("Simpson effort needs midpoint inputs".into())
                })?;
                (sq(&traj.inputs[k]) + sq(&mids[k]) * lit(4.0) + sq(&traj.inputs[k + 1])) * h
                    / lit(6.0)
            }
        };
    }
    let span = traj.tf() - traj.times[0];
    Ok(total / (lit::<T>(vehicle.n() as f64) * span))
}

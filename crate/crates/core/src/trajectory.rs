//! Time-indexed attitude, body-rate and thrust histories.

use std::fmt;

use nalgebra::{DVector, Vector3};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::se3::{euler_rates, EulerAngles};

/// Integration stencil of a collocation transcription.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Euler,
    Trapezoidal,
    HermiteSimpson,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Euler, Scheme::Trapezoidal, Scheme::HermiteSimpson];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::Trapezoidal => "trapezoidal",
            Scheme::HermiteSimpson => "hermite_simpson",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which pipeline produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Collocation(Scheme),
    AnalyticRank3,
    AnalyticRank2,
    Replay,
}

/// Knot sequence of `(t, theta, omega, u)`. Hermite-Simpson solutions also
/// carry the interval-midpoint inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory<T: Real> {
    pub source: Source,
    pub times: Vec<T>,
    pub angles: Vec<EulerAngles<T>>,
    pub rates: Vec<Vector3<T>>,
    pub inputs: Vec<DVector<T>>,
    pub mid_inputs: Option<Vec<DVector<T>>>,
}

impl<T: Real> StateTrajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn tf(&self) -> T {
        *self.times.last().unwrap_or(&T::zero())
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.first().map_or(0, |u| u.len())
    }

    /// Attitude at `t` by cubic Hermite interpolation of the angles, with
    /// slopes from the body rates.
    pub fn angles_at(&self, t: T) -> Result<EulerAngles<T>> {
        let n = self.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty trajectory".into()));
        }
        let (t0, tf) = (self.times[0], self.tf());
        let slack = (tf - t0).abs() * lit(1e-9);
        if t < t0 - slack || t > tf + slack {
            return Err(Error::OutOfDomain {
                t: t.as_f64(),
                tf: tf.as_f64(),
            });
        }
        if n == 1 {
            return Ok(self.angles[0]);
        }
        let k = match self
            .times
            .binary_search_by(|x| x.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => return Ok(self.angles[i]),
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let h = self.times[k + 1] - self.times[k];
        let s = (t - self.times[k]) / h;
        let y0 = self.angles[k].to_vector();
        let y1 = self.angles[k + 1].to_vector();
        let d0 = euler_rates(self.angles[k], &self.rates[k])? * h;
        let d1 = euler_rates(self.angles[k + 1], &self.rates[k + 1])? * h;
        Ok(EulerAngles::from_vector(&hermite(s, &y0, &d0, &y1, &d1)))
    }

    /// Largest absolute Euler-angle difference to `other`, evaluated at this
    /// trajectory's knots.
    pub fn max_angle_deviation(&self, other: &StateTrajectory<T>) -> Result<T> {
        let mut worst = T::zero();
        for (t, a) in self.times.iter().zip(&self.angles) {
            let b = other.angles_at(*t)?;
            worst = worst.max((a.to_vector() - b.to_vector()).amax());
        }
        Ok(worst)
    }
}

/// Cubic Hermite on the unit interval with slopes already scaled by the
/// interval length.
pub(crate) fn hermite<T: Real>(
    s: T,
    y0: &Vector3<T>,
    d0: &Vector3<T>,
    y1: &Vector3<T>,
    d1: &Vector3<T>,
) -> Vector3<T> {
    let (two, three) = (lit::<T>(2.0), lit::<T>(3.0));
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = two * s3 - three * s2 + T::one();
    let h10 = s3 - two * s2 + s;
    let h01 = three * s2 - two * s3;
    let h11 = s3 - s2;
    y0 * h00 + d0 * h10 + y1 * h01 + d1 * h11
}

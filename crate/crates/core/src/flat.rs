//! Flat outputs `sigma = [x, y, z, psi]` as single-segment degree-9 polynomials.

use nalgebra::{SMatrix, SVector, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Polynomial degree of each flat-output axis.
pub const DEGREE: usize = 9;
const NC: usize = DEGREE + 1;

/// Flat output and its first four time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatSample<T: Real> {
    pub t: T,
    /// `d[k]` is the k-th derivative of sigma.
    pub d: [Vector4<T>; 5],
}

impl<T: Real> FlatSample<T> {
    pub fn sigma(&self) -> &Vector4<T> {
        &self.d[0]
    }

    /// Position part of the k-th derivative.
    pub fn pos(&self, k: usize) -> Vector3<T> {
        self.d[k].fixed_rows::<3>(0).into_owned()
    }

    /// Yaw part of the k-th derivative.
    pub fn yaw(&self, k: usize) -> T {
        self.d[k][3]
    }

    /// A sample with every derivative zero: the vehicle at rest.
    pub fn at_rest(t: T, sigma: Vector4<T>) -> Self {
        Self {
            t,
            d: [
                sigma,
                Vector4::zeros(),
                Vector4::zeros(),
                Vector4::zeros(),
                Vector4::zeros(),
            ],
        }
    }
}

/// `sigma_i(t) = sum_j d_ij t^j`, j = 0..=9, on `[0, t_f]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatTrajectory<T: Real> {
    coeffs: [[T; NC]; 4],
    tf: T,
}

/// Derivative factor `j! / (j-k)!`.
fn falling<T: Real>(j: usize, k: usize) -> T {
    let mut f = 1.0;
    for i in 0..k {
        f *= (j - i) as f64;
    }
    lit(f)
}

impl<T: Real> FlatTrajectory<T> {
    /// Degree-9 trajectory from `start` to `end` with derivatives 1 through 4
    /// zero at both ends.
    pub fn rest_to_rest(start: Vector4<T>, end: Vector4<T>, tf: T) -> Result<Self> {
        fit_rest_to_rest(start, end, tf)
    }

    /// Trajectory that stays at `sigma` for `tf` seconds.
    pub fn constant(sigma: Vector4<T>, tf: T) -> Result<Self> {
        fit_rest_to_rest(sigma, sigma, tf)
    }

    pub fn from_coefficients(coeffs: [[T; NC]; 4], tf: T) -> Result<Self> {
        if !(tf > T::zero()) {
            return Err(Error::InvalidArgument("final time must be positive".into()));
        }
        Ok(Self { coeffs, tf })
    }

    pub fn coefficients(&self) -> &[[T; NC]; 4] {
        &self.coeffs
    }

    pub fn tf(&self) -> T {
        self.tf
    }

    /// Horner evaluation of sigma and its first four derivatives.
    pub fn sample(&self, t: T) -> Result<FlatSample<T>> {
        let slack = self.tf * lit(1e-12);
        if t < -slack || t > self.tf + slack || !t.is_finite() {
            return Err(Error::OutOfDomain {
                t: t.as_f64(),
                tf: self.tf.as_f64(),
            });
        }
        Ok(self.eval(t))
    }

    /// Evaluation without the domain check; the polynomial extends smoothly
    /// past the endpoints, which finite-difference stencils rely on.
    pub fn eval(&self, t: T) -> FlatSample<T> {
        let mut d = [Vector4::zeros(); 5];
        for (axis, c) in self.coeffs.iter().enumerate() {
            for (k, dk) in d.iter_mut().enumerate() {
                let mut acc = T::zero();
                for j in (k..NC).rev() {
                    acc = acc * t + c[j] * falling::<T>(j, k);
                }
                dk[axis] = acc;
            }
        }
        FlatSample { t, d }
    }

    /// `n` samples at `t_i = i t_f / (n - 1)`.
    pub fn sample_grid(&self, n: usize) -> Result<Vec<FlatSample<T>>> {
        if n < 2 {
            return Err(Error::InvalidArgument(
                "grid needs at least 2 points".into(),
            ));
        }
        let last = lit::<T>((n - 1) as f64);
        Ok((0..n)
            .map(|i| {
                let t = if i == n - 1 {
                    self.tf
                } else {
                    self.tf * lit(i as f64) / last
                };
                self.eval(t)
            })
            .collect())
    }

    /// Samples at the `n - 1` interval midpoints of the same grid.
    pub fn sample_midpoints(&self, n: usize) -> Result<Vec<FlatSample<T>>> {
        if n < 2 {
            return Err(Error::InvalidArgument(
                "grid needs at least 2 points".into(),
            ));
        }
        let last = lit::<T>((n - 1) as f64);
        Ok((0..n - 1)
            .map(|i| self.eval(self.tf * lit(i as f64 + 0.5) / last))
            .collect())
    }
}

/// Per axis, solves the 10x10 system fixing value and derivatives 1..4 at both
/// ends.
pub fn fit_rest_to_rest<T: Real>(
    start: Vector4<T>,
    end: Vector4<T>,
    tf: T,
) -> Result<FlatTrajectory<T>> {
    if !(tf > T::zero()) || !tf.is_finite() {
        return Err(Error::InvalidArgument("final time must be positive".into()));
    }
    let mut m = SMatrix::<T, NC, NC>::zeros();
    for k in 0..5 {
        m[(k, k)] = falling::<T>(k, k);
        for j in k..NC {
            m[(5 + k, j)] = falling::<T>(j, k) * tf.powi((j - k) as i32);
        }
    }
    let lu = m.lu();
    let mut coeffs = [[T::zero(); NC]; 4];
    for axis in 0..4 {
        let mut rhs = SVector::<T, NC>::zeros();
        rhs[0] = start[axis];
        rhs[5] = end[axis];
        let sol = lu
            .solve(&rhs)
            .ok_or(Error::SingularSystem("polynomial boundary system"))?;
        coeffs[axis].copy_from_slice(sol.as_slice());
    }
    Ok(FlatTrajectory { coeffs, tf })
}

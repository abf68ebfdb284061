//! Rotation kinematics: z-y-x Euler angles, their rate map, and hat/vee algebra.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Default distance from gimbal lock accepted by the Euler-rate map, in terms
/// of `|cos(pitch)|`.
pub const DEFAULT_EULER_EPS: f64 = 1e-3;

/// Tolerance on `||M + M^T||` accepted by [`vee`].
pub const SKEW_TOLERANCE: f64 = 1e-10;

/// Angular velocity expressed in the body frame, rad/s.
pub type BodyRates<T> = Vector3<T>;

/// Roll, pitch and yaw for the z-y-x sequence `R = Rz(yaw) Ry(pitch) Rx(roll)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles<T> {
    pub roll: T,
    pub pitch: T,
    pub yaw: T,
}

impl<T: Real> EulerAngles<T> {
    pub fn new(roll: T, pitch: T, yaw: T) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    /// `[roll, pitch, yaw]`.
    pub fn to_vector(self) -> Vector3<T> {
        Vector3::new(self.roll, self.pitch, self.yaw)
    }

    pub fn from_vector(v: &Vector3<T>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    /// Fails when the pitch is within `eps` (in `|cos(pitch)|`) of gimbal lock.
    pub fn check_domain(&self, eps: T) -> Result<()> {
        let c = self.pitch.cos().abs();
        if c < eps {
            return Err(Error::Singularity {
                cos_pitch: c.as_f64(),
                eps: eps.as_f64(),
            });
        }
        Ok(())
    }
}

/// Element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix<T: Real>(Matrix3<T>);

impl<T: Real> RotationMatrix<T> {
    /// Wraps a matrix, verifying orthonormality and `det = +1` within `tol`.
    pub fn new(m: Matrix3<T>, tol: T) -> Result<Self> {
        let r = Self(m);
        if r.orthonormality_error() > tol || (m.determinant() - T::one()).abs() > tol {
            return Err(Error::InvalidArgument(
                "matrix is not a proper rotation".into(),
            ));
        }
        Ok(r)
    }

    /// Wraps a matrix known to be a rotation by construction.
    pub fn new_unchecked(m: Matrix3<T>) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<T> {
        &self.0
    }

    pub fn into_inner(self) -> Matrix3<T> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Largest entry of `|R^T R - I|`.
    pub fn orthonormality_error(&self) -> T {
        (self.0.transpose() * self.0 - Matrix3::identity())
            .abs()
            .max()
    }

    /// z-y-x Euler angles using the `|pitch| <= pi/2` branch.
    pub fn to_euler(&self) -> EulerAngles<T> {
        let m = &self.0;
        let s = (-m[(2, 0)]).clamp(-T::one(), T::one());
        EulerAngles::new(
            m[(2, 1)].atan2(m[(2, 2)]),
            s.asin(),
            m[(1, 0)].atan2(m[(0, 0)]),
        )
    }
}

impl<T: Real> std::ops::Mul for RotationMatrix<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self(self.0 * rhs.0)
    }
}

impl<T: Real> std::ops::Mul<Vector3<T>> for RotationMatrix<T> {
    type Output = Vector3<T>;
    fn mul(self, rhs: Vector3<T>) -> Vector3<T> {
        self.0 * rhs
    }
}

pub fn rot_x<T: Real>(a: T) -> Matrix3<T> {
    let (s, c) = a.sin_cos();
    let (o, z) = (T::one(), T::zero());
    Matrix3::new(o, z, z, z, c, -s, z, s, c)
}

pub fn rot_y<T: Real>(a: T) -> Matrix3<T> {
    let (s, c) = a.sin_cos();
    let (o, z) = (T::one(), T::zero());
    Matrix3::new(c, z, s, z, o, z, -s, z, c)
}

pub fn rot_z<T: Real>(a: T) -> Matrix3<T> {
    let (s, c) = a.sin_cos();
    let (o, z) = (T::one(), T::zero());
    Matrix3::new(c, -s, z, s, c, z, z, z, o)
}

/// `R = Rz(yaw) Ry(pitch) Rx(roll)`, written out in closed form.
pub fn euler_to_rotation<T: Real>(angles: EulerAngles<T>) -> RotationMatrix<T> {
    let (sf, cf) = angles.roll.sin_cos();
    let (st, ct) = angles.pitch.sin_cos();
    let (sp, cp) = angles.yaw.sin_cos();
    RotationMatrix(Matrix3::new(
        cp * ct,
        cp * st * sf - sp * cf,
        cp * st * cf + sp * sf,
        sp * ct,
        sp * st * sf + cp * cf,
        sp * st * cf - cp * sf,
        -st,
        ct * sf,
        ct * cf,
    ))
}

/// `E(theta)` with `omega = E(theta) * d(theta)/dt`.
pub fn euler_rate_matrix<T: Real>(angles: EulerAngles<T>) -> Result<Matrix3<T>> {
    euler_rate_matrix_eps(angles, lit(DEFAULT_EULER_EPS))
}

pub fn euler_rate_matrix_eps<T: Real>(angles: EulerAngles<T>, eps: T) -> Result<Matrix3<T>> {
    angles.check_domain(eps)?;
    let (sf, cf) = angles.roll.sin_cos();
    let (st, ct) = angles.pitch.sin_cos();
    let (o, z) = (T::one(), T::zero());
    Ok(Matrix3::new(o, z, -st, z, cf, sf * ct, z, -sf, cf * ct))
}

/// Closed-form inverse of [`euler_rate_matrix`]: `d(theta)/dt = E^-1 omega`.
pub fn euler_rate_matrix_inverse<T: Real>(angles: EulerAngles<T>) -> Result<Matrix3<T>> {
    euler_rate_matrix_inverse_eps(angles, lit(DEFAULT_EULER_EPS))
}

pub fn euler_rate_matrix_inverse_eps<T: Real>(
    angles: EulerAngles<T>,
    eps: T,
) -> Result<Matrix3<T>> {
    angles.check_domain(eps)?;
    let (sf, cf) = angles.roll.sin_cos();
    let (st, ct) = angles.pitch.sin_cos();
    let tt = st / ct;
    let (o, z) = (T::one(), T::zero());
    Ok(Matrix3::new(
        o,
        sf * tt,
        cf * tt,
        z,
        cf,
        -sf,
        z,
        sf / ct,
        cf / ct,
    ))
}

/// Euler-angle rates from body rates.
pub fn euler_rates<T: Real>(angles: EulerAngles<T>, omega: &BodyRates<T>) -> Result<Vector3<T>> {
    Ok(euler_rate_matrix_inverse(angles)? * omega)
}

/// Skew-symmetric matrix with `hat(v) * w = v x w`.
pub fn hat<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -v[2], v[1], v[2], z, -v[0], -v[1], v[0], z)
}

/// Inverse of [`hat`]; rejects matrices that are not skew-symmetric.
pub fn vee<T: Real>(m: &Matrix3<T>) -> Result<Vector3<T>> {
    let asym = (m + m.transpose()).norm();
    if asym > lit(SKEW_TOLERANCE) {
        return Err(Error::NotSkew(asym.as_f64()));
    }
    Ok(Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]))
}

/// `vee` of the skew part of `m`; used on finite-difference products that are
/// only skew up to truncation error.
pub fn vee_skew_part<T: Real>(m: &Matrix3<T>) -> Vector3<T> {
    let half = lit::<T>(0.5);
    Vector3::new(
        (m[(2, 1)] - m[(1, 2)]) * half,
        (m[(0, 2)] - m[(2, 0)]) * half,
        (m[(1, 0)] - m[(0, 1)]) * half,
    )
}

/// Smallest rotation taking `e1` onto `f / |f|`, so that `R^T f = [|f|, 0, 0]`.
pub fn minimal_rotation_to<T: Real>(f: &Vector3<T>) -> Result<RotationMatrix<T>> {
    let norm = f.norm();
    if norm <= lit(1e-9) {
        return Err(Error::Degenerate("target vector has zero length"));
    }
    let d = f / norm;
    let c = d[0];
    if T::one() + c <= lit(1e-12) {
        return Err(Error::Degenerate("target is antipodal to e1"));
    }
    // axis * sin(angle) = e1 x d
    let k = hat(&Vector3::new(T::zero(), -d[2], d[1]));
    Ok(RotationMatrix(
        Matrix3::identity() + k + k * k / (T::one() + c),
    ))
}

//! Fixed-step classical Runge-Kutta.

use nalgebra::SVector;

use crate::error::Result;
use crate::scalar::{lit, Real};

/// One RK4 step of `x' = f(t, x)`. A negative `h` steps backward in time.
pub fn rk4_step<T, const D: usize, F>(
    f: &mut F,
    t: T,
    x: &SVector<T, D>,
    h: T,
) -> Result<SVector<T, D>>
where
    T: Real,
    F: FnMut(T, &SVector<T, D>) -> Result<SVector<T, D>>,
{
    let half = h * lit(0.5);
    let k1 = f(t, x)?;
    let k2 = f(t + half, &(x + k1 * half))?;
    let k3 = f(t + half, &(x + k2 * half))?;
    let k4 = f(t + h, &(x + k3 * h))?;
    Ok(x + (k1 + (k2 + k3) * lit::<T>(2.0) + k4) * (h / lit(6.0)))
}

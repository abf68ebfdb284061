//! Vehicle geometry, allocation matrices, SVD reframing and hover trim.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix3xX, Vector2, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::se3::{euler_to_rotation, hat, EulerAngles};

/// Relative singular-value threshold used for every rank decision.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Standard gravity, m/s^2.
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Magnitude of the drag-to-thrust ratio used by the presets, m.
pub const PRESET_DRAG_RATIO: f64 = 0.016;

#[derive(Debug, Clone, PartialEq)]
pub struct Propeller<T: Real> {
    /// Moment arm in the body frame, m.
    pub r: Vector3<T>,
    /// Unit thrust axis in the body frame.
    pub v: Vector3<T>,
    /// Signed drag-to-thrust ratio, m. The sign encodes spin direction.
    pub c: T,
}

impl<T: Real> Propeller<T> {
    /// Builds a propeller, renormalizing the thrust axis.
    pub fn new(r: Vector3<T>, v: Vector3<T>, c: T) -> Result<Self> {
        let n = v.norm();
        if !(n > lit(1e-12)) {
            return Err(Error::InvalidVehicle("thrust axis has zero length".into()));
        }
        Ok(Self { r, v: v / n, c })
    }

    /// Same as [`Propeller::new`] with the arm given in centimeters.
    pub fn from_cm(r_cm: [f64; 3], v: [f64; 3], c: f64) -> Result<Self> {
        Self::new(
            Vector3::new(
                lit(r_cm[0] / 100.0),
                lit(r_cm[1] / 100.0),
                lit(r_cm[2] / 100.0),
            ),
            Vector3::new(lit(v[0]), lit(v[1]), lit(v[2])),
            lit(c),
        )
    }

    /// Torque per unit thrust: `hat(r) + c I`.
    pub fn moment_matrix(&self) -> Matrix3<T> {
        moment_matrix(self)
    }
}

pub fn moment_matrix<T: Real>(p: &Propeller<T>) -> Matrix3<T> {
    hat(&p.r) + Matrix3::identity() * p.c
}

/// Force and torque allocation: `A` maps thrusts to the body-frame force sum,
/// `B` to body torque.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPair<T: Real> {
    pub a: Matrix3xX<T>,
    pub b: Matrix3xX<T>,
    pub rank_a: usize,
}

pub fn build_allocation<T: Real>(props: &[Propeller<T>]) -> Result<AllocationPair<T>> {
    let n = props.len();
    let mut a = Matrix3xX::zeros(n);
    let mut b = Matrix3xX::zeros(n);
    for (i, p) in props.iter().enumerate() {
        a.set_column(i, &p.v);
        b.set_column(i, &(p.moment_matrix() * p.v));
    }
    let rank_b = numeric_rank(&b);
    if rank_b < 3 {
        return Err(Error::Controllability(rank_b));
    }
    let rank_a = numeric_rank(&a);
    Ok(AllocationPair { a, b, rank_a })
}

/// Rank by relative singular-value thresholding.
pub fn numeric_rank<T: Real>(m: &Matrix3xX<T>) -> usize {
    let d = DMatrix::from_iterator(3, m.ncols(), m.iter().copied());
    let sv = d.svd(false, false).singular_values;
    let max = sv.iter().copied().fold(T::zero(), |acc, s| acc.max(s));
    if max == T::zero() {
        return 0;
    }
    sv.iter()
        .filter(|&&s| s / max > lit(RANK_TOLERANCE))
        .count()
}

/// Rigid multirotor with `N >= 3` fixed propellers.
#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle<T: Real> {
    mass: T,
    inertia: Matrix3<T>,
    inertia_inv: Matrix3<T>,
    gravity: T,
    propellers: Vec<Propeller<T>>,
    alloc: AllocationPair<T>,
}

impl<T: Real> Vehicle<T> {
    pub fn new(
        mass: T,
        inertia: Matrix3<T>,
        propellers: Vec<Propeller<T>>,
        gravity: T,
    ) -> Result<Self> {
        if propellers.len() < 3 {
            return Err(Error::InvalidVehicle(format!(
                "need at least 3 propellers, got {}",
                propellers.len()
            )));
        }
        if !(mass > T::zero()) {
            return Err(Error::InvalidVehicle("mass must be positive".into()));
        }
        if !(gravity > T::zero()) {
            return Err(Error::InvalidVehicle("gravity must be positive".into()));
        }
        let asym = (inertia - inertia.transpose()).abs().max();
        if asym > inertia.abs().max() * lit(1e-9) {
            return Err(Error::InvalidVehicle("inertia is not symmetric".into()));
        }
        if inertia.cholesky().is_none() {
            return Err(Error::InvalidVehicle(
                "inertia is not positive definite".into(),
            ));
        }
        let inertia_inv = inertia
            .try_inverse()
            .ok_or_else(|| Error::InvalidVehicle("inertia is singular".into()))?;
        let alloc = build_allocation(&propellers)?;
        Ok(Self {
            mass,
            inertia,
            inertia_inv,
            gravity,
            propellers,
            alloc,
        })
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn inertia(&self) -> &Matrix3<T> {
        &self.inertia
    }

    pub fn inertia_inv(&self) -> &Matrix3<T> {
        &self.inertia_inv
    }

    /// Gravity magnitude, m/s^2.
    pub fn gravity(&self) -> T {
        self.gravity
    }

    /// World-frame gravity vector `[0, 0, -g]`.
    pub fn gravity_vector(&self) -> Vector3<T> {
        Vector3::new(T::zero(), T::zero(), -self.gravity)
    }

    pub fn propellers(&self) -> &[Propeller<T>] {
        &self.propellers
    }

    pub fn n(&self) -> usize {
        self.propellers.len()
    }

    pub fn allocation(&self) -> &AllocationPair<T> {
        &self.alloc
    }

    pub fn a(&self) -> &Matrix3xX<T> {
        &self.alloc.a
    }

    pub fn b(&self) -> &Matrix3xX<T> {
        &self.alloc.b
    }

    pub fn rank_a(&self) -> usize {
        self.alloc.rank_a
    }

    /// The 6xN map `[A; B]` from thrusts to body force and torque.
    pub fn wrench_matrix(&self) -> DMatrix<T> {
        let n = self.n();
        let mut w = DMatrix::zeros(6, n);
        w.view_mut((0, 0), (3, n)).copy_from(&self.alloc.a);
        w.view_mut((3, 0), (3, n)).copy_from(&self.alloc.b);
        w
    }

    /// Normalized input `N u / (m g)`.
    pub fn normalized_input(&self, u: &DVector<T>) -> DVector<T> {
        normalized_input(u, self)
    }
}

pub fn normalized_input<T: Real>(u: &DVector<T>, vehicle: &Vehicle<T>) -> DVector<T> {
    let k =
        T::from_usize(vehicle.n()).unwrap_or_else(T::one) / (vehicle.mass() * vehicle.gravity());
    u * k
}

/// Named vehicle configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    QuadTilted,
    Tricopter,
    HexacopterTilted,
    QuadAligned,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::QuadTilted,
        Preset::Tricopter,
        Preset::HexacopterTilted,
        Preset::QuadAligned,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::QuadTilted => "quad_tilted",
            Preset::Tricopter => "tricopter",
            Preset::HexacopterTilted => "hexacopter_tilted",
            Preset::QuadAligned => "quad_aligned",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Arm positions (cm), thrust axes and drag ratios (m).
    pub fn geometry(self) -> Vec<([f64; 3], [f64; 3], f64)> {
        let c = PRESET_DRAG_RATIO;
        match self {
            Preset::QuadTilted => vec![
                ([19.0, 0.0, 0.0], [0.20, 0.0, 0.98], -c),
                ([0.0, -19.0, 0.0], [0.0, 0.30, 0.96], c),
                ([-19.0, 0.0, 0.0], [0.30, 0.0, 0.96], -c),
                ([0.0, 19.0, 0.0], [0.0, -0.10, 0.99], c),
            ],
            Preset::Tricopter => {
                let tri = TiltTricopter::<f64>::preset_geometry();
                let mut out = Vec::with_capacity(4);
                for (i, (r, v, c)) in tri.into_iter().enumerate() {
                    if i < 2 {
                        out.push((r, v, c));
                    } else {
                        out.push((r, [0.0, 0.0, 1.0], c));
                        out.push((r, [0.0, -1.0, 0.0], c));
                    }
                }
                out
            }
            Preset::HexacopterTilted => vec![
                ([-19.0, 0.0, 0.0], [0.20, 0.0, 0.98], c),
                ([-9.0, 17.0, 0.0], [0.0, 0.30, 0.96], -c),
                ([9.0, 17.0, 0.0], [0.0, -0.10, 0.99], c),
                ([19.0, 0.0, 0.0], [0.20, 0.0, 0.98], -c),
                ([9.0, -17.0, 0.0], [0.0, 0.10, 0.99], c),
                ([-9.0, -17.0, 0.0], [0.0, 0.20, 0.98], -c),
            ],
            Preset::QuadAligned => vec![
                ([19.0, 0.0, 0.0], [0.0, 0.0, 1.0], -c),
                ([0.0, -19.0, 0.0], [0.0, 0.0, 1.0], c),
                ([-19.0, 0.0, 0.0], [0.0, 0.0, 1.0], -c),
                ([0.0, 19.0, 0.0], [0.0, 0.0, 1.0], c),
            ],
        }
    }

    pub fn build<T: Real>(self) -> Vehicle<T> {
        let props = self
            .geometry()
            .into_iter()
            .map(|(r, v, c)| Propeller::from_cm(r, v, c).expect("preset axes are nonzero"))
            .collect();
        Vehicle::new(lit(1.0), default_inertia(), props, lit(STANDARD_GRAVITY))
            .expect("preset vehicles are valid")
    }
}

/// `diag(5, 5, 10) * 1e-3` kg m^2.
pub fn default_inertia<T: Real>() -> Matrix3<T> {
    Matrix3::from_diagonal(&Vector3::new(lit(5e-3), lit(5e-3), lit(1e-2)))
}

/// Tricopter whose third arm tilts about body x, thrust axis `[0, -sin a, cos a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltTricopter<T: Real> {
    pub mass: T,
    pub inertia: Matrix3<T>,
    pub gravity: T,
    /// Arms in meters.
    pub arms: [Vector3<T>; 3],
    pub drag: [T; 3],
}

impl<T: Real> TiltTricopter<T> {
    fn preset_geometry() -> [([f64; 3], [f64; 3], f64); 3] {
        let c = PRESET_DRAG_RATIO;
        [
            ([-10.0, -17.0, 0.0], [0.0, 0.0, 1.0], -c),
            ([-10.0, 17.0, 0.0], [0.0, 0.0, 1.0], c),
            ([19.0, 0.0, 0.0], [0.0, 0.0, 1.0], c),
        ]
    }

    pub fn preset() -> Self {
        let g = Self::preset_geometry();
        let arm = |i: usize| {
            Vector3::new(
                lit(g[i].0[0] / 100.0),
                lit(g[i].0[1] / 100.0),
                lit(g[i].0[2] / 100.0),
            )
        };
        Self {
            mass: lit(1.0),
            inertia: default_inertia(),
            gravity: lit(STANDARD_GRAVITY),
            arms: [arm(0), arm(1), arm(2)],
            drag: [lit(g[0].2), lit(g[1].2), lit(g[2].2)],
        }
    }

    /// Equivalent quadrotor: the tilting thrust splits into `v3 = e3` and
    /// `v4 = -e2`, both on the third arm and both carrying the third drag ratio.
    pub fn to_quad(&self) -> Result<Vehicle<T>> {
        let (z, o) = (T::zero(), T::one());
        let props = vec![
            Propeller::new(self.arms[0], Vector3::new(z, z, o), self.drag[0])?,
            Propeller::new(self.arms[1], Vector3::new(z, z, o), self.drag[1])?,
            Propeller::new(self.arms[2], Vector3::new(z, z, o), self.drag[2])?,
            Propeller::new(self.arms[2], Vector3::new(z, -o, z), self.drag[2])?,
        ];
        Vehicle::new(self.mass, self.inertia, props, self.gravity)
    }
}

pub fn tricopter_to_quad<T: Real>(tri: &TiltTricopter<T>) -> Result<Vehicle<T>> {
    tri.to_quad()
}

/// Tilting-arm thrust `(T_a, a)` to the split thrusts `(T3, T4)`.
pub fn split_tilt_thrust<T: Real>(t_alpha: T, alpha: T) -> (T, T) {
    (t_alpha * alpha.cos(), t_alpha * alpha.sin())
}

/// Split thrusts `(T3, T4)` back to `(T_a, a)`.
pub fn merge_tilt_thrust<T: Real>(t3: T, t4: T) -> (T, T) {
    (t3.hypot(t4), t4.atan2(t3))
}

/// Rank-2 vehicle expressed in the basis of the SVD `A = Q Sigma V^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReframedVehicle<T: Real> {
    pub q: Matrix3<T>,
    pub sigma: Matrix3xX<T>,
    pub v: DMatrix<T>,
    /// Nonzero singular values, `lambda[0] >= lambda[1] > 0`.
    pub lambda: Vector2<T>,
    pub j_bar: Matrix3<T>,
    pub b_bar: Matrix3xX<T>,
    pub vehicle: Vehicle<T>,
}

pub fn svd_reframe<T: Real>(vehicle: &Vehicle<T>) -> Result<ReframedVehicle<T>> {
    if vehicle.rank_a() != 2 {
        return Err(Error::Rank {
            found: vehicle.rank_a(),
            expected: 2,
        });
    }
    let a = vehicle.a();
    let n = vehicle.n();
    let ata = a.transpose() * a;
    let eig = ata.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut v = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        v.set_column(k, &eig.eigenvectors.column(i));
    }
    let lambda = Vector2::new(
        eig.eigenvalues[order[0]].max(T::zero()).sqrt(),
        eig.eigenvalues[order[1]].max(T::zero()).sqrt(),
    );
    let q1 = a * v.column(0) / lambda[0];
    let q2 = a * v.column(1) / lambda[1];
    let q3 = q1.cross(&q2);
    let q = Matrix3::from_columns(&[q1, q2, q3]);
    let mut sigma = Matrix3xX::zeros(n);
    sigma[(0, 0)] = lambda[0];
    sigma[(1, 1)] = lambda[1];
    let j_bar = q.transpose() * vehicle.inertia() * q;
    let b_bar = q.transpose() * vehicle.b() * &v;
    Ok(ReframedVehicle {
        q,
        sigma,
        v,
        lambda,
        j_bar,
        b_bar,
        vehicle: vehicle.clone(),
    })
}

impl<T: Real> ReframedVehicle<T> {
    /// `||A - Q Sigma V^T||` entrywise maximum.
    pub fn reconstruction_error(&self) -> T {
        (self.vehicle.a() - self.q * &self.sigma * self.v.transpose())
            .abs()
            .max()
    }
}

/// Hovering trim: attitude (yaw zero) and thrusts.
#[derive(Debug, Clone, PartialEq)]
pub struct Hover<T: Real> {
    pub angles: EulerAngles<T>,
    pub u: DVector<T>,
}

impl<T: Real> Hover<T> {
    /// `A u - m R^T [0,0,g]` stacked over `B u`.
    pub fn residual(&self, vehicle: &Vehicle<T>) -> Vector6<T> {
        hover_residual(vehicle, self.angles.roll, self.angles.pitch, &self.u)
    }
}

fn hover_residual<T: Real>(vehicle: &Vehicle<T>, roll: T, pitch: T, u: &DVector<T>) -> Vector6<T> {
    let r = euler_to_rotation(EulerAngles::new(roll, pitch, T::zero()));
    let lift = r.matrix().transpose() * Vector3::z() * (vehicle.mass() * vehicle.gravity());
    let f = vehicle.a() * u - lift;
    let m = vehicle.b() * u;
    Vector6::new(f[0], f[1], f[2], m[0], m[1], m[2])
}

fn solve_tol<T: Real>() -> T {
    lit::<T>(1e-12).max(T::default_epsilon() * lit(64.0))
}

fn fd_step<T: Real>() -> T {
    T::default_epsilon().cbrt()
}

/// Hover trim. Square Newton for `N = 4`; for `N > 4` the thrusts are the
/// minimum-norm solution at each attitude and the attitude minimizes `|u|^2`.
pub fn hover_solve<T: Real>(vehicle: &Vehicle<T>) -> Result<Hover<T>> {
    if vehicle.n() == 4 {
        hover_square(vehicle)
    } else {
        hover_min_norm(vehicle)
    }
}

fn hover_square<T: Real>(vehicle: &Vehicle<T>) -> Result<Hover<T>> {
    let n = vehicle.n();
    let weight = vehicle.mass() * vehicle.gravity();
    let mut x = DVector::from_element(6, weight / lit(n as f64));
    x[0] = T::zero();
    x[1] = T::zero();
    let eval = |x: &DVector<T>| -> Vector6<T> {
        let u = x.rows(2, n).into_owned();
        hover_residual(vehicle, x[0], x[1], &u)
    };
    let tol = solve_tol::<T>() * weight;
    let h = fd_step::<T>();
    for _ in 0..50 {
        let f = eval(&x);
        if f.amax() < tol {
            let hover = Hover {
                angles: EulerAngles::new(x[0], x[1], T::zero()),
                u: x.rows(2, n).into_owned(),
            };
            return Ok(hover);
        }
        let mut jac = DMatrix::zeros(6, 6);
        for k in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let col = (eval(&xp) - eval(&xm)) / (h + h);
            jac.set_column(k, &col);
        }
        jac.view_mut((0, 2), (6, n))
            .copy_from(&vehicle.wrench_matrix());
        let rhs = DVector::from_iterator(6, f.iter().map(|v| -*v));
        let dx = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::NoHover("singular hover Jacobian".into()))?;
        x += dx;
    }
    Err(Error::NoHover(format!(
        "Newton did not converge (residual {:e})",
        eval(&x).amax().as_f64()
    )))
}

/// Minimum-norm thrusts producing body force `m g d` and zero torque.
pub fn min_norm_thrust<T: Real>(vehicle: &Vehicle<T>, d: &Vector3<T>) -> Result<DVector<T>> {
    let w = vehicle.wrench_matrix();
    let mg = vehicle.mass() * vehicle.gravity();
    let rhs = DVector::from_column_slice(&[
        d[0] * mg,
        d[1] * mg,
        d[2] * mg,
        T::zero(),
        T::zero(),
        T::zero(),
    ]);
    let svd = w.svd(true, true);
    svd.solve(&rhs, T::default_epsilon() * lit(1e3))
        .map_err(|e| Error::NoHover(e.to_string()))
}

/// Body-frame gravity-reaction direction `R^T e3` for a yaw-free attitude.
fn lift_direction<T: Real>(roll: T, pitch: T) -> Vector3<T> {
    let (sf, cf) = roll.sin_cos();
    let (st, ct) = pitch.sin_cos();
    Vector3::new(-st, sf * ct, cf * ct)
}

fn hover_min_norm<T: Real>(vehicle: &Vehicle<T>) -> Result<Hover<T>> {
    let cost = |p: &Vector2<T>| -> Result<T> {
        Ok(min_norm_thrust(vehicle, &lift_direction(p[0], p[1]))?.norm_squared())
    };
    let h = fd_step::<T>();
    let grad = |p: &Vector2<T>| -> Result<Vector2<T>> {
        let mut g = Vector2::zeros();
        for k in 0..2 {
            let mut pp = *p;
            let mut pm = *p;
            pp[k] += h;
            pm[k] -= h;
            g[k] = (cost(&pp)? - cost(&pm)?) / (h + h);
        }
        Ok(g)
    };
    let mut p = Vector2::zeros();
    let tol = T::default_epsilon().sqrt() * lit(1e-2);
    for _ in 0..60 {
        let g = grad(&p)?;
        let mut hess = nalgebra::Matrix2::zeros();
        for k in 0..2 {
            let mut pp = p;
            let mut pm = p;
            pp[k] += h;
            pm[k] -= h;
            hess.set_column(k, &((grad(&pp)? - grad(&pm)?) / (h + h)));
        }
        let hess = (hess + hess.transpose()) * lit::<T>(0.5);
        let step = hess.try_inverse().map(|hi| -(hi * g)).unwrap_or_else(|| -g);
        p += step;
        if step.amax() < tol {
            let u = min_norm_thrust(vehicle, &lift_direction(p[0], p[1]))?;
            let hover = Hover {
                angles: EulerAngles::new(p[0], p[1], T::zero()),
                u,
            };
            if hover.residual(vehicle).amax() > lit::<T>(1e-6) * vehicle.mass() * vehicle.gravity()
            {
                return Err(Error::NoHover("attitude admits no torque-free trim".into()));
            }
            return Ok(hover);
        }
    }
    Err(Error::NoHover("attitude search did not converge".into()))
}

/// Hover with the body-frame thrust direction pinned to `(s5, s6, .)`.
pub fn hover_with_direction<T: Real>(vehicle: &Vehicle<T>, s5: T, s6: T) -> Result<Hover<T>> {
    let pitch = (-s5).asin();
    let sr = s6 / pitch.cos();
    if sr.abs() >= T::one() {
        return Err(Error::NoHover("thrust direction out of range".into()));
    }
    let roll = sr.asin();
    let u = min_norm_thrust(vehicle, &lift_direction(roll, pitch))?;
    let hover = Hover {
        angles: EulerAngles::new(roll, pitch, T::zero()),
        u,
    };
    if hover.residual(vehicle).amax() > lit::<T>(1e-6) * vehicle.mass() * vehicle.gravity() {
        return Err(Error::NoHover(
            "no thrust set realizes the requested direction".into(),
        ));
    }
    Ok(hover)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn moment_matrix_examples() {
        let p = Propeller::new(Vector3::zeros(), Vector3::z(), 0.0).unwrap();
        assert_eq!(p.moment_matrix(), Matrix3::zeros());
        let p = Propeller::new(Vector3::new(0.19, 0.0, 0.0), Vector3::z(), 0.016).unwrap();
        let expected = Matrix3::new(0.016, 0.0, 0.0, 0.0, 0.016, -0.19, 0.0, 0.19, 0.016);
        assert_relative_eq!(p.moment_matrix(), expected, epsilon = 1e-15);
    }

    #[test]
    fn b_columns_match_cross_product() {
        let veh = Preset::QuadTilted.build::<f64>();
        for (i, p) in veh.propellers().iter().enumerate() {
            let expected = p.r.cross(&p.v) + p.v * p.c;
            assert_relative_eq!(veh.b().column(i).into_owned(), expected, epsilon = 1e-15);
            assert_relative_eq!(veh.a().column(i).into_owned(), p.v);
        }
    }

    #[test]
    fn preset_ranks() {
        assert_eq!(Preset::QuadAligned.build::<f64>().rank_a(), 1);
        assert_eq!(Preset::QuadTilted.build::<f64>().rank_a(), 3);
        assert_eq!(Preset::Tricopter.build::<f64>().rank_a(), 2);
        assert_eq!(Preset::HexacopterTilted.build::<f64>().rank_a(), 3);
    }

    #[test]
    fn axes_are_renormalized() {
        let veh = Preset::QuadTilted.build::<f64>();
        for p in veh.propellers() {
            assert!((p.v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_uncontrollable_vehicle() {
        // all arms at the origin, no drag: B = 0
        let props = (0..4)
            .map(|_| Propeller::new(Vector3::zeros(), Vector3::z(), 0.0).unwrap())
            .collect();
        let err = Vehicle::new(1.0, default_inertia(), props, 9.81).unwrap_err();
        assert!(matches!(err, Error::Controllability(_)));
    }

    #[test]
    fn tilt_thrust_mapping() {
        assert_eq!(split_tilt_thrust(2.0, 0.0), (2.0, 0.0));
        let (t3, t4) = split_tilt_thrust(2.0f64, std::f64::consts::FRAC_PI_6);
        assert_relative_eq!(t3, 2.0 * (std::f64::consts::FRAC_PI_6).cos());
        assert_relative_eq!(t4, 1.0, epsilon = 1e-15);
        let (ta, a) = merge_tilt_thrust(1.9f64, 0.3);
        assert_relative_eq!(ta, (1.9f64 * 1.9 + 0.09).sqrt());
        assert_relative_eq!(a, 0.3f64.atan2(1.9));
        let va = Vector3::new(0.0, -a.sin(), a.cos());
        assert_relative_eq!(va * ta, Vector3::new(0.0, -0.3, 1.9), epsilon = 1e-14);
    }

    #[test]
    fn tricopter_quad_reproduces_physical_torque() {
        let tri = TiltTricopter::<f64>::preset();
        let quad = tri.to_quad().unwrap();
        let (ta, alpha) = (3.1f64, 0.2f64);
        let (t3, t4) = split_tilt_thrust(ta, alpha);
        let u = DVector::from_vec(vec![1.5, 2.5, t3, t4]);
        let va = Vector3::new(0.0, -alpha.sin(), alpha.cos());
        let mut torque = Vector3::zeros();
        for i in 0..2 {
            torque += tri.arms[i].cross(&Vector3::z()) * u[i] + Vector3::z() * (tri.drag[i] * u[i]);
        }
        torque += tri.arms[2].cross(&(va * ta)) + va * (tri.drag[2] * ta);
        assert_relative_eq!(quad.b() * &u, torque, epsilon = 1e-14);
        assert_eq!(quad, Preset::Tricopter.build::<f64>());
    }

    #[test]
    fn reframe_tricopter() {
        let veh = Preset::Tricopter.build::<f64>();
        let rf = svd_reframe(&veh).unwrap();
        assert!(rf.reconstruction_error() < 1e-10);
        assert_relative_eq!(rf.q.determinant(), 1.0, epsilon = 1e-12);
        assert!(rf.sigma.row(2).amax() < 1e-10);
        assert!(rf.lambda[0] >= rf.lambda[1] && rf.lambda[1] > 0.0);
        assert_relative_eq!(
            rf.v.transpose() * &rf.v,
            DMatrix::identity(4, 4),
            epsilon = 1e-12
        );
    }

    #[test]
    fn reframe_requires_rank_two() {
        let err = svd_reframe(&Preset::QuadTilted.build::<f64>()).unwrap_err();
        assert!(matches!(
            err,
            Error::Rank {
                found: 3,
                expected: 2
            }
        ));
    }

    #[test]
    fn aligned_hover_is_symmetric() {
        let veh = Preset::QuadAligned.build::<f64>();
        let h = hover_solve(&veh).unwrap();
        assert!(h.angles.roll.abs() < 1e-12 && h.angles.pitch.abs() < 1e-12);
        for u in h.u.iter() {
            assert_relative_eq!(*u, 2.4525, epsilon = 1e-12);
        }
    }

    #[test]
    fn tilted_quad_hover() {
        let veh = Preset::QuadTilted.build::<f64>();
        let h = hover_solve(&veh).unwrap();
        assert!(h.residual(&veh).amax() < 1e-9);
        assert!(h.angles.roll.abs() > 1e-3 && h.angles.pitch.abs() > 1e-3);
        assert!(h.u.iter().all(|&u| u > 0.0));
    }

    #[test]
    fn hexacopter_hover_is_minimum_norm() {
        let veh = Preset::HexacopterTilted.build::<f64>();
        let h = hover_solve(&veh).unwrap();
        assert!(h.residual(&veh).amax() < 1e-9);
        assert!(h.u.iter().all(|&u| u > 0.0));
        let base = h.u.norm_squared();
        for (dr, dp) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
            let u = min_norm_thrust(
                &veh,
                &lift_direction(h.angles.roll + dr, h.angles.pitch + dp),
            )
            .unwrap();
            assert!(u.norm_squared() >= base);
        }
    }

    #[test]
    fn directed_hover_matches_outputs() {
        let veh = Preset::HexacopterTilted.build::<f64>();
        let h = hover_with_direction(&veh, 0.07, 0.06).unwrap();
        let f = veh.a() * &h.u;
        let d = f / f.norm();
        assert_relative_eq!(d[0], 0.07, epsilon = 1e-12);
        assert_relative_eq!(d[1], 0.06, epsilon = 1e-12);
    }

    #[test]
    fn normalized_hover_input() {
        let veh = Preset::QuadAligned.build::<f64>();
        let h = hover_solve(&veh).unwrap();
        assert_relative_eq!(
            veh.normalized_input(&h.u),
            DVector::from_element(4, 1.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn single_precision_hover() {
        let veh = Preset::QuadTilted.build::<f32>();
        let h = hover_solve(&veh).unwrap();
        assert!(h.residual(&veh).amax() < 1e-4);
    }
}

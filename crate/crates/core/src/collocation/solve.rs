//! Damped Newton for the square transcription and Newton-KKT for the
//! minimum-effort problem.

use log::{debug, info};
use nalgebra::DVector;

use super::band::{BandLu, BandMatrix};
use super::certificate::certify;
use super::problem::{fd_step, Boundary, CollocationProblem, Mode};
use crate::error::{Error, NonConvergence, Result};
use crate::scalar::{lit, Real};
use crate::se3::DEFAULT_EULER_EPS;
use crate::trajectory::StateTrajectory;

pub const SQUARE_TOLERANCE: f64 = 1e-9;
pub const KKT_TOLERANCE: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 100;
const MIN_STEP: f64 = 1.0 / 1_048_576.0;

/// Newton options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl SolveOptions {
    pub fn square() -> Self {
        Self {
            tolerance: SQUARE_TOLERANCE,
            max_iterations: MAX_ITERATIONS,
        }
    }

    pub fn kkt() -> Self {
        Self {
            tolerance: KKT_TOLERANCE,
            max_iterations: MAX_ITERATIONS,
        }
    }
}

/// Outcome of a converged solve. All residuals are recomputed from the
/// returned unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Infinity norm of the transcription residual.
    pub residual: f64,
    /// Infinity norm of the Lagrangian gradient (min-effort only).
    pub stationarity: Option<f64>,
    /// Accepted step length of each Newton iteration.
    pub damping: Vec<f64>,
    pub thrust_positive: bool,
    pub min_thrust: f64,
    pub euler_domain_ok: bool,
    pub cost: f64,
    /// Residual of the independent certificate evaluator.
    pub certificate: f64,
}

/// Result of one Newton iteration loop.
struct Newton<T: Real> {
    z: DVector<T>,
    iterations: usize,
    damping: Vec<f64>,
}

fn band_from_triplets<T: Real>(
    n: usize,
    trip: &[(usize, usize, T)],
    map_row: impl Fn(usize) -> usize,
    map_col: impl Fn(usize) -> usize,
) -> Result<BandLu<T>> {
    let (mut kl, mut ku) = (0, 0);
    for &(i, j, _) in trip {
        let (i, j) = (map_row(i), map_col(j));
        kl = kl.max(i.saturating_sub(j));
        ku = ku.max(j.saturating_sub(i));
    }
    let mut m = BandMatrix::zeros(n, kl, ku);
    for &(i, j, v) in trip {
        m.add(map_row(i), map_col(j), v);
    }
    m.factor()
}

/// Backtracking on `½|F|²`: halves the step until the merit decreases.
fn line_search<T: Real>(
    z: &DVector<T>,
    dz: &DVector<T>,
    merit0: T,
    mut merit: impl FnMut(&DVector<T>) -> Result<T>,
) -> Option<(DVector<T>, T, f64)> {
    let mut alpha = 1.0;
    while alpha >= MIN_STEP {
        let trial = z + dz * lit::<T>(alpha);
        if let Ok(m) = merit(&trial) {
            if m.is_finite() && m < merit0 {
                return Some((trial, m, alpha));
            }
        }
        alpha *= 0.5;
    }
    None
}

fn half_sq<T: Real>(r: &DVector<T>) -> T {
    r.norm_squared() * lit(0.5)
}

fn non_convergence<T: Real>(iterations: usize, residual: T, best: &DVector<T>) -> Error {
    Error::NonConvergence(Box::new(NonConvergence {
        iterations,
        residual: residual.as_f64(),
        best: best.iter().map(|v| v.as_f64()).collect(),
    }))
}

/// Damped Newton on the square transcription.
pub fn solve_square<T: Real>(
    problem: &CollocationProblem<T>,
    initial_guess: Option<&DVector<T>>,
) -> Result<(StateTrajectory<T>, SolveReport)> {
    solve_square_with(problem, initial_guess, SolveOptions::square())
}

pub fn solve_square_with<T: Real>(
    problem: &CollocationProblem<T>,
    initial_guess: Option<&DVector<T>>,
    opts: SolveOptions,
) -> Result<(StateTrajectory<T>, SolveReport)> {
    if problem.mode() != Mode::Square || !problem.is_square() {
        return Err(Error::InfeasibleMethod(format!(
            "{} unknowns against {} equations; pin the redundant thrust directions with extra \
             outputs or minimize effort",
            problem.n_unknowns(),
            problem.n_constraints()
        )));
    }
    let z0 = match initial_guess {
        Some(z) => z.clone(),
        None => problem.initial_guess()?,
    };
    let out = newton_square(problem, z0, opts)?;
    let report = make_report(problem, &out, None)?;
    Ok((problem.to_trajectory(&out.z), report))
}

fn newton_square<T: Real>(
    problem: &CollocationProblem<T>,
    mut z: DVector<T>,
    opts: SolveOptions,
) -> Result<Newton<T>> {
    let tol = lit::<T>(opts.tolerance);
    let mut r = problem.residual(&z)?;
    let mut merit = half_sq(&r);
    let mut damping = Vec::new();
    let n = problem.n_unknowns();
    for it in 0..opts.max_iterations {
        let rn = r.amax();
        debug!("newton iter {it}: |F| = {:e}", rn.as_f64());
        if rn < tol {
            return Ok(Newton {
                z,
                iterations: it,
                damping,
            });
        }
        let trip = problem.jacobian_triplets(&z, false)?;
        let lu = band_from_triplets(n, &trip, |i| i, |j| j)?;
        let dz = -lu.solve(&r);
        match line_search(&z, &dz, merit, |zt| Ok(half_sq(&problem.residual(zt)?))) {
            Some((zn, m, alpha)) => {
                z = zn;
                merit = m;
                damping.push(alpha);
                r = problem.residual(&z)?;
            }
            None => return Err(non_convergence(it, rn, &z)),
        }
    }
    let rn = r.amax();
    if rn < tol {
        return Ok(Newton {
            z,
            iterations: opts.max_iterations,
            damping,
        });
    }
    Err(non_convergence(opts.max_iterations, rn, &z))
}

/// Minimum-effort solve. The start point comes from pinning the thrust
/// direction to the hover value, which makes the problem square.
pub fn solve_min_effort<T: Real>(
    problem: &CollocationProblem<T>,
) -> Result<(StateTrajectory<T>, SolveReport)> {
    solve_min_effort_with(problem, None, SolveOptions::kkt())
}

pub fn solve_min_effort_with<T: Real>(
    problem: &CollocationProblem<T>,
    initial_guess: Option<&DVector<T>>,
    opts: SolveOptions,
) -> Result<(StateTrajectory<T>, SolveReport)> {
    if problem.extra_outputs().is_some() {
        return Err(Error::InvalidArgument(
            "minimum-effort mode leaves the thrust direction free".into(),
        ));
    }
    let z0 = match initial_guess {
        Some(z) => z.clone(),
        None => warm_start(problem)?,
    };
    let (out, stat) = newton_kkt(problem, z0, opts)?;
    let report = make_report(problem, &out, Some(stat))?;
    Ok((problem.to_trajectory(&out.z), report))
}

fn warm_start<T: Real>(problem: &CollocationProblem<T>) -> Result<DVector<T>> {
    if problem.n_unknowns() == problem.n_constraints() {
        return problem.initial_guess();
    }
    let hover = problem.hover();
    let a = problem.vehicle().a() * &hover.u;
    let n = a.norm();
    let mut square = problem
        .with_boundary(Boundary::default_for(problem.scheme()))?
        .with_extra_outputs(a[0] / n, a[1] / n)?;
    square.mode = Mode::Square;
    info!(
        "min-effort warm start from thrust direction ({:e}, {:e})",
        (a[0] / n).as_f64(),
        (a[1] / n).as_f64()
    );
    let out = newton_square(&square, square.initial_guess()?, SolveOptions::square())?;
    Ok(out.z)
}

/// `grad cost + J^T lambda`, and the constraint residual.
fn kkt_residual<T: Real>(
    problem: &CollocationProblem<T>,
    z: &DVector<T>,
    lambda: &DVector<T>,
    weights: &DVector<T>,
    jt: &[(usize, usize, T)],
) -> Result<(DVector<T>, DVector<T>)> {
    let scale = problem.effort_scale() * lit(2.0);
    let mut g = weights.component_mul(z) * scale;
    for &(i, j, v) in jt {
        g[j] += v * lambda[i];
    }
    Ok((g, problem.residual(z)?))
}

/// Hessian of `lambda^T c` by second differences within each block.
fn constraint_hessian<T: Real>(
    problem: &CollocationProblem<T>,
    z: &DVector<T>,
    lambda: &DVector<T>,
) -> Result<Vec<(usize, usize, T)>> {
    let h = fd_step::<T>(true);
    let mut work = z.clone();
    let mut trip = Vec::new();
    let mut buf = vec![T::zero(); 16];
    for b in &problem.blocks {
        buf.resize(b.rows, T::zero());
        let lam = lambda.rows(b.row, b.rows);
        if lam.amax() == T::zero() {
            continue;
        }
        let mut phi = |w: &DVector<T>| -> Result<T> {
            problem.eval_block(b, w, &mut buf)?;
            Ok(buf
                .iter()
                .zip(lam.iter())
                .fold(T::zero(), |a, (c, l)| a + *c * *l))
        };
        let nv = b.vars.len();
        let steps: Vec<T> = b
            .vars
            .iter()
            .map(|&v| h * z[v].abs().max(T::one()))
            .collect();
        let f0 = phi(&work)?;
        let mut fi = Vec::with_capacity(nv);
        for (a, &va) in b.vars.iter().enumerate() {
            work[va] += steps[a];
            fi.push(phi(&work)?);
            work[va] = z[va];
        }
        for (a, &va) in b.vars.iter().enumerate() {
            for (c, &vc) in b.vars.iter().enumerate().skip(a) {
                work[va] += steps[a];
                work[vc] += steps[c];
                let fac = phi(&work)?;
                work[va] = z[va];
                work[vc] = z[vc];
                let d = (fac - fi[a] - fi[c] + f0) / (steps[a] * steps[c]);
                if d != T::zero() {
                    trip.push((va, vc, d));
                    if a != c {
                        trip.push((vc, va, d));
                    }
                }
            }
        }
    }
    Ok(trip)
}

fn newton_kkt<T: Real>(
    problem: &CollocationProblem<T>,
    mut z: DVector<T>,
    opts: SolveOptions,
) -> Result<(Newton<T>, f64)> {
    let n = problem.n_unknowns();
    let m = problem.n_constraints();
    let weights = problem.effort_weights();
    let cost_diag = &weights * (problem.effort_scale() * lit(2.0));

    // Interleave unknowns and multipliers by time stage to keep the KKT
    // matrix banded.
    let var_stage = problem.layout.stages();
    let row_stage = problem.row_stages();
    let mut order: Vec<(usize, usize, usize)> = (0..n)
        .map(|j| (var_stage[j], 0, j))
        .chain((0..m).map(|i| (row_stage[i], 1, n + i)))
        .collect();
    order.sort();
    let mut pos = vec![0; n + m];
    for (p, &(_, _, idx)) in order.iter().enumerate() {
        pos[idx] = p;
    }

    let tol = lit::<T>(opts.tolerance);
    let mut lambda = DVector::<T>::zeros(m);
    let mut damping = Vec::new();
    let mut jt = problem.jacobian_triplets(&z, true)?;
    let (mut g, mut c) = kkt_residual(problem, &z, &lambda, &weights, &jt)?;
    for it in 0..=opts.max_iterations {
        let (gn, cn) = (g.amax(), c.amax());
        debug!(
            "kkt iter {it}: |grad L| = {:e}, |c| = {:e}",
            gn.as_f64(),
            cn.as_f64()
        );
        if gn < tol && cn < tol {
            return Ok((
                Newton {
                    z,
                    iterations: it,
                    damping,
                },
                gn.as_f64(),
            ));
        }
        if it == opts.max_iterations {
            break;
        }
        let mut trip = constraint_hessian(problem, &z, &lambda)?;
        for j in 0..n {
            if cost_diag[j] != T::zero() {
                trip.push((j, j, cost_diag[j]));
            }
        }
        for &(i, j, v) in &jt {
            trip.push((n + i, j, v));
            trip.push((j, n + i, v));
        }
        let lu = band_from_triplets(n + m, &trip, |i| pos[i], |j| pos[j])
            .map_err(|_| Error::SingularKkt)?;
        let mut rhs = DVector::zeros(n + m);
        for j in 0..n {
            rhs[pos[j]] = -g[j];
        }
        for i in 0..m {
            rhs[pos[n + i]] = -c[i];
        }
        let sol = lu.solve(&rhs);
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularKkt);
        }
        let dz = DVector::from_fn(n, |j, _| sol[pos[j]]);
        let dl = DVector::from_fn(m, |i, _| sol[pos[n + i]]);

        let merit0 = (g.norm_squared() + c.norm_squared()) * lit(0.5);
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha >= MIN_STEP {
            let a = lit::<T>(alpha);
            let zt = &z + &dz * a;
            let lt = &lambda + &dl * a;
            if let Ok(jtt) = problem.jacobian_triplets(&zt, true) {
                if let Ok((gt, ct)) = kkt_residual(problem, &zt, &lt, &weights, &jtt) {
                    let mt = (gt.norm_squared() + ct.norm_squared()) * lit(0.5);
                    if mt.is_finite() && mt < merit0 {
                        accepted = Some((zt, lt, jtt, gt, ct));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((zt, lt, jtt, gt, ct)) => {
                z = zt;
                lambda = lt;
                jt = jtt;
                g = gt;
                c = ct;
                damping.push(alpha);
            }
            None => return Err(non_convergence(it, gn.max(cn), &z)),
        }
    }
    Err(non_convergence(
        opts.max_iterations,
        g.amax().max(c.amax()),
        &z,
    ))
}

fn make_report<T: Real>(
    problem: &CollocationProblem<T>,
    out: &Newton<T>,
    stationarity: Option<f64>,
) -> Result<SolveReport> {
    let traj = problem.to_trajectory(&out.z);
    let residual = problem.residual(&out.z)?.amax().as_f64();
    let all_inputs = traj.inputs.iter().chain(traj.mid_inputs.iter().flatten());
    let min_thrust = all_inputs
        .flat_map(|u| u.iter().map(|v| v.as_f64()))
        .fold(f64::INFINITY, f64::min);
    let eps = lit::<T>(DEFAULT_EULER_EPS);
    let euler_domain_ok = traj.angles.iter().all(|a| a.check_domain(eps).is_ok());
    let certificate = certify(problem, &traj)?.as_f64();
    Ok(SolveReport {
        iterations: out.iterations,
        residual,
        stationarity,
        damping: out.damping.clone(),
        thrust_positive: min_thrust > 0.0,
        min_thrust,
        euler_domain_ok,
        cost: problem.effort(&out.z).as_f64(),
        certificate,
    })
}

/// Solves `[I J^T; J 0] [d; mu] = [v; r]` with the constraint Jacobian at `z`.
fn augmented_solve<T: Real>(
    problem: &CollocationProblem<T>,
    z: &DVector<T>,
    v: &DVector<T>,
    r: &DVector<T>,
) -> Result<DVector<T>> {
    let n = problem.n_unknowns();
    let m = problem.n_constraints();
    let var_stage = problem.layout.stages();
    let row_stage = problem.row_stages();
    let mut order: Vec<(usize, usize, usize)> = (0..n)
        .map(|j| (var_stage[j], 0, j))
        .chain((0..m).map(|i| (row_stage[i], 1, n + i)))
        .collect();
    order.sort();
    let mut pos = vec![0; n + m];
    for (p, &(_, _, idx)) in order.iter().enumerate() {
        pos[idx] = p;
    }
    let mut trip: Vec<(usize, usize, T)> = (0..n).map(|j| (j, j, T::one())).collect();
    for (i, j, val) in problem.jacobian_triplets(z, true)? {
        trip.push((n + i, j, val));
        trip.push((j, n + i, val));
    }
    let lu =
        band_from_triplets(n + m, &trip, |i| pos[i], |j| pos[j]).map_err(|_| Error::SingularKkt)?;
    let mut rhs = DVector::zeros(n + m);
    for j in 0..n {
        rhs[pos[j]] = v[j];
    }
    for i in 0..m {
        rhs[pos[n + i]] = r[i];
    }
    let sol = lu.solve(&rhs);
    Ok(DVector::from_fn(n, |j, _| sol[pos[j]]))
}

/// Orthogonal projection of `v` onto the null space of the constraint
/// Jacobian at `z`.
pub fn tangent_projection<T: Real>(
    problem: &CollocationProblem<T>,
    z: &DVector<T>,
    v: &DVector<T>,
) -> Result<DVector<T>> {
    augmented_solve(problem, z, v, &DVector::zeros(problem.n_constraints()))
}

/// Returns `z` to the constraint manifold by minimum-norm Gauss-Newton
/// corrections.
pub fn restore_feasibility<T: Real>(
    problem: &CollocationProblem<T>,
    z: &DVector<T>,
    tolerance: T,
) -> Result<DVector<T>> {
    let mut z = z.clone();
    let zero = DVector::zeros(problem.n_unknowns());
    for it in 0..20 {
        let c = problem.residual(&z)?;
        if c.amax() < tolerance {
            return Ok(z);
        }
        z += augmented_solve(problem, &z, &zero, &(-c))?;
        debug!("restoration iter {it}");
    }
    let c = problem.residual(&z)?.amax();
    Err(non_convergence(20, c, &z))
}

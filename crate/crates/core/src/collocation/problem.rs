//! Unknown layout, constraint blocks and residual evaluation.

use nalgebra::{DVector, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::flat::{FlatSample, FlatTrajectory};
use crate::scalar::{lit, Real};
use crate::se3::{euler_rate_matrix, euler_rate_matrix_inverse, euler_to_rotation, EulerAngles};
use crate::trajectory::{Scheme, Source, StateTrajectory};
use crate::vehicle::{hover_solve, hover_with_direction, Hover, Vehicle};

/// Whether the unconstrained input directions are pinned by extra outputs
/// (square) or chosen by minimizing effort.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Square,
    MinEffort,
}

/// Which end of the horizon carries the hover boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Hover state and thrusts at `t = 0`.
    Initial,
    /// Hover state (and thrusts, where the stencil has them) at `t_f`.
    Terminal,
    /// Hover state and thrusts at `t = 0`, hover roll and pitch at rest at
    /// `t_f`. Only solvable with redundant thrust directions and an
    /// implicit stencil.
    Both,
}

impl Boundary {
    /// Euler steps are only square when marched from the terminal hover; the
    /// implicit stencils start from the initial hover.
    pub fn default_for(scheme: Scheme) -> Self {
        match scheme {
            Scheme::Euler => Boundary::Terminal,
            _ => Boundary::Initial,
        }
    }

    /// As [`Boundary::default_for`], except that implicit minimum-effort
    /// problems with more than four rotors also return to hover at `t_f`;
    /// otherwise the optimizer leaves the vehicle spinning where the horizon
    /// ends.
    pub fn default_for_problem(scheme: Scheme, mode: Mode, n_inputs: usize) -> Self {
        if mode == Mode::MinEffort && n_inputs > 4 && scheme != Scheme::Euler {
            Boundary::Both
        } else {
            Self::default_for(scheme)
        }
    }

    pub(crate) fn initial(self) -> bool {
        matches!(self, Boundary::Initial | Boundary::Both)
    }

    pub(crate) fn terminal(self) -> bool {
        matches!(self, Boundary::Terminal | Boundary::Both)
    }
}

/// Body-frame thrust-direction targets `(sigma_5, sigma_6)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtraOutputs<T: Real> {
    pub sigma5: T,
    pub sigma6: T,
}

/// Offsets of each knot's state and inputs inside the unknown vector.
/// Unknowns are stored in time order so the Jacobian is banded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub intervals: usize,
    pub n_inputs: usize,
    pub x: Vec<usize>,
    pub u: Vec<Option<usize>>,
    pub mid: Vec<usize>,
    pub len: usize,
}

impl Layout {
    fn new(scheme: Scheme, intervals: usize, n_inputs: usize) -> Self {
        let mut pos = 0;
        let mut x = Vec::with_capacity(intervals + 1);
        let mut u = Vec::with_capacity(intervals + 1);
        let mut mid = Vec::new();
        for k in 0..=intervals {
            x.push(pos);
            pos += 6;
            if scheme != Scheme::Euler || k < intervals {
                u.push(Some(pos));
                pos += n_inputs;
            } else {
                u.push(None);
            }
            if scheme == Scheme::HermiteSimpson && k < intervals {
                mid.push(pos);
                pos += n_inputs;
            }
        }
        Self {
            intervals,
            n_inputs,
            x,
            u,
            mid,
            len: pos,
        }
    }

    /// Time-order stage of every unknown: knot k is `2k`, midpoint k is `2k + 1`.
    pub fn stages(&self) -> Vec<usize> {
        let mut s = vec![0; self.len];
        for k in 0..=self.intervals {
            let end = self.u[k].map_or(self.x[k] + 6, |o| o + self.n_inputs);
            for v in s.iter_mut().take(end).skip(self.x[k]) {
                *v = 2 * k;
            }
            if let Some(&m) = self.mid.get(k) {
                for v in s.iter_mut().skip(m).take(self.n_inputs) {
                    *v = 2 * k + 1;
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Node {
    Knot(usize),
    Mid(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum BlockKind {
    /// Hover pin at `knot`; `inputs` adds the hover thrusts. Without `full`
    /// only roll, pitch and their rates are pinned: the yaw path rows and
    /// the defect chain already fix yaw and its rate.
    Boundary {
        knot: usize,
        inputs: bool,
        full: bool,
    },
    Path(Node),
    Defect(usize),
}

/// A group of residual rows and the unknowns they depend on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Block {
    pub kind: BlockKind,
    pub row: usize,
    pub rows: usize,
    pub vars: Vec<usize>,
    pub stage: usize,
}

/// Direct transcription of the flatness constraints on a uniform knot grid.
#[derive(Debug, Clone)]
pub struct CollocationProblem<T: Real> {
    pub(crate) vehicle: Vehicle<T>,
    pub(crate) flat: FlatTrajectory<T>,
    pub(crate) scheme: Scheme,
    pub(crate) mode: Mode,
    pub(crate) boundary: Boundary,
    pub(crate) extra: Option<ExtraOutputs<T>>,
    pub(crate) layout: Layout,
    pub(crate) knots: Vec<FlatSample<T>>,
    pub(crate) mids: Vec<FlatSample<T>>,
    pub(crate) hover: Hover<T>,
    pub(crate) blocks: Vec<Block>,
    pub(crate) n_rows: usize,
    pub(crate) h: T,
}

/// Rows and unknowns of a transcription, split by origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counts {
    pub unknowns: usize,
    /// Path and defect equations.
    pub transcribed: usize,
    /// Hover boundary conditions.
    pub boundary: usize,
}

/// Builds the transcription of `traj` on `intervals` uniform steps
/// (`intervals + 1` knots).
pub fn transcribe<T: Real>(
    vehicle: &Vehicle<T>,
    traj: &FlatTrajectory<T>,
    intervals: usize,
    scheme: Scheme,
    mode: Mode,
) -> Result<CollocationProblem<T>> {
    CollocationProblem::build(vehicle, traj, intervals, scheme, mode, None, None)
}

/// Adds the thrust-direction outputs, two equations per input node.
pub fn extra_output_constraints<T: Real>(
    problem: &CollocationProblem<T>,
    sigma5: T,
    sigma6: T,
) -> Result<CollocationProblem<T>> {
    problem.with_extra_outputs(sigma5, sigma6)
}

impl<T: Real> CollocationProblem<T> {
    fn build(
        vehicle: &Vehicle<T>,
        traj: &FlatTrajectory<T>,
        intervals: usize,
        scheme: Scheme,
        mode: Mode,
        extra: Option<ExtraOutputs<T>>,
        boundary: Option<Boundary>,
    ) -> Result<Self> {
        if intervals < 3 {
            return Err(Error::InvalidArgument(format!(
                "need at least 3 intervals, got {intervals}"
            )));
        }
        let boundary = boundary.unwrap_or(Boundary::default_for_problem(scheme, mode, vehicle.n()));
        if scheme == Scheme::Euler && boundary != Boundary::Terminal {
            return Err(Error::InvalidArgument(
                "the explicit Euler stencil needs terminal-only boundary conditions".into(),
            ));
        }
        let hover = match extra {
            Some(e) => hover_with_direction(vehicle, e.sigma5, e.sigma6)?,
            None => hover_solve(vehicle)?,
        };
        let layout = Layout::new(scheme, intervals, vehicle.n());
        let knots = traj.sample_grid(intervals + 1)?;
        let mids = if scheme == Scheme::HermiteSimpson {
            traj.sample_midpoints(intervals + 1)?
        } else {
            Vec::new()
        };
        let mut p = Self {
            vehicle: vehicle.clone(),
            flat: traj.clone(),
            scheme,
            mode,
            boundary,
            extra,
            layout,
            knots,
            mids,
            hover,
            blocks: Vec::new(),
            n_rows: 0,
            h: traj.tf() / lit(intervals as f64),
        };
        p.assemble_blocks();
        Ok(p)
    }

    /// Same problem with the thrust-direction outputs pinned.
    pub fn with_extra_outputs(&self, sigma5: T, sigma6: T) -> Result<Self> {
        Self::build(
            &self.vehicle,
            &self.flat,
            self.layout.intervals,
            self.scheme,
            self.mode,
            Some(ExtraOutputs { sigma5, sigma6 }),
            Some(self.boundary),
        )
    }

    /// Same problem with the hover conditions at the other end.
    pub fn with_boundary(&self, boundary: Boundary) -> Result<Self> {
        Self::build(
            &self.vehicle,
            &self.flat,
            self.layout.intervals,
            self.scheme,
            self.mode,
            self.extra,
            Some(boundary),
        )
    }

    fn path_rows(&self) -> usize {
        4 + if self.extra.is_some() { 2 } else { 0 }
    }

    fn assemble_blocks(&mut self) {
        let n = self.layout.intervals;
        let nu = self.layout.n_inputs;
        let lay = self.layout.clone();
        let xv = |k: usize| (lay.x[k]..lay.x[k] + 6).collect::<Vec<_>>();
        let uv = |k: usize| lay.u[k].map_or(Vec::new(), |o| (o..o + nu).collect());
        let mv = |k: usize| (lay.mid[k]..lay.mid[k] + nu).collect::<Vec<_>>();
        let mut blocks = Vec::new();
        let mut row = 0;
        let mut push = |kind: BlockKind, rows: usize, vars: Vec<usize>, stage: usize| {
            blocks.push(Block {
                kind,
                row,
                rows,
                vars,
                stage,
            });
            row += rows;
        };
        // knots whose thrusts are pinned by the boundary rows carry no path rows
        let pinned = |k: usize| {
            (k == 0 && self.boundary.initial()) || (k == n && self.boundary == Boundary::Terminal)
        };
        if self.boundary.initial() {
            let vars = [xv(0), uv(0)].concat();
            let kind = BlockKind::Boundary {
                knot: 0,
                inputs: true,
                full: true,
            };
            push(kind, vars.len(), vars, 0);
        }
        let pr = self.path_rows();
        let path_knot = |k: usize| {
            [
                lay.x[k]..lay.x[k] + 3,
                lay.u[k].unwrap()..lay.u[k].unwrap() + nu,
            ]
            .into_iter()
            .flatten()
            .collect::<Vec<_>>()
        };
        for k in 0..=n {
            if !pinned(k) && self.layout.u[k].is_some() {
                push(BlockKind::Path(Node::Knot(k)), pr, path_knot(k), 2 * k);
            }
            if k == n {
                break;
            }
            let full = match self.scheme {
                Scheme::Euler => [xv(k), uv(k), xv(k + 1)].concat(),
                Scheme::Trapezoidal => [xv(k), uv(k), xv(k + 1), uv(k + 1)].concat(),
                Scheme::HermiteSimpson => [xv(k), uv(k), mv(k), xv(k + 1), uv(k + 1)].concat(),
            };
            if self.scheme == Scheme::HermiteSimpson {
                push(BlockKind::Path(Node::Mid(k)), pr, full.clone(), 2 * k + 1);
            }
            push(BlockKind::Defect(k), 6, full, 2 * k + 1);
        }
        if self.boundary.terminal() {
            let inputs = self.boundary == Boundary::Terminal && lay.u[n].is_some();
            let vars = if inputs {
                [xv(n), uv(n)].concat()
            } else {
                xv(n)
            };
            let full = self.boundary == Boundary::Terminal;
            let rows = if full { vars.len() } else { 4 };
            let kind = BlockKind::Boundary {
                knot: n,
                inputs,
                full,
            };
            push(kind, rows, vars, 2 * n);
        }
        self.n_rows = row;
        self.blocks = blocks;
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn extra_outputs(&self) -> Option<ExtraOutputs<T>> {
        self.extra
    }

    pub fn vehicle(&self) -> &Vehicle<T> {
        &self.vehicle
    }

    pub fn flat(&self) -> &FlatTrajectory<T> {
        &self.flat
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn intervals(&self) -> usize {
        self.layout.intervals
    }

    /// Hover trim used for the boundary conditions and initial guess.
    pub fn hover(&self) -> &Hover<T> {
        &self.hover
    }

    pub fn step(&self) -> T {
        self.h
    }

    pub fn counts(&self) -> Counts {
        let boundary = self
            .blocks
            .iter()
            .filter(|b| matches!(b.kind, BlockKind::Boundary { .. }))
            .map(|b| b.rows)
            .sum();
        Counts {
            unknowns: self.layout.len,
            transcribed: self.n_rows - boundary,
            boundary,
        }
    }

    pub fn n_unknowns(&self) -> usize {
        self.layout.len
    }

    pub fn n_constraints(&self) -> usize {
        self.n_rows
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.layout.len
    }

    /// Hover state at knot `k`: hover roll/pitch, yaw and yaw rate from the
    /// flat output.
    pub fn hover_state(&self, sample: &FlatSample<T>) -> Result<Vector6<T>> {
        let a = EulerAngles::new(
            self.hover.angles.roll,
            self.hover.angles.pitch,
            sample.yaw(0),
        );
        let w = euler_rate_matrix(a)? * Vector3::new(T::zero(), T::zero(), sample.yaw(1));
        Ok(Vector6::new(a.roll, a.pitch, a.yaw, w[0], w[1], w[2]))
    }

    /// Hover replicated at every knot, following the commanded yaw.
    pub fn initial_guess(&self) -> Result<DVector<T>> {
        let lay = &self.layout;
        let nu = lay.n_inputs;
        let mut z = DVector::zeros(lay.len);
        for k in 0..=lay.intervals {
            let x = self.hover_state(&self.knots[k])?;
            z.rows_mut(lay.x[k], 6).copy_from(&x);
            if let Some(o) = lay.u[k] {
                z.rows_mut(o, nu).copy_from(&self.hover.u);
            }
            if let Some(&m) = lay.mid.get(k) {
                z.rows_mut(m, nu).copy_from(&self.hover.u);
            }
        }
        Ok(z)
    }

    fn state(&self, z: &DVector<T>, k: usize) -> Vector6<T> {
        z.fixed_rows::<6>(self.layout.x[k]).into_owned()
    }

    fn input(&self, z: &DVector<T>, k: usize) -> DVector<T> {
        match self.layout.u[k] {
            Some(o) => z.rows(o, self.layout.n_inputs).into_owned(),
            None => self.hover.u.clone(),
        }
    }

    fn mid_input(&self, z: &DVector<T>, k: usize) -> DVector<T> {
        z.rows(self.layout.mid[k], self.layout.n_inputs)
            .into_owned()
    }

    /// `[E^-1(theta) omega; J^-1 (B u - omega x J omega)]`.
    pub(crate) fn dynamics(&self, x: &Vector6<T>, u: &DVector<T>) -> Result<Vector6<T>> {
        let a = EulerAngles::new(x[0], x[1], x[2]);
        let w = Vector3::new(x[3], x[4], x[5]);
        let td = euler_rate_matrix_inverse(a)? * w;
        let j = self.vehicle.inertia();
        let wd = self.vehicle.inertia_inv() * (self.vehicle.b() * u - w.cross(&(j * w)));
        Ok(Vector6::new(td[0], td[1], td[2], wd[0], wd[1], wd[2]))
    }

    /// Hermite-Simpson midpoint state.
    fn mid_state(&self, z: &DVector<T>, k: usize) -> Result<Vector6<T>> {
        let (x0, x1) = (self.state(z, k), self.state(z, k + 1));
        let f0 = self.dynamics(&x0, &self.input(z, k))?;
        let f1 = self.dynamics(&x1, &self.input(z, k + 1))?;
        Ok((x0 + x1) * lit::<T>(0.5) + (f0 - f1) * (self.h / lit(8.0)))
    }

    fn path_residual(
        &self,
        angles: EulerAngles<T>,
        u: &DVector<T>,
        s: &FlatSample<T>,
        out: &mut [T],
    ) {
        let r = euler_to_rotation(angles);
        let veh = &self.vehicle;
        let au = veh.a() * u;
        let f = au - r.matrix().transpose() * (s.pos(2) - veh.gravity_vector()) * veh.mass();
        out[0] = f[0];
        out[1] = f[1];
        out[2] = f[2];
        out[3] = angles.yaw - s.yaw(0);
        if let Some(e) = self.extra {
            let n = au.norm();
            out[4] = au[0] / n - e.sigma5;
            out[5] = au[1] / n - e.sigma6;
        }
    }

    pub(crate) fn eval_block(&self, b: &Block, z: &DVector<T>, out: &mut [T]) -> Result<()> {
        match b.kind {
            BlockKind::Boundary {
                knot: k,
                inputs,
                full,
            } => {
                let target = self.hover_state(&self.knots[k])?;
                let x = self.state(z, k);
                if !full {
                    let a = EulerAngles::new(x[0], x[1], x[2]);
                    let rates = euler_rate_matrix_inverse(a)? * Vector3::new(x[3], x[4], x[5]);
                    out[0] = x[0] - target[0];
                    out[1] = x[1] - target[1];
                    out[2] = rates[0];
                    out[3] = rates[1];
                    return Ok(());
                }
                for i in 0..6 {
                    out[i] = x[i] - target[i];
                }
                if inputs {
                    let u = self.input(z, k);
                    for i in 0..u.len() {
                        out[6 + i] = u[i] - self.hover.u[i];
                    }
                }
            }
            BlockKind::Path(Node::Knot(k)) => {
                let x = self.state(z, k);
                let a = EulerAngles::new(x[0], x[1], x[2]);
                self.path_residual(a, &self.input(z, k), &self.knots[k], out);
            }
            BlockKind::Path(Node::Mid(k)) => {
                let xm = self.mid_state(z, k)?;
                let a = EulerAngles::new(xm[0], xm[1], xm[2]);
                self.path_residual(a, &self.mid_input(z, k), &self.mids[k], out);
            }
            BlockKind::Defect(k) => {
                let (x0, x1) = (self.state(z, k), self.state(z, k + 1));
                let h = self.h;
                let d = match self.scheme {
                    Scheme::Euler => x1 - x0 - self.dynamics(&x0, &self.input(z, k))? * h,
                    Scheme::Trapezoidal => {
                        let f0 = self.dynamics(&x0, &self.input(z, k))?;
                        let f1 = self.dynamics(&x1, &self.input(z, k + 1))?;
                        x1 - x0 - (f0 + f1) * (h * lit(0.5))
                    }
                    Scheme::HermiteSimpson => {
                        let f0 = self.dynamics(&x0, &self.input(z, k))?;
                        let f1 = self.dynamics(&x1, &self.input(z, k + 1))?;
                        let xm = (x0 + x1) * lit::<T>(0.5) + (f0 - f1) * (h / lit(8.0));
                        let fm = self.dynamics(&xm, &self.mid_input(z, k))?;
                        x1 - x0 - (f0 + fm * lit::<T>(4.0) + f1) * (h / lit(6.0))
                    }
                };
                out[..6].copy_from_slice(d.as_slice());
            }
        }
        Ok(())
    }

    /// Full residual vector; zero exactly at a solution of the transcription.
    pub fn residual(&self, z: &DVector<T>) -> Result<DVector<T>> {
        if z.len() != self.layout.len {
            return Err(Error::InvalidArgument(format!(
                "unknown vector has length {}, layout expects {}",
                z.len(),
                self.layout.len
            )));
        }
        let mut r = DVector::zeros(self.n_rows);
        for b in &self.blocks {
            self.eval_block(b, z, &mut r.as_mut_slice()[b.row..b.row + b.rows])?;
        }
        Ok(r)
    }

    /// Block Jacobian entries `(row, col, value)` by finite differences;
    /// central differences when `central` is set.
    pub(crate) fn jacobian_triplets(
        &self,
        z: &DVector<T>,
        central: bool,
    ) -> Result<Vec<(usize, usize, T)>> {
        let rel = fd_step::<T>(central);
        let mut work = z.clone();
        let mut trip = Vec::new();
        let mut base = vec![T::zero(); 16];
        let mut plus = vec![T::zero(); 16];
        let mut minus = vec![T::zero(); 16];
        for b in &self.blocks {
            base.resize(b.rows, T::zero());
            plus.resize(b.rows, T::zero());
            minus.resize(b.rows, T::zero());
            if !central {
                self.eval_block(b, &work, &mut base)?;
            }
            for &v in &b.vars {
                let orig = work[v];
                let h = rel * orig.abs().max(T::one());
                work[v] = orig + h;
                self.eval_block(b, &work, &mut plus)?;
                if central {
                    work[v] = orig - h;
                    self.eval_block(b, &work, &mut minus)?;
                }
                work[v] = orig;
                for i in 0..b.rows {
                    let d = if central {
                        (plus[i] - minus[i]) / (h + h)
                    } else {
                        (plus[i] - base[i]) / h
                    };
                    if d != T::zero() {
                        trip.push((b.row + i, v, d));
                    }
                }
            }
        }
        Ok(trip)
    }

    /// Unpacks an unknown vector into knot histories.
    pub fn to_trajectory(&self, z: &DVector<T>) -> StateTrajectory<T> {
        let lay = &self.layout;
        let mut out = StateTrajectory {
            source: Source::Collocation(self.scheme),
            times: Vec::with_capacity(lay.intervals + 1),
            angles: Vec::with_capacity(lay.intervals + 1),
            rates: Vec::with_capacity(lay.intervals + 1),
            inputs: Vec::with_capacity(lay.intervals + 1),
            mid_inputs: None,
        };
        for k in 0..=lay.intervals {
            let x = self.state(z, k);
            out.times.push(self.knots[k].t);
            out.angles.push(EulerAngles::new(x[0], x[1], x[2]));
            out.rates.push(Vector3::new(x[3], x[4], x[5]));
            out.inputs.push(self.input(z, k));
        }
        if self.scheme == Scheme::HermiteSimpson {
            out.mid_inputs = Some((0..lay.intervals).map(|k| self.mid_input(z, k)).collect());
        }
        out
    }

    /// Inverse of [`CollocationProblem::to_trajectory`] for trajectories on
    /// this grid; midpoint inputs default to knot averages when absent.
    pub fn from_trajectory(&self, traj: &StateTrajectory<T>) -> Result<DVector<T>> {
        let lay = &self.layout;
        if traj.len() != lay.intervals + 1 {
            return Err(Error::InvalidArgument(format!(
                "trajectory has {} knots, grid has {}",
                traj.len(),
                lay.intervals + 1
            )));
        }
        let nu = lay.n_inputs;
        let mut z = DVector::zeros(lay.len);
        for k in 0..=lay.intervals {
            let a = traj.angles[k].to_vector();
            let w = traj.rates[k];
            z.fixed_rows_mut::<3>(lay.x[k]).copy_from(&a);
            z.fixed_rows_mut::<3>(lay.x[k] + 3).copy_from(&w);
            if let Some(o) = lay.u[k] {
                z.rows_mut(o, nu).copy_from(&traj.inputs[k]);
            }
            if let Some(&m) = lay.mid.get(k) {
                let um = match &traj.mid_inputs {
                    Some(mids) => mids[k].clone(),
                    None => (&traj.inputs[k] + &traj.inputs[k + 1]) * lit::<T>(0.5),
                };
                z.rows_mut(m, nu).copy_from(&um);
            }
        }
        Ok(z)
    }

    /// Stage (time order) of every residual row.
    pub(crate) fn row_stages(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_rows];
        for b in &self.blocks {
            for v in s.iter_mut().skip(b.row).take(b.rows) {
                *v = b.stage;
            }
        }
        s
    }

    /// Quadrature weight of every input node, in seconds; zero for state
    /// unknowns.
    pub(crate) fn effort_weights(&self) -> DVector<T> {
        let lay = &self.layout;
        let nu = lay.n_inputs;
        let n = lay.intervals;
        let h = self.h;
        let mut w = DVector::zeros(lay.len);
        let mut put = |off: Option<usize>, val: T| {
            if let Some(o) = off {
                for i in 0..nu {
                    w[o + i] += val;
                }
            }
        };
        for k in 0..n {
            match self.scheme {
                Scheme::Euler => put(lay.u[k], h),
                Scheme::Trapezoidal => {
                    put(lay.u[k], h * lit(0.5));
                    put(lay.u[k + 1], h * lit(0.5));
                }
                Scheme::HermiteSimpson => {
                    put(lay.u[k], h / lit(6.0));
                    put(Some(lay.mid[k]), h * lit(4.0) / lit(6.0));
                    put(lay.u[k + 1], h / lit(6.0));
                }
            }
        }
        w
    }

    /// Effort `(1 / (N t_f)) sum w_j |N u_j / (m g)|^2` over the unknowns.
    pub fn effort(&self, z: &DVector<T>) -> T {
        let w = self.effort_weights();
        let scale = self.effort_scale();
        w.iter()
            .zip(z.iter())
            .fold(T::zero(), |acc, (wi, zi)| acc + *wi * *zi * *zi)
            * scale
    }

    pub(crate) fn effort_scale(&self) -> T {
        let veh = &self.vehicle;
        let nn = lit::<T>(veh.n() as f64);
        let k = nn / (veh.mass() * veh.gravity());
        k * k / (nn * self.flat.tf())
    }
}

pub(crate) fn fd_step<T: Real>(central: bool) -> T {
    if central {
        lit::<T>(1e-5).max(T::default_epsilon().cbrt())
    } else {
        lit::<T>(1e-7).max(T::default_epsilon().sqrt())
    }
}

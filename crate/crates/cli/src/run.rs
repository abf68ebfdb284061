//! The `generate`, `verify` and `presets` commands.

use std::fmt;

use flatgen_core::collocation::{
    knot_residuals, solve_min_effort, solve_square, transcribe, Mode, SolveReport,
};
use flatgen_core::flat::FlatTrajectory;
use flatgen_core::flatness::{
    hover_initial_state, hover_theta_t, integrate_rank2, integrate_rank3, Rank2State,
};
use flatgen_core::simulation::{effort_cost, replay, Quadrature, TrackingMetrics};
use flatgen_core::trajectory::StateTrajectory;
use flatgen_core::vehicle::{merge_tilt_thrust, svd_reframe, Preset, TiltTricopter};
use flatgen_core::Error;
use log::{debug, info};

use crate::config::{Method, RunConfig};

/// Largest accepted per-knot force (N) or heading (rad) residual in
/// `verify`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum RunError {
    /// Bad flags or config file.
    Config(String),
    /// Unreadable or malformed CSV, or an output that cannot be written.
    Io(String),
    /// The solver failed, or the result does not pass its checks.
    Solver(String),
    /// The method cannot handle this vehicle.
    Infeasible(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) | RunError::Io(_) => 1,
            RunError::Solver(_) => 2,
            RunError::Infeasible(_) => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
            RunError::Solver(m) => write!(f, "solver error: {m}"),
            RunError::Infeasible(m) => write!(f, "infeasible method: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InfeasibleMethod(_) | Error::Rank { .. } => RunError::Infeasible(e.to_string()),
            Error::InvalidArgument(_) | Error::InvalidVehicle(_) => RunError::Config(e.to_string()),
            _ => RunError::Solver(e.to_string()),
        }
    }
}

/// Ordered `key=value` report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub entries: Vec<(String, String)>,
    /// Whether every check passed.
    pub pass: bool,
}

impl Summary {
    fn push(&mut self, key: &str, value: impl fmt::Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

fn flat_output(cfg: &RunConfig) -> Result<FlatTrajectory<f64>, RunError> {
    Ok(FlatTrajectory::rest_to_rest(cfg.start, cfg.end, cfg.tf)?)
}

fn solve(
    cfg: &RunConfig,
    flat: &FlatTrajectory<f64>,
) -> Result<(StateTrajectory<f64>, Option<SolveReport>), RunError> {
    let veh = &cfg.vehicle;
    let n = cfg.knots;
    let out = match cfg.method {
        Method::CollocationSquare => {
            let p = transcribe(veh, flat, n, cfg.scheme, Mode::Square)?;
            let (t, r) = solve_square(&p, None)?;
            (t, Some(r))
        }
        Method::CollocationExtraOutputs => {
            let p = transcribe(veh, flat, n, cfg.scheme, Mode::Square)?
                .with_extra_outputs(cfg.sigma5, cfg.sigma6)?;
            let (t, r) = solve_square(&p, None)?;
            (t, Some(r))
        }
        Method::CollocationMinEffort => {
            let p = transcribe(veh, flat, n, cfg.scheme, Mode::MinEffort)?;
            let (t, r) = solve_min_effort(&p)?;
            (t, Some(r))
        }
        Method::AnalyticRank3 => {
            let x0 = hover_initial_state(flat, veh)?;
            (integrate_rank3(flat, x0, veh, n)?, None)
        }
        Method::AnalyticRank2 => {
            let rf = svd_reframe(veh)?;
            let x0 = Rank2State {
                theta_t: hover_theta_t(&rf)?,
                theta_t_dot: 0.0,
            };
            (integrate_rank2(flat, x0, &rf, n)?.0, None)
        }
    };
    Ok(out)
}

fn push_hover_checks(s: &mut Summary, traj: &StateTrajectory<f64>, cfg: &RunConfig) {
    let l = traj.len() - 1;
    let (a0, a1) = (traj.angles[0], traj.angles[l]);
    s.push("hover_w0", format!("{:e}", traj.rates[0].norm()));
    s.push("hover_wf", format!("{:e}", traj.rates[l].norm()));
    let rp = (a1.roll - a0.roll).abs().max((a1.pitch - a0.pitch).abs());
    s.push("hover_d_roll_pitch", format!("{rp:e}"));
    let dyaw = ((a1.yaw - a0.yaw) - (cfg.end[3] - cfg.start[3])).abs();
    s.push("hover_d_yaw_error", format!("{dyaw:e}"));
    s.push("hover_roll", a0.roll);
    s.push("hover_pitch", a0.pitch);
}

fn push_tilt(s: &mut Summary, traj: &StateTrajectory<f64>) {
    let (mut amin, mut amax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut tmin, mut tmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for u in &traj.inputs {
        let (t, a) = merge_tilt_thrust(u[2], u[3]);
        amin = amin.min(a);
        amax = amax.max(a);
        tmin = tmin.min(t);
        tmax = tmax.max(t);
    }
    s.push("alpha_min", amin);
    s.push("alpha_max", amax);
    s.push("T_alpha_min", tmin);
    s.push("T_alpha_max", tmax);
}

fn push_replay(s: &mut Summary, m: &TrackingMetrics<f64>, bound: f64) -> bool {
    s.push("replay_rms_position", format!("{:e}", m.rms_position));
    s.push("replay_max_position", format!("{:e}", m.max_position));
    s.push("replay_max_yaw", format!("{:e}", m.max_yaw));
    s.push("replay_bound", bound);
    m.rms_position <= bound && m.max_yaw <= bound
}

/// Runs the configured pipeline. Returns the trajectory, the flat output it
/// tracks and the summary; `summary.pass` is false when the replay misses
/// its bound.
pub fn generate(
    cfg: &RunConfig,
) -> Result<(StateTrajectory<f64>, FlatTrajectory<f64>, Summary), RunError> {
    cfg.check_method()?;
    let flat = flat_output(cfg)?;
    info!(
        "{} on {} with {} knots",
        cfg.method, cfg.vehicle_name, cfg.knots
    );
    let (traj, report) = solve(cfg, &flat)?;

    let mut s = Summary::default();
    s.push("vehicle", &cfg.vehicle_name);
    s.push("method", cfg.method);
    if cfg.method.is_collocation() {
        s.push("scheme", cfg.scheme);
    }
    s.push("knots", traj.len());
    match &report {
        Some(r) => {
            s.push("iterations", r.iterations);
            s.push("residual", format!("{:e}", r.residual));
            if let Some(g) = r.stationarity {
                s.push("stationarity", format!("{g:e}"));
            }
            s.push("certificate", format!("{:e}", r.certificate));
            s.push("cost", r.cost);
        }
        None => {
            let cost = effort_cost(&traj, &cfg.vehicle, Quadrature::Trapezoidal)?;
            s.push("cost", cost);
        }
    }
    let min_thrust = traj
        .inputs
        .iter()
        .flat_map(|u| u.iter().copied())
        .fold(f64::INFINITY, f64::min);
    s.push("min_thrust", min_thrust);
    push_hover_checks(&mut s, &traj, cfg);
    if cfg.tilt_pair {
        push_tilt(&mut s, &traj);
    }

    debug!("replaying with {} RK4 steps", cfg.steps);
    let sim = replay(&cfg.vehicle, &traj, &flat, cfg.steps)?;
    let m = sim
        .metrics
        .ok_or_else(|| RunError::Solver("replay produced no tracking metrics".into()))?;
    s.pass = push_replay(&mut s, &m, cfg.replay_bound);
    let status = if s.pass {
        "converged"
    } else {
        "replay_bound_exceeded"
    };
    s.entries.insert(0, ("status".into(), status.into()));
    Ok((traj, flat, s))
}

/// Replays a trajectory read back from disk and re-checks its per-knot
/// force and heading residuals independently of the solver.
pub fn verify(cfg: &RunConfig, traj: &StateTrajectory<f64>) -> Result<Summary, RunError> {
    let flat = flat_output(cfg)?;
    if traj.n_inputs() != cfg.vehicle.n() {
        return Err(RunError::Config(format!(
            "file has {} thrusts, vehicle {} has {}",
            traj.n_inputs(),
            cfg.vehicle_name,
            cfg.vehicle.n()
        )));
    }
    let span = (traj.tf() - cfg.tf).abs();
    if traj.times[0] != 0.0 || span > 1e-9 * cfg.tf {
        return Err(RunError::Config(format!(
            "file spans [{}, {}], config t_f is {}",
            traj.times[0],
            traj.tf(),
            cfg.tf
        )));
    }
    let mut s = Summary::default();
    s.push("vehicle", &cfg.vehicle_name);
    s.push("knots", traj.len());

    let res = knot_residuals(&cfg.vehicle, &flat, traj)?;
    let (worst_k, worst) = res
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (k, r)| if r > acc.1 { (k, r) } else { acc });
    s.push("worst_residual", format!("{worst:e}"));
    s.push("worst_knot", worst_k);
    s.push("worst_time", traj.times[worst_k]);
    let bad: Vec<usize> = (0..res.len())
        .filter(|&k| res[k] > RESIDUAL_TOLERANCE)
        .collect();
    s.push("residual_tolerance", RESIDUAL_TOLERANCE);
    s.push("knots_over_tolerance", bad.len());
    for &k in bad.iter().take(10) {
        s.push(
            &format!("residual_knot_{k}"),
            format!("{:e} at t={}", res[k], traj.times[k]),
        );
    }

    let replay_ok = match replay(&cfg.vehicle, traj, &flat, cfg.steps) {
        Ok(sim) => match sim.metrics {
            Some(m) => push_replay(&mut s, &m, cfg.replay_bound),
            None => false,
        },
        Err(e) => {
            s.push("replay_error", e);
            false
        }
    };
    s.pass = bad.is_empty() && replay_ok;
    s.entries.insert(
        0,
        (
            "verdict".into(),
            if s.pass { "PASS" } else { "FAIL" }.into(),
        ),
    );
    Ok(s)
}

fn fmt3(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

/// Geometry of every preset vehicle.
pub fn presets() -> String {
    let mut out = String::new();
    for p in Preset::ALL {
        let v = p.build::<f64>();
        let j = v.inertia();
        out += &format!("{}\n", p.name());
        out += &format!("  N = {}\n", v.n());
        out += &format!("  rank(A) = {}\n", v.rank_a());
        out += &format!("  mass = {} kg\n", v.mass());
        out += &format!("  gravity = {} m/s^2\n", v.gravity());
        out += &format!(
            "  J = diag({:.3}, {:.3}, {:.3}) kg m^2\n",
            j[(0, 0)],
            j[(1, 1)],
            j[(2, 2)]
        );
        if p == Preset::Tricopter {
            let tri = TiltTricopter::<f64>::preset();
            out += "  arms (third arm tilts about body x; modeled as the split thrusts u_3 = T_alpha cos(alpha), u_4 = T_alpha sin(alpha) along +z and -y):\n";
            for (i, (r, c)) in tri.arms.iter().zip(tri.drag).enumerate() {
                out += &format!("    r_{} = {} m, c = {c} m\n", i + 1, fmt3(r.as_slice()));
            }
        }
        out += "  propellers:\n";
        for (i, pr) in v.propellers().iter().enumerate() {
            out += &format!(
                "    {}: r = {} m, v = {}, c = {} m\n",
                i + 1,
                fmt3(pr.r.as_slice()),
                fmt3(pr.v.as_slice()),
                pr.c
            );
        }
    }
    out
}

//! CSV histories: one row per knot.
//!
//! Columns are `t`, the flat output `sigma_*`, the Euler angles, the body
//! rates, the thrusts `u_i` and their normalized values `un_i`. Tilting-rotor
//! vehicles add `alpha` and `T_alpha`; Hermite-Simpson solutions add the
//! interval-midpoint thrusts `um_i`, empty on the last row. Values are written
//! in shortest round-trip form, so reading a file back is exact.

use std::io::{Read, Write};

use flatgen_core::flat::FlatTrajectory;
use flatgen_core::se3::EulerAngles;
use flatgen_core::trajectory::{Scheme, Source, StateTrajectory};
use flatgen_core::vehicle::{merge_tilt_thrust, Vehicle};
use nalgebra::{DVector, Vector3};

use crate::run::RunError;

/// Column names for `n` inputs.
pub fn header(n: usize, tilt_pair: bool, midpoints: bool) -> Vec<String> {
    let mut h: Vec<String> = [
        "t",
        "sigma_x",
        "sigma_y",
        "sigma_z",
        "sigma_psi",
        "phi",
        "theta",
        "psi",
        "wx",
        "wy",
        "wz",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((1..=n).map(|i| format!("u_{i}")));
    h.extend((1..=n).map(|i| format!("un_{i}")));
    if tilt_pair {
        h.push("alpha".into());
        h.push("T_alpha".into());
    }
    if midpoints {
        h.extend((1..=n).map(|i| format!("um_{i}")));
    }
    h
}

/// Shortest representation that parses back to the same value.
fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn csv_error(e: impl std::fmt::Display) -> RunError {
    RunError::Io(e.to_string())
}

/// Writes `traj` with the flat output sampled at every knot.
pub fn write<W: Write>(
    out: W,
    traj: &StateTrajectory<f64>,
    flat: &FlatTrajectory<f64>,
    vehicle: &Vehicle<f64>,
    tilt_pair: bool,
) -> Result<(), RunError> {
    let n = traj.n_inputs();
    let mids = traj.mid_inputs.as_ref();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(n, tilt_pair, mids.is_some()))
        .map_err(csv_error)?;
    for k in 0..traj.len() {
        let t = traj.times[k];
        let s = flat.eval(t);
        let a = traj.angles[k];
        let wv = traj.rates[k];
        let u = &traj.inputs[k];
        let mut row: Vec<String> = [
            t, s.d[0][0], s.d[0][1], s.d[0][2], s.d[0][3], a.roll, a.pitch, a.yaw, wv[0], wv[1],
            wv[2],
        ]
        .iter()
        .map(|&v| fmt_num(v))
        .collect();
        row.extend(u.iter().map(|&v| fmt_num(v)));
        row.extend(vehicle.normalized_input(u).iter().map(|&v| fmt_num(v)));
        if tilt_pair {
            let (t_alpha, alpha) = merge_tilt_thrust(u[2], u[3]);
            row.push(fmt_num(alpha));
            row.push(fmt_num(t_alpha));
        }
        if let Some(m) = mids {
            match m.get(k) {
                Some(um) => row.extend(um.iter().map(|&v| fmt_num(v))),
                None => row.extend((0..n).map(|_| String::new())),
            }
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)
}

/// Reads a history written by [`write`]. The producing pipeline is not
/// recorded: files with midpoint thrusts are tagged Hermite-Simpson, the
/// rest as replay input.
pub fn read<R: Read>(input: R) -> Result<StateTrajectory<f64>, RunError> {
    let mut r = csv::Reader::from_reader(input);
    let head = r.headers().map_err(csv_error)?.clone();
    let col = |name: &str| {
        head.iter()
            .position(|h| h == name)
            .ok_or_else(|| RunError::Io(format!("missing column {name:?}")))
    };
    let fixed = ["t", "phi", "theta", "psi", "wx", "wy", "wz"]
        .iter()
        .map(|c| col(c))
        .collect::<Result<Vec<_>, _>>()?;
    let n = head.iter().filter(|h| h.starts_with("u_")).count();
    if n == 0 {
        return Err(RunError::Io("no thrust columns".into()));
    }
    let u_cols = (1..=n)
        .map(|i| col(&format!("u_{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let m_cols = if head.iter().any(|h| h.starts_with("um_")) {
        Some(
            (1..=n)
                .map(|i| col(&format!("um_{i}")))
                .collect::<Result<Vec<_>, _>>()?,
        )
    } else {
        None
    };

    let mut traj = StateTrajectory {
        source: if m_cols.is_some() {
            Source::Collocation(Scheme::HermiteSimpson)
        } else {
            Source::Replay
        },
        times: Vec::new(),
        angles: Vec::new(),
        rates: Vec::new(),
        inputs: Vec::new(),
        mid_inputs: m_cols.as_ref().map(|_| Vec::new()),
    };
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let num = |c: usize| -> Result<f64, RunError> {
            let s = rec.get(c).unwrap_or("");
            s.trim().parse::<f64>().map_err(|_| {
                RunError::Io(format!(
                    "row {}: column {:?}: bad number {s:?}",
                    line + 1,
                    &head[c]
                ))
            })
        };
        let v = fixed
            .iter()
            .map(|&c| num(c))
            .collect::<Result<Vec<_>, _>>()?;
        traj.times.push(v[0]);
        traj.angles.push(EulerAngles::new(v[1], v[2], v[3]));
        traj.rates.push(Vector3::new(v[4], v[5], v[6]));
        let u = u_cols
            .iter()
            .map(|&c| num(c))
            .collect::<Result<Vec<_>, _>>()?;
        traj.inputs.push(DVector::from_vec(u));
        if let (Some(cols), Some(mids)) = (&m_cols, traj.mid_inputs.as_mut()) {
            if cols
                .iter()
                .all(|&c| rec.get(c).is_some_and(|s| s.trim().is_empty()))
            {
                continue;
            }
            let um = cols
                .iter()
                .map(|&c| num(c))
                .collect::<Result<Vec<_>, _>>()?;
            mids.push(DVector::from_vec(um));
        }
    }
    if traj.len() < 2 {
        return Err(RunError::Io("need at least two rows".into()));
    }
    if let Some(m) = &traj.mid_inputs {
        if m.len() != traj.len() - 1 {
            return Err(RunError::Io(format!(
                "{} midpoint rows for {} intervals",
                m.len(),
                traj.len() - 1
            )));
        }
    }
    Ok(traj)
}

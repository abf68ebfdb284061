//! Run configuration: a TOML file with `vehicle`, `trajectory`, `solver` and
//! `output` sections, overridden field by field by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use flatgen_core::trajectory::Scheme;
use flatgen_core::vehicle::{Preset, Propeller, Vehicle, STANDARD_GRAVITY};
use nalgebra::{Matrix3, Vector3, Vector4};
use serde::Deserialize;

use crate::run::RunError;

/// Generation pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Method {
    CollocationSquare,
    CollocationMinEffort,
    CollocationExtraOutputs,
    AnalyticRank3,
    AnalyticRank2,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::CollocationSquare => "collocation_square",
            Method::CollocationMinEffort => "collocation_min_effort",
            Method::CollocationExtraOutputs => "collocation_extra_outputs",
            Method::AnalyticRank3 => "analytic_rank3",
            Method::AnalyticRank2 => "analytic_rank2",
        }
    }

    pub fn is_collocation(self) -> bool {
        matches!(
            self,
            Method::CollocationSquare
                | Method::CollocationMinEffort
                | Method::CollocationExtraOutputs
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Flags shared by `generate` and `verify`. Every flag overrides the
/// matching config-file entry.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Preset vehicle name (see `flatgen presets`)
    #[arg(long)]
    pub vehicle: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Number of collocation intervals or integration steps
    #[arg(long)]
    pub knots: Option<usize>,
    /// euler, trapezoidal or hermite_simpson
    #[arg(long)]
    pub scheme: Option<String>,
    /// Final time, s
    #[arg(long, allow_hyphen_values = true)]
    pub tf: Option<f64>,
    /// Start x,y,z,psi (m, m, m, rad)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub start: Option<Vec<f64>>,
    /// End x,y,z,psi (m, m, m, rad)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub end: Option<Vec<f64>>,
    /// Body-x component of the unit thrust direction
    #[arg(long, allow_hyphen_values = true)]
    pub sigma5: Option<f64>,
    /// Body-y component of the unit thrust direction
    #[arg(long, allow_hyphen_values = true)]
    pub sigma6: Option<f64>,
    /// Output CSV path (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// RK4 steps of the open-loop replay
    #[arg(long)]
    pub steps: Option<usize>,
    /// Largest accepted replay RMS position error (m) and yaw error (rad)
    #[arg(long)]
    pub bound: Option<f64>,
    /// Reserved; every solver is deterministic
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    vehicle: Option<VehicleSection>,
    trajectory: Option<TrajectorySection>,
    solver: Option<SolverSection>,
    output: Option<OutputSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VehicleSection {
    preset: Option<String>,
    /// Length unit of the propeller arms: "m" (default) or "cm".
    units: Option<String>,
    mass: Option<f64>,
    /// Principal moments, kg m^2.
    inertia: Option<[f64; 3]>,
    gravity: Option<f64>,
    /// The last two propellers are the split thrust of one tilting rotor.
    tilt_pair: Option<bool>,
    propeller: Option<Vec<PropellerSection>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PropellerSection {
    arm: [f64; 3],
    axis: [f64; 3],
    /// Signed drag-to-thrust ratio, always in m.
    drag: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectorySection {
    start: Option<[f64; 4]>,
    end: Option<[f64; 4]>,
    tf: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    method: Option<Method>,
    knots: Option<usize>,
    scheme: Option<String>,
    sigma5: Option<f64>,
    sigma6: Option<f64>,
    steps: Option<usize>,
    replay_bound: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    path: Option<PathBuf>,
}

/// Fully resolved run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub vehicle_name: String,
    pub vehicle: Vehicle<f64>,
    /// Whether the last two inputs are the split thrust of a tilting rotor.
    pub tilt_pair: bool,
    pub start: Vector4<f64>,
    pub end: Vector4<f64>,
    pub tf: f64,
    pub method: Method,
    pub knots: usize,
    pub scheme: Scheme,
    pub sigma5: f64,
    pub sigma6: f64,
    pub steps: usize,
    pub replay_bound: f64,
    pub out: Option<PathBuf>,
}

fn config_error(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

fn vec4(name: &str, v: &[f64]) -> Result<Vector4<f64>, RunError> {
    if v.len() != 4 {
        return Err(config_error(format!(
            "{name} needs 4 values x,y,z,psi, got {}",
            v.len()
        )));
    }
    Ok(Vector4::new(v[0], v[1], v[2], v[3]))
}

fn build_vehicle(section: &VehicleSection) -> Result<(String, Vehicle<f64>, bool), RunError> {
    if let Some(name) = &section.preset {
        if section.propeller.is_some() {
            return Err(config_error(
                "vehicle: give either a preset or propellers, not both",
            ));
        }
        let preset = Preset::from_name(name)
            .ok_or_else(|| config_error(format!("unknown vehicle preset {name:?}")))?;
        return Ok((name.clone(), preset.build(), preset == Preset::Tricopter));
    }
    let props = section
        .propeller
        .as_ref()
        .ok_or_else(|| config_error("vehicle: needs a preset or a propeller list"))?;
    let per_meter = match section.units.as_deref().unwrap_or("m") {
        "m" => 1.0,
        "cm" => 100.0,
        other => return Err(config_error(format!("unknown length unit {other:?}"))),
    };
    let props = props
        .iter()
        .map(|p| {
            let arm = Vector3::from(p.arm) / per_meter;
            Propeller::new(arm, Vector3::from(p.axis), p.drag)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| config_error(e.to_string()))?;
    let tilt_pair = section.tilt_pair.unwrap_or(false);
    if tilt_pair && props.len() != 4 {
        return Err(config_error("tilt_pair needs exactly four propellers"));
    }
    let inertia = match section.inertia {
        Some(d) => Matrix3::from_diagonal(&Vector3::from(d)),
        None => flatgen_core::vehicle::default_inertia(),
    };
    let vehicle = Vehicle::new(
        section.mass.unwrap_or(1.0),
        inertia,
        props,
        section.gravity.unwrap_or(STANDARD_GRAVITY),
    )
    .map_err(|e| config_error(e.to_string()))?;
    Ok(("custom".into(), vehicle, tilt_pair))
}

fn read_file(path: &Path) -> Result<FileConfig, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Parses a TOML run configuration without flag overrides.
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let file: FileConfig = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        Self::merge(file, &Overrides::default())
    }

    /// Loads the config file named by `--config`, if any, and applies the
    /// remaining flags on top.
    pub fn resolve(flags: &Overrides) -> Result<Self, RunError> {
        let file = match &flags.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        Self::merge(file, flags)
    }

    fn merge(file: FileConfig, flags: &Overrides) -> Result<Self, RunError> {
        let mut vsec = file.vehicle.unwrap_or_default();
        if let Some(name) = &flags.vehicle {
            vsec = VehicleSection {
                preset: Some(name.clone()),
                ..Default::default()
            };
        }
        if vsec.preset.is_none() && vsec.propeller.is_none() {
            vsec.preset = Some(Preset::QuadTilted.name().into());
        }
        let (vehicle_name, vehicle, tilt_pair) = build_vehicle(&vsec)?;

        let tsec = file.trajectory.unwrap_or_default();
        let start = match &flags.start {
            Some(v) => vec4("--start", v)?,
            None => Vector4::from(tsec.start.unwrap_or([0.0; 4])),
        };
        let end = match &flags.end {
            Some(v) => vec4("--end", v)?,
            None => Vector4::from(tsec.end.unwrap_or([-1.0, 1.0, 1.5, 0.2])),
        };
        let tf = flags.tf.or(tsec.tf).unwrap_or(4.0);

        let ssec = file.solver.unwrap_or_default();
        let scheme_name = flags
            .scheme
            .clone()
            .or(ssec.scheme)
            .unwrap_or_else(|| Scheme::HermiteSimpson.name().into());
        let scheme = Scheme::from_name(&scheme_name)
            .ok_or_else(|| config_error(format!("unknown scheme {scheme_name:?}")))?;
        let out = flags.out.clone().or(file.output.and_then(|o| o.path));
        let cfg = Self {
            vehicle_name,
            vehicle,
            tilt_pair,
            start,
            end,
            tf,
            method: flags
                .method
                .or(ssec.method)
                .unwrap_or(Method::CollocationSquare),
            knots: flags.knots.or(ssec.knots).unwrap_or(100),
            scheme,
            sigma5: flags.sigma5.or(ssec.sigma5).unwrap_or(0.07),
            sigma6: flags.sigma6.or(ssec.sigma6).unwrap_or(0.06),
            steps: flags.steps.or(ssec.steps).unwrap_or(2000),
            replay_bound: flags.bound.or(ssec.replay_bound).unwrap_or(1e-2),
            out,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), RunError> {
        let finite = self
            .start
            .iter()
            .chain(self.end.iter())
            .all(|v| v.is_finite())
            && self.sigma5.is_finite()
            && self.sigma6.is_finite();
        if !finite {
            return Err(config_error(
                "non-finite trajectory or thrust-direction value",
            ));
        }
        if !(self.tf > 0.0 && self.tf.is_finite()) {
            return Err(config_error(format!(
                "tf must be positive, got {}",
                self.tf
            )));
        }
        if self.knots < 3 {
            return Err(config_error(format!(
                "knots must be at least 3, got {}",
                self.knots
            )));
        }
        if self.steps == 0 {
            return Err(config_error("steps must be positive"));
        }
        if self.replay_bound.is_nan() || self.replay_bound <= 0.0 {
            return Err(config_error("replay bound must be positive"));
        }
        Ok(())
    }

    /// Rejects method and vehicle pairings that cannot work, before any
    /// solve.
    pub fn check_method(&self) -> Result<(), RunError> {
        let n = self.vehicle.n();
        let rank = self.vehicle.rank_a();
        let bad = |why: String| Err(RunError::Infeasible(why));
        match self.method {
            Method::CollocationSquare if n != 4 => bad(format!(
                "{} leaves {} thrust directions free on a {n}-rotor vehicle; use \
                 collocation_extra_outputs or collocation_min_effort",
                self.method,
                n - 4
            )),
            Method::CollocationExtraOutputs if n != 6 => bad(format!(
                "two thrust-direction outputs square the problem only for six rotors, got {n}"
            )),
            Method::AnalyticRank3 if n != 4 || rank != 3 => bad(format!(
                "{} needs four rotors with rank(A) = 3, got {n} rotors with rank {rank}",
                self.method
            )),
            Method::AnalyticRank2 if n != 4 || rank != 2 => bad(format!(
                "{} needs four inputs with rank(A) = 2, got {n} inputs with rank {rank}",
                self.method
            )),
            Method::CollocationMinEffort if n < 4 => bad(format!(
                "{} needs at least four inputs, got {n}",
                self.method
            )),
            _ => Ok(()),
        }
    }
}

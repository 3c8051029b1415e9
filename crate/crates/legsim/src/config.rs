//! Experiment configuration files.
//!
//! TOML with sections `[robot.nominal]`, `[robot.true]`, `[gains]`,
//! `[trajectory]`, `[rls]` and `[sim]`. Every key has a default, so the
//! empty file is a valid configuration (exact model, adaptation on).
//! Parsing is strict: unknown keys are errors, as are out-of-range values,
//! each diagnostic naming the offending key.
//!
//! ```toml
//! [robot.nominal]
//! len_upper = 0.4        # m
//! com_upper = 0.2        # m, CoM distance from the hip
//! # ... len_lower, com_lower, mass_upper, mass_lower, gravity,
//! #     rotor_inertia
//!
//! [robot.true]           # plant; omitted keys inherit the nominal values
//! com_upper = 0.24       # only the CoM distances may differ
//!
//! [gains]
//! kp = 100.0             # scalar or per-joint [kp0, kp1, kp2, kp3]
//! kd = 20.0
//!
//! [trajectory]
//! q_start = [0.0, 0.0, 0.0, 0.0]
//! q_end = [0.4, 0.5, 0.3, 0.6]
//! via = [[0.5, -0.4, 0.3, 0.9]]   # optional intermediate waypoints
//! duration = 2.0         # s
//! interp = "quintic"     # or "linear"
//!
//! [rls]
//! initial_theta = [1.0, 1.0, 1.0, 1.0, 1.0]
//! initial_cov_scale = 1e3
//! forgetting = 1.0
//!
//! [sim]
//! control_period = 0.01  # s (100 Hz)
//! plant_substep = 1e-4   # s, must divide control_period
//! accel_source = "plant_exact"   # or "finite_difference"
//! mode = "standard"      # or "paper_literal"
//! adaptation = true
//! noise_std = 0.0        # rad, Gaussian on q and qd
//! seed = 0
//! ```

use serde::Deserialize;
use thiserror::Error;

use crate::control::{ControlLawMode, Gains, InterpKind};
use crate::estimator::RlsConfig;
use crate::kinematics::{JointVec, RobotParams};
use crate::regressor::ThetaVec;
use crate::sim::{AccelSource, ExperimentConfig, SimError};

#[derive(Debug, Error)]
pub enum ConfigError {
    /// Syntax error or unknown key; the message carries the line/column.
    #[error("config parse error: {0}")]
    Syntax(#[from] toml::de::Error),
    /// A structurally valid value that violates a range or consistency rule.
    #[error("config error: {key}: {reason}")]
    Field { key: String, reason: String },
}

impl From<SimError> for ConfigError {
    fn from(err: SimError) -> Self {
        match err {
            SimError::InvalidConfig { key, reason } => ConfigError::Field { key, reason },
            other => ConfigError::Field {
                key: "config".into(),
                reason: other.to_string(),
            },
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSchema {
    robot: Option<RobotSection>,
    gains: Option<GainsSection>,
    trajectory: Option<TrajectorySection>,
    rls: Option<RlsSection>,
    sim: Option<SimSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotSection {
    nominal: Option<ParamsSection>,
    #[serde(rename = "true")]
    plant: Option<ParamsSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsSection {
    len_upper: Option<f64>,
    len_lower: Option<f64>,
    com_upper: Option<f64>,
    com_lower: Option<f64>,
    mass_upper: Option<f64>,
    mass_lower: Option<f64>,
    gravity: Option<f64>,
    rotor_inertia: Option<f64>,
}

impl ParamsSection {
    fn resolve(&self, base: &RobotParams) -> RobotParams {
        RobotParams {
            len_upper: self.len_upper.unwrap_or(base.len_upper),
            len_lower: self.len_lower.unwrap_or(base.len_lower),
            com_upper: self.com_upper.unwrap_or(base.com_upper),
            com_lower: self.com_lower.unwrap_or(base.com_lower),
            mass_upper: self.mass_upper.unwrap_or(base.mass_upper),
            mass_lower: self.mass_lower.unwrap_or(base.mass_lower),
            gravity: self.gravity.unwrap_or(base.gravity),
            rotor_inertia: self.rotor_inertia.unwrap_or(base.rotor_inertia),
        }
    }
}

/// A gain can be one scalar for all joints or a per-joint array.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GainSpec {
    Uniform(f64),
    PerJoint([f64; 4]),
}

impl GainSpec {
    fn resolve(&self) -> JointVec {
        match self {
            GainSpec::Uniform(v) => JointVec::repeat(*v),
            GainSpec::PerJoint(v) => JointVec::from_column_slice(v),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainsSection {
    kp: Option<GainSpec>,
    kd: Option<GainSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectorySection {
    q_start: Option<[f64; 4]>,
    q_end: Option<[f64; 4]>,
    via: Option<Vec<[f64; 4]>>,
    duration: Option<f64>,
    interp: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RlsSection {
    initial_theta: Option<[f64; 5]>,
    initial_cov_scale: Option<f64>,
    forgetting: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    control_period: Option<f64>,
    plant_substep: Option<f64>,
    accel_source: Option<String>,
    mode: Option<String>,
    adaptation: Option<bool>,
    noise_std: Option<f64>,
    seed: Option<u64>,
}

fn field_err(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        key: key.into(),
        reason: reason.into(),
    }
}

/// Parses a configuration file, filling defaults for every omitted key and
/// validating the result. The empty string yields the default experiment.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let schema: FileSchema = toml::from_str(text)?;
    let defaults = ExperimentConfig::default();

    let robot = schema.robot.unwrap_or_default();
    let nominal_params = robot
        .nominal
        .unwrap_or_default()
        .resolve(&defaults.nominal_params);
    // the plant inherits the nominal values key by key
    let true_params = robot.plant.unwrap_or_default().resolve(&nominal_params);

    let gains_section = schema.gains.unwrap_or_default();
    let gains = Gains {
        kp: gains_section
            .kp
            .map(|g| g.resolve())
            .unwrap_or(defaults.gains.kp),
        kd: gains_section
            .kd
            .map(|g| g.resolve())
            .unwrap_or(defaults.gains.kd),
    };

    let traj = schema.trajectory.unwrap_or_default();
    let interp = match traj.interp.as_deref() {
        None => defaults.interp,
        Some("quintic") => InterpKind::Quintic,
        Some("linear") => InterpKind::Linear,
        Some(other) => {
            return Err(field_err(
                "trajectory.interp",
                format!("expected \"quintic\" or \"linear\", got \"{other}\""),
            ))
        }
    };

    let rls_section = schema.rls.unwrap_or_default();
    let rls = RlsConfig {
        initial_theta: rls_section
            .initial_theta
            .map(|t| ThetaVec::from_column_slice(&t))
            .unwrap_or(defaults.rls.initial_theta),
        initial_cov_scale: rls_section
            .initial_cov_scale
            .unwrap_or(defaults.rls.initial_cov_scale),
        forgetting: rls_section.forgetting.unwrap_or(defaults.rls.forgetting),
    };

    let sim = schema.sim.unwrap_or_default();
    let accel_source = match sim.accel_source.as_deref() {
        None => defaults.accel_source,
        Some("plant_exact") => AccelSource::PlantExact,
        Some("finite_difference") => AccelSource::FiniteDifference,
        Some(other) => {
            return Err(field_err(
                "sim.accel_source",
                format!("expected \"plant_exact\" or \"finite_difference\", got \"{other}\""),
            ))
        }
    };
    let mode = match sim.mode.as_deref() {
        None => defaults.mode,
        Some("standard") => ControlLawMode::Standard,
        Some("paper_literal") | Some("paper-literal") => ControlLawMode::PaperLiteral,
        Some(other) => {
            return Err(field_err(
                "sim.mode",
                format!("expected \"standard\" or \"paper_literal\", got \"{other}\""),
            ))
        }
    };

    let config = ExperimentConfig {
        nominal_params,
        true_params,
        gains,
        mode,
        rls,
        adaptation_on: sim.adaptation.unwrap_or(defaults.adaptation_on),
        q_start: traj
            .q_start
            .map(|v| JointVec::from_column_slice(&v))
            .unwrap_or(defaults.q_start),
        q_end: traj
            .q_end
            .map(|v| JointVec::from_column_slice(&v))
            .unwrap_or(defaults.q_end),
        via: traj
            .via
            .map(|ws| ws.iter().map(|w| JointVec::from_column_slice(w)).collect())
            .unwrap_or_default(),
        interp,
        duration: traj.duration.unwrap_or(defaults.duration),
        control_period: sim.control_period.unwrap_or(defaults.control_period),
        plant_substep: sim.plant_substep.unwrap_or(defaults.plant_substep),
        accel_source,
        noise_std: sim.noise_std.unwrap_or(defaults.noise_std),
        seed: sim.seed.unwrap_or(defaults.seed),
    };
    config.validate()?;
    Ok(config)
}

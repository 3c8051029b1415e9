//! Adaptive computed-torque control of a 4-DoF anthropomorphic leg.
//!
//! The leg has a z-y-x spherical hip and a y-axis knee, modelled with
//! point-mass links. The crate provides:
//!
//! * closed-form forward kinematics and position Jacobians ([`kinematics`]),
//! * Lagrangian dynamics with Christoffel-symbol Coriolis terms and an RK4
//!   ground-truth plant ([`dynamics`], [`sim`]),
//! * a linear parametrization of the inverse dynamics in the centre-of-mass
//!   distances ([`regressor`]),
//! * recursive least squares over the five scale parameters ([`estimator`]),
//! * the computed-torque controller with in-the-loop adaptation
//!   ([`control`]),
//! * a runtime invariant-check suite ([`invariants`]) and a CLI front end
//!   ([`cli`], [`config`], [`csvlog`]).

pub mod cli;
pub mod config;
pub mod control;
pub mod csvlog;
pub mod dynamics;
pub mod estimator;
pub mod invariants;
pub mod kinematics;
pub mod regressor;
pub mod sim;

pub use config::{parse_config, ConfigError};
pub use control::{
    computed_torque, control_tick, quintic_trajectory, ControlLawMode, Controller,
    ControllerState, Gains, InterpKind, JointTrajectory, TrajectoryPoint,
};
pub use csvlog::{read_log, write_log, CsvError, CsvRow, CSV_HEADER};
pub use dynamics::{
    coriolis_matrix, dyn_terms, forward_dynamics, gravity_vector, inverse_dynamics, mass_matrix,
    potential_energy, total_energy, DynTerms, DynamicsError, Torque,
};
pub use estimator::{rls_batch_oracle, rls_init, rls_update, RlsConfig, RlsError, RlsState};
pub use invariants::{run_invariant_suite, BoundKind, CheckResult, SuiteReport};
pub use kinematics::{
    dh_table, fk_com_lower, fk_com_upper, fk_tip, jacobian_com, rot_axis, Axis, Body, DhRow,
    Jacobian, JointState, JointVec, RobotParams,
};
pub use regressor::{
    regressor_raw, regressor_scaled, regressor_torque, theta_nominal, true_theta_scales,
    RegressorMatrix, RegressorError, ThetaVec,
};
pub use sim::{rk4_step, run_experiment, AccelSource, ExperimentConfig, LogRecord, SimError};

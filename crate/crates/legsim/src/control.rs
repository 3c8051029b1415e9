//! Joint-space reference trajectories and the adaptive computed-torque law.
//!
//! The controller cascades the plant with its model inverse: the scaled
//! regressor evaluated with the current parameter estimate plays the role of
//! the inverse dynamics, and a PD correction absorbs model error. Two
//! variants of where the correction enters are provided, selectable per
//! experiment (see [`ControlLawMode`]).

use crate::estimator::{rls_update, RlsState};
use crate::kinematics::{JointState, JointVec, RobotParams};
use crate::regressor::{regressor_scaled, ThetaVec};
use crate::dynamics::Torque;

/// Diagonal PD gains, stored as the diagonals of K_p (1/s²) and K_d (1/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gains {
    pub kp: JointVec,
    pub kd: JointVec,
}

impl Gains {
    /// Same gain on every joint.
    pub fn uniform(kp: f64, kd: f64) -> Self {
        Gains {
            kp: JointVec::repeat(kp),
            kd: JointVec::repeat(kd),
        }
    }
}

impl Default for Gains {
    /// ω ≈ 10 rad/s with near-critical damping for the default leg.
    fn default() -> Self {
        Gains::uniform(100.0, 20.0)
    }
}

/// Where the PD correction enters the regressor arguments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ControlLawMode {
    /// τ = Φ′(q, q̇, q̈_ref + K_p e + K_d ė)·θ̂ — the correction acts in the
    /// acceleration slot (textbook computed torque).
    #[default]
    Standard,
    /// τ = Φ′(q + K_p e, q̇ + K_d ė, q̈_ref)·θ̂ — gains weight the error
    /// directly into the position and velocity arguments.
    PaperLiteral,
}

/// One sample of the reference trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub q_ref: JointVec,
    pub qd_ref: JointVec,
    pub qdd_ref: JointVec,
}

/// Interpolation scheme between joint-space waypoints.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InterpKind {
    /// Quintic polynomial with zero velocity and acceleration at both ends.
    #[default]
    Quintic,
    /// Straight-line position; piecewise-constant velocity, zero reference
    /// acceleration. Kept for experiments on interpolation fidelity.
    Linear,
}

/// Minimum-boundary-condition quintic between two joint configurations.
/// Outside [0, duration] the nearer endpoint is held at rest.
pub fn quintic_trajectory(
    q_start: &JointVec,
    q_end: &JointVec,
    duration: f64,
    t: f64,
) -> TrajectoryPoint {
    assert!(duration > 0.0, "trajectory duration must be positive");
    if t <= 0.0 {
        return TrajectoryPoint {
            q_ref: *q_start,
            qd_ref: JointVec::zeros(),
            qdd_ref: JointVec::zeros(),
        };
    }
    if t >= duration {
        return TrajectoryPoint {
            q_ref: *q_end,
            qd_ref: JointVec::zeros(),
            qdd_ref: JointVec::zeros(),
        };
    }
    let u = t / duration;
    let s = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
    let sd = 30.0 * u * u * (1.0 + u * (-2.0 + u)) / duration;
    let sdd = 60.0 * u * (1.0 + u * (-3.0 + 2.0 * u)) / (duration * duration);
    let delta = q_end - q_start;
    TrajectoryPoint {
        q_ref: q_start + s * delta,
        qd_ref: sd * delta,
        qdd_ref: sdd * delta,
    }
}

fn linear_trajectory(
    q_start: &JointVec,
    q_end: &JointVec,
    duration: f64,
    t: f64,
) -> TrajectoryPoint {
    let u = (t / duration).clamp(0.0, 1.0);
    let delta = q_end - q_start;
    let inside = t > 0.0 && t < duration;
    TrajectoryPoint {
        q_ref: q_start + u * delta,
        qd_ref: if inside { delta / duration } else { JointVec::zeros() },
        qdd_ref: JointVec::zeros(),
    }
}

/// Piecewise reference through a sequence of joint-space waypoints, each
/// segment taking an equal share of the total duration. Single-segment
/// trajectories are the two-waypoint case.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTrajectory {
    waypoints: Vec<JointVec>,
    segment_duration: f64,
    kind: InterpKind,
}

impl JointTrajectory {
    pub fn through_waypoints(waypoints: Vec<JointVec>, duration: f64, kind: InterpKind) -> Self {
        assert!(waypoints.len() >= 2, "need at least start and end waypoints");
        assert!(duration > 0.0, "trajectory duration must be positive");
        let segments = (waypoints.len() - 1) as f64;
        JointTrajectory {
            waypoints,
            segment_duration: duration / segments,
            kind,
        }
    }

    pub fn point_to_point(q_start: JointVec, q_end: JointVec, duration: f64, kind: InterpKind) -> Self {
        Self::through_waypoints(vec![q_start, q_end], duration, kind)
    }

    pub fn duration(&self) -> f64 {
        self.segment_duration * (self.waypoints.len() - 1) as f64
    }

    /// Reference state at time `t`; clamps to the end states outside the
    /// trajectory's time span.
    pub fn sample(&self, t: f64) -> TrajectoryPoint {
        let n_seg = self.waypoints.len() - 1;
        let idx = if t <= 0.0 {
            0
        } else {
            ((t / self.segment_duration).floor() as usize).min(n_seg - 1)
        };
        let local_t = t - idx as f64 * self.segment_duration;
        let (a, b) = (&self.waypoints[idx], &self.waypoints[idx + 1]);
        match self.kind {
            InterpKind::Quintic => quintic_trajectory(a, b, self.segment_duration, local_t),
            InterpKind::Linear => linear_trajectory(a, b, self.segment_duration, local_t),
        }
    }
}

/// Adaptive computed-torque law: model inverse from the scaled regressor at
/// the current estimate plus PD correction, placed per `mode`.
pub fn computed_torque(
    meas: &JointState,
    reference: &TrajectoryPoint,
    theta_hat: &ThetaVec,
    params: &RobotParams,
    gains: &Gains,
    mode: ControlLawMode,
) -> Torque {
    let e = reference.q_ref - meas.q;
    let ed = reference.qd_ref - meas.qd;
    match mode {
        ControlLawMode::Standard => {
            let acc = reference.qdd_ref + gains.kp.component_mul(&e) + gains.kd.component_mul(&ed);
            regressor_scaled(&meas.q, &meas.qd, &acc, params) * theta_hat
        }
        ControlLawMode::PaperLiteral => {
            let q_arg = meas.q + gains.kp.component_mul(&e);
            let qd_arg = meas.qd + gains.kd.component_mul(&ed);
            regressor_scaled(&q_arg, &qd_arg, &reference.qdd_ref, params) * theta_hat
        }
    }
}

/// Static description of one control loop.
#[derive(Clone, Debug)]
pub struct Controller {
    pub trajectory: JointTrajectory,
    pub gains: Gains,
    pub nominal: RobotParams,
    pub mode: ControlLawMode,
}

/// Evolving part of the control loop: the estimator and the torque applied
/// over the previous hold interval.
#[derive(Clone, Debug)]
pub struct ControllerState {
    pub rls: RlsState,
    pub prev_tau: Option<Torque>,
    /// Set when an estimator update failed; the estimate is held from then
    /// on and the condition is surfaced in the log.
    pub frozen: bool,
}

impl ControllerState {
    pub fn new(rls: RlsState) -> Self {
        ControllerState {
            rls,
            prev_tau: None,
            frozen: false,
        }
    }
}

/// One controller tick at time `clock` (a multiple of the control period).
///
/// Samples the reference, computes the torque from the current estimate,
/// then (when adapting) feeds the estimator one sample pairing the observed
/// state with the torque that produced it — the one applied over the
/// previous interval. The returned torque is held constant until the next
/// tick.
pub fn control_tick(
    clock: f64,
    controller: &Controller,
    state: &ControllerState,
    observation: &JointState,
    adaptation_on: bool,
) -> (Torque, ControllerState) {
    let reference = controller.trajectory.sample(clock);
    let tau = computed_torque(
        observation,
        &reference,
        &state.rls.theta_hat,
        &controller.nominal,
        &controller.gains,
        controller.mode,
    );

    let mut next = state.clone();
    if adaptation_on && !next.frozen {
        if let Some(prev_tau) = state.prev_tau {
            let phi = regressor_scaled(
                &observation.q,
                &observation.qd,
                &observation.qdd,
                &controller.nominal,
            );
            match rls_update(&next.rls, &phi, &prev_tau) {
                Ok(updated) => next.rls = updated,
                Err(_) => next.frozen = true,
            }
        }
    }
    next.prev_tau = Some(tau);
    (tau, next)
}

//! Linear parametrization of the inverse dynamics in the centre-of-mass
//! distances.
//!
//! The torque is nonlinear in `com_upper` and `com_lower`, but both CoM
//! positions factor out of the kinematics: with the unit directions
//! `α(q) = R_hip(q)·e_z` (upper-link axis) and `β(q) = R_hip(q)·Ry(q3)·e_z`
//! (lower-link axis), the centres of mass are
//!
//! ```text
//! r_upper = com_upper · α(q)
//! r_lower = len_upper · α(q) + com_lower · β(q)
//! ```
//!
//! so every term of M(q)q̈ + C(q,q̇)q̇ + G(q) carries exactly one factor from
//! {com_upper², com_upper, com_lower², com_lower, 1}. Collecting the
//! coefficients yields a 4×5 matrix Φ with
//!
//! ```text
//! inverse_dynamics = Φ(q,q̇,q̈) · θ′,   θ′ = (cu², cu, cl², cl, 1)
//! ```
//!
//! and the scaled regressor Φ′ = Φ·diag(θ′) satisfies Φ′·θ = τ with a
//! dimensionless scale vector θ that equals all-ones when the model is
//! exact. Columns depend on masses, `len_upper`, gravity and the rotor
//! regularizer only, never on the CoM values being identified.

use nalgebra::{SMatrix, SVector, Vector3};
use thiserror::Error;

use crate::dynamics::{christoffel_coriolis, Torque};
use crate::kinematics::{chain_kinematics, JointVec, PointKinematics, RobotParams};

/// 4×5 regressor, one row per joint, one column per scale parameter.
pub type RegressorMatrix = SMatrix<f64, 4, 5>;

/// 5-vector of scale parameters (dimensionless) or nominal parameters
/// (mixed units m², m, m², m, 1).
pub type ThetaVec = SVector<f64, 5>;

#[derive(Debug, Error, PartialEq)]
pub enum RegressorError {
    /// The scale parametrization covers CoM changes only; any other
    /// difference between two parameter sets is unrepresentable.
    #[error("parameter sets differ in `{field}`, which the CoM scale parametrization cannot express")]
    NonComMismatch { field: &'static str },
}

/// Nominal parameter vector θ′ = (com_upper², com_upper, com_lower²,
/// com_lower, 1).
pub fn theta_nominal(params: &RobotParams) -> ThetaVec {
    ThetaVec::new(
        params.com_upper * params.com_upper,
        params.com_upper,
        params.com_lower * params.com_lower,
        params.com_lower,
        1.0,
    )
}

/// Mass-matrix component JᵃᵀJᵇ + JᵇᵀJᵃ and its partials, from two chain
/// kinematics evaluations. With a == b this is 2JᵀJ, hence the 0.5 weights
/// at the call sites for the diagonal components.
struct QuadraticComponent {
    m: nalgebra::Matrix4<f64>,
    dm: [nalgebra::Matrix4<f64>; 4],
}

fn quadratic_component(a: &PointKinematics, b: &PointKinematics) -> QuadraticComponent {
    let m = a.jac.transpose() * b.jac + b.jac.transpose() * a.jac;
    let dm = std::array::from_fn(|l| {
        let ha = &a.jac_partials[l];
        let hb = &b.jac_partials[l];
        ha.transpose() * b.jac + a.jac.transpose() * hb + hb.transpose() * a.jac
            + b.jac.transpose() * ha
    });
    QuadraticComponent { m, dm }
}

impl QuadraticComponent {
    /// Inertial-plus-Coriolis force of this component: M q̈ + C(q, q̇) q̇.
    fn force(&self, qd: &JointVec, qdd: &JointVec) -> JointVec {
        self.m * qdd + christoffel_coriolis(&self.dm, qd) * qd
    }
}

/// Raw regressor Φ: `Φ(q,q̇,q̈)·θ′(params) = inverse_dynamics(q,q̇,q̈,params)`.
pub fn regressor_raw(
    q: &JointVec,
    qd: &JointVec,
    qdd: &JointVec,
    params: &RobotParams,
) -> RegressorMatrix {
    let e_z = Vector3::new(0.0, 0.0, 1.0);
    // unit-length upper-link and lower-link directions
    let axis = chain_kinematics(q, e_z, Vector3::zeros());
    let knee = chain_kinematics(q, Vector3::zeros(), e_z);

    let axis_sq = quadratic_component(&axis, &axis);
    let knee_sq = quadratic_component(&knee, &knee);
    let cross = quadratic_component(&axis, &knee);

    let mu = params.mass_upper;
    let ml = params.mass_lower;
    let lu = params.len_upper;
    let g = params.gravity;

    let axis_force = 0.5 * axis_sq.force(qd, qdd);
    let knee_force = 0.5 * knee_sq.force(qd, qdd);
    let cross_force = cross.force(qd, qdd);
    let axis_grav: JointVec = axis.jac.row(2).transpose();
    let knee_grav: JointVec = knee.jac.row(2).transpose();

    let col_cu2 = mu * axis_force;
    let col_cu = mu * g * axis_grav;
    let col_cl2 = ml * knee_force;
    let col_cl = ml * lu * cross_force + ml * g * knee_grav;
    let col_one = ml * lu * lu * axis_force + params.rotor_inertia * qdd + ml * g * lu * axis_grav;

    RegressorMatrix::from_columns(&[col_cu2, col_cu, col_cl2, col_cl, col_one])
}

/// Scaled regressor Φ′ = Φ·diag(θ′): `Φ′·1 = inverse_dynamics`, and for a
/// plant whose CoM values are scaled copies of the nominal ones,
/// `Φ′·true_theta_scales(..)` reproduces the plant torque exactly.
pub fn regressor_scaled(
    q: &JointVec,
    qd: &JointVec,
    qdd: &JointVec,
    params: &RobotParams,
) -> RegressorMatrix {
    let mut phi = regressor_raw(q, qd, qdd, params);
    let theta_prime = theta_nominal(params);
    for (mut col, scale) in phi.column_iter_mut().zip(theta_prime.iter()) {
        col *= *scale;
    }
    phi
}

/// Applied torque predicted by the scaled regressor for a scale estimate.
pub fn regressor_torque(
    q: &JointVec,
    qd: &JointVec,
    qdd: &JointVec,
    params: &RobotParams,
    theta: &ThetaVec,
) -> Torque {
    regressor_scaled(q, qd, qdd, params) * theta
}

/// Ground-truth scale vector mapping the nominal model onto a plant whose
/// CoM distances differ: ((cu*/cu)², cu*/cu, (cl*/cl)², cl*/cl, 1).
pub fn true_theta_scales(
    nominal: &RobotParams,
    actual: &RobotParams,
) -> Result<ThetaVec, RegressorError> {
    let same = [
        ("len_upper", nominal.len_upper, actual.len_upper),
        ("len_lower", nominal.len_lower, actual.len_lower),
        ("mass_upper", nominal.mass_upper, actual.mass_upper),
        ("mass_lower", nominal.mass_lower, actual.mass_lower),
        ("gravity", nominal.gravity, actual.gravity),
        ("rotor_inertia", nominal.rotor_inertia, actual.rotor_inertia),
    ];
    for (field, a, b) in same {
        if a != b {
            return Err(RegressorError::NonComMismatch { field });
        }
    }
    let su = actual.com_upper / nominal.com_upper;
    let sl = actual.com_lower / nominal.com_lower;
    Ok(ThetaVec::new(su * su, su, sl * sl, sl, 1.0))
}

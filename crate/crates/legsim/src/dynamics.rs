//! Point-mass Lagrangian dynamics of the leg.
//!
//! Each link is a point mass at its centre of mass, so the kinetic energy is
//! `K = ½ Σ m_b ‖J_b(q) q̇‖²` and the mass matrix is `M = Σ m_b J_bᵀ J_b`
//! plus the rotor-inertia regularizer. Coriolis terms come from Christoffel
//! symbols of the analytically differentiated mass matrix, which gives the
//! skew-symmetry property q̇ᵀ(Ṁ − 2C)q̇ = 0.

use nalgebra::{Cholesky, Matrix4};
use thiserror::Error;

use crate::kinematics::{point_kinematics, Body, Jacobian, JointVec, PointKinematics, RobotParams};

/// Generalized joint forces (N·m), same joint order as [`JointVec`].
pub type Torque = JointVec;

/// Mass matrix, Coriolis vector `C(q,q̇)·q̇` and gravity vector at one state.
#[derive(Clone, Debug, PartialEq)]
pub struct DynTerms {
    pub m_matrix: Matrix4<f64>,
    pub coriolis_vec: JointVec,
    pub gravity_vec: JointVec,
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    /// The mass matrix has no Cholesky factorization. Happens only with
    /// `rotor_inertia = 0` at configurations where both point masses sit on
    /// the z-axis.
    #[error("mass matrix is singular (rotor_inertia = 0 at a rank-deficient configuration)")]
    SingularMassMatrix,
}

fn body_kin(q: &JointVec, params: &RobotParams) -> (PointKinematics, PointKinematics) {
    (
        point_kinematics(Body::UpperCom, q, params),
        point_kinematics(Body::LowerCom, q, params),
    )
}

fn mass_from_jacobians(upper: &Jacobian, lower: &Jacobian, params: &RobotParams) -> Matrix4<f64> {
    params.mass_upper * upper.transpose() * upper
        + params.mass_lower * lower.transpose() * lower
        + params.rotor_inertia * Matrix4::identity()
}

/// Joint-space inertia matrix M(q), symmetric positive definite for
/// `rotor_inertia > 0`.
pub fn mass_matrix(q: &JointVec, params: &RobotParams) -> Matrix4<f64> {
    let (upper, lower) = body_kin(q, params);
    mass_from_jacobians(&upper.jac, &lower.jac, params)
}

/// M(q) together with its four partial derivatives ∂M/∂q_l.
pub(crate) fn mass_matrix_partials(
    q: &JointVec,
    params: &RobotParams,
) -> (Matrix4<f64>, [Matrix4<f64>; 4]) {
    let (upper, lower) = body_kin(q, params);
    let m = mass_from_jacobians(&upper.jac, &lower.jac, params);
    let dm = std::array::from_fn(|l| {
        let hu = &upper.jac_partials[l];
        let hl = &lower.jac_partials[l];
        params.mass_upper * (hu.transpose() * upper.jac + upper.jac.transpose() * hu)
            + params.mass_lower * (hl.transpose() * lower.jac + lower.jac.transpose() * hl)
    });
    (m, dm)
}

/// Coriolis matrix from Christoffel symbols of ∂M/∂q:
/// `C_kj = ½ Σ_i (∂M_kj/∂q_i + ∂M_ki/∂q_j − ∂M_ij/∂q_k) q̇_i`.
pub(crate) fn christoffel_coriolis(dm: &[Matrix4<f64>; 4], qd: &JointVec) -> Matrix4<f64> {
    let mut c = Matrix4::zeros();
    for k in 0..4 {
        for j in 0..4 {
            let mut sum = 0.0;
            for i in 0..4 {
                sum += (dm[i][(k, j)] + dm[j][(k, i)] - dm[k][(i, j)]) * qd[i];
            }
            c[(k, j)] = 0.5 * sum;
        }
    }
    c
}

/// Coriolis/centripetal matrix C(q, q̇); the force contribution is `C·q̇`.
pub fn coriolis_matrix(q: &JointVec, qd: &JointVec, params: &RobotParams) -> Matrix4<f64> {
    let (_, dm) = mass_matrix_partials(q, params);
    christoffel_coriolis(&dm, qd)
}

/// Gravity torque G(q) = ∂P/∂q. Since P = Σ m_b g z_b(q), each component is
/// the z-row of the corresponding Jacobian scaled by m_b g.
pub fn gravity_vector(q: &JointVec, params: &RobotParams) -> JointVec {
    let (upper, lower) = body_kin(q, params);
    let g = params.gravity;
    params.mass_upper * g * upper.jac.row(2).transpose()
        + params.mass_lower * g * lower.jac.row(2).transpose()
}

/// All dynamic terms at one state, sharing a single kinematics evaluation.
pub fn dyn_terms(q: &JointVec, qd: &JointVec, params: &RobotParams) -> DynTerms {
    let (upper, lower) = body_kin(q, params);
    let m = mass_from_jacobians(&upper.jac, &lower.jac, params);
    let dm: [Matrix4<f64>; 4] = std::array::from_fn(|l| {
        let hu = &upper.jac_partials[l];
        let hl = &lower.jac_partials[l];
        params.mass_upper * (hu.transpose() * upper.jac + upper.jac.transpose() * hu)
            + params.mass_lower * (hl.transpose() * lower.jac + lower.jac.transpose() * hl)
    });
    let c = christoffel_coriolis(&dm, qd);
    let g = params.mass_upper * params.gravity * upper.jac.row(2).transpose()
        + params.mass_lower * params.gravity * lower.jac.row(2).transpose();
    DynTerms {
        m_matrix: m,
        coriolis_vec: c * qd,
        gravity_vec: g,
    }
}

/// Inverse dynamics: τ = M(q)·q̈ + C(q,q̇)·q̇ + G(q).
pub fn inverse_dynamics(
    q: &JointVec,
    qd: &JointVec,
    qdd: &JointVec,
    params: &RobotParams,
) -> Torque {
    let terms = dyn_terms(q, qd, params);
    terms.m_matrix * qdd + terms.coriolis_vec + terms.gravity_vec
}

/// Forward dynamics: solves M(q)·q̈ = τ − C(q,q̇)·q̇ − G(q) by Cholesky.
pub fn forward_dynamics(
    q: &JointVec,
    qd: &JointVec,
    tau: &Torque,
    params: &RobotParams,
) -> Result<JointVec, DynamicsError> {
    let terms = dyn_terms(q, qd, params);
    let chol =
        Cholesky::new(terms.m_matrix).ok_or(DynamicsError::SingularMassMatrix)?;
    // an overflowing right-hand side yields a non-finite acceleration, which
    // callers detect as divergence; only a failed factorization is an error
    Ok(chol.solve(&(tau - terms.coriolis_vec - terms.gravity_vec)))
}

/// Potential energy P = Σ m_b g z_b(q), measured from the hip origin.
pub fn potential_energy(q: &JointVec, params: &RobotParams) -> f64 {
    let (upper, lower) = body_kin(q, params);
    params.gravity * (params.mass_upper * upper.pos[2] + params.mass_lower * lower.pos[2])
}

/// Total mechanical energy K + P with K = ½ q̇ᵀ M(q) q̇.
pub fn total_energy(q: &JointVec, qd: &JointVec, params: &RobotParams) -> f64 {
    let m = mass_matrix(q, params);
    0.5 * qd.dot(&(m * qd)) + potential_energy(q, params)
}

//! Forward kinematics of the 4-DoF leg.
//!
//! The chain is a z-y-x spherical hip (three coincident revolute joints)
//! followed by a single y-axis knee. Joint order everywhere is
//! `(q_z_hip, q_y_hip, q_x_hip, q_y_knee)`. Any point carried by the chain
//! has position
//!
//! ```text
//! r(q) = Rz(q0) · Ry(-q1) · Rx(q2) · (offset + Ry(q3) · arm)
//! ```
//!
//! with `offset` fixed in the upper-link frame and `arm` fixed in the
//! lower-link frame. The upper-link centre of mass uses
//! `offset = (0, 0, com_upper)`, `arm = 0`; the lower-link centre of mass
//! uses `offset = (0, 0, len_upper)`, `arm = (0, 0, com_lower)`; the tip
//! replaces `com_lower` by `len_lower`.

use nalgebra::{Matrix3, SMatrix, Vector3, Vector4};

/// Joint-space vector (positions, velocities, accelerations, torques all
/// share this shape).
pub type JointVec = Vector4<f64>;

/// Position Jacobian of a point on the chain, `∂r/∂q` (3×4).
pub type Jacobian = SMatrix<f64, 3, 4>;

/// Physical description of the leg. Links are point masses located at the
/// centre-of-mass distances; `rotor_inertia` adds a diagonal regularizer to
/// the mass matrix so it stays invertible when all masses line up on the
/// z-axis (the upright configuration).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobotParams {
    /// Upper-link length, hip to knee (m).
    pub len_upper: f64,
    /// Lower-link length, knee to tip (m).
    pub len_lower: f64,
    /// Upper-link CoM distance from the hip along the link axis (m).
    pub com_upper: f64,
    /// Lower-link CoM distance from the knee along the link axis (m).
    pub com_lower: f64,
    /// Upper-link mass (kg).
    pub mass_upper: f64,
    /// Lower-link mass (kg).
    pub mass_lower: f64,
    /// Gravitational acceleration (m/s²); potential energy is `m·g·z`.
    pub gravity: f64,
    /// Diagonal mass-matrix regularizer (kg·m²). Zero is allowed but makes
    /// forward dynamics fail at configurations where the point masses are
    /// collinear with the z-axis.
    pub rotor_inertia: f64,
}

impl Default for RobotParams {
    /// Round human-leg-scale values used by tests and as CLI defaults.
    fn default() -> Self {
        RobotParams {
            len_upper: 0.4,
            len_lower: 0.4,
            com_upper: 0.2,
            com_lower: 0.2,
            mass_upper: 1.0,
            mass_lower: 1.0,
            gravity: 9.81,
            rotor_inertia: 1e-3,
        }
    }
}

impl RobotParams {
    /// Checks the physical invariants, returning the offending field name.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let positive = [
            ("len_upper", self.len_upper),
            ("len_lower", self.len_lower),
            ("com_upper", self.com_upper),
            ("com_lower", self.com_lower),
            ("mass_upper", self.mass_upper),
            ("mass_lower", self.mass_lower),
        ];
        for (key, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err((key, format!("must be > 0, got {v}")));
            }
        }
        if self.com_upper > self.len_upper {
            return Err(("com_upper", "must not exceed len_upper".into()));
        }
        if self.com_lower > self.len_lower {
            return Err(("com_lower", "must not exceed len_lower".into()));
        }
        if !(self.gravity >= 0.0) || !self.gravity.is_finite() {
            return Err(("gravity", format!("must be >= 0, got {}", self.gravity)));
        }
        if !(self.rotor_inertia >= 0.0) || !self.rotor_inertia.is_finite() {
            return Err((
                "rotor_inertia",
                format!("must be >= 0, got {}", self.rotor_inertia),
            ));
        }
        Ok(())
    }
}

/// Joint positions, velocities and accelerations at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointState {
    pub q: JointVec,
    pub qd: JointVec,
    pub qdd: JointVec,
}

impl JointState {
    pub fn new(q: JointVec, qd: JointVec, qdd: JointVec) -> Self {
        JointState { q, qd, qdd }
    }

    /// State at rest in configuration `q`.
    pub fn at_rest(q: JointVec) -> Self {
        JointState {
            q,
            qd: JointVec::zeros(),
            qdd: JointVec::zeros(),
        }
    }
}

/// One row of the conventional Denavit-Hartenberg table for this chain.
///
/// Documentation only: the explicit position equations above are the
/// authoritative kinematics, the DH view is kept for cross-reference with
/// standard manipulator descriptions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DhRow {
    pub theta: f64,
    pub d: f64,
    pub a: f64,
    pub alpha: f64,
}

/// The four-link DH table (hip joints have zero-length links, the two leg
/// links carry the lengths).
pub fn dh_table(params: &RobotParams) -> [DhRow; 4] {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let row = |a: f64| DhRow {
        theta: 0.0,
        d: 0.0,
        a,
        alpha: half_pi,
    };
    [row(0.0), row(0.0), row(params.len_upper), row(params.len_lower)]
}

/// Principal rotation axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Standard right-handed rotation matrix about a principal axis.
pub fn rot_axis(axis: Axis, angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    match axis {
        Axis::X => Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        Axis::Y => Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        Axis::Z => Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
    }
}

/// First derivative dR/dθ of `rot_axis`.
pub(crate) fn rot_axis_deriv(axis: Axis, angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    match axis {
        Axis::X => Matrix3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s),
        Axis::Y => Matrix3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s),
        Axis::Z => Matrix3::new(-s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0),
    }
}

/// Second derivative d²R/dθ² of `rot_axis`.
pub(crate) fn rot_axis_dderiv(axis: Axis, angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    match axis {
        Axis::X => Matrix3::new(0.0, 0.0, 0.0, 0.0, -c, s, 0.0, -s, -c),
        Axis::Y => Matrix3::new(-c, 0.0, -s, 0.0, 0.0, 0.0, s, 0.0, -c),
        Axis::Z => Matrix3::new(-c, s, 0.0, -s, -c, 0.0, 0.0, 0.0, 0.0),
    }
}

/// Points on the chain for which kinematics can be queried.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Body {
    UpperCom,
    LowerCom,
    Tip,
}

fn body_point(body: Body, params: &RobotParams) -> (Vector3<f64>, Vector3<f64>) {
    match body {
        Body::UpperCom => (Vector3::new(0.0, 0.0, params.com_upper), Vector3::zeros()),
        Body::LowerCom => (
            Vector3::new(0.0, 0.0, params.len_upper),
            Vector3::new(0.0, 0.0, params.com_lower),
        ),
        Body::Tip => (
            Vector3::new(0.0, 0.0, params.len_upper),
            Vector3::new(0.0, 0.0, params.len_lower),
        ),
    }
}

/// Hip rotation Rz(q0)·Ry(-q1)·Rx(q2).
fn hip_rotation(q: &JointVec) -> Matrix3<f64> {
    rot_axis(Axis::Z, q[0]) * rot_axis(Axis::Y, -q[1]) * rot_axis(Axis::X, q[2])
}

/// World position of a fixed point `offset + Ry(q3)·arm` carried by the hip.
fn chain_position(q: &JointVec, offset: Vector3<f64>, arm: Vector3<f64>) -> Vector3<f64> {
    hip_rotation(q) * (offset + rot_axis(Axis::Y, q[3]) * arm)
}

/// World position of the upper-link centre of mass.
pub fn fk_com_upper(q: &JointVec, params: &RobotParams) -> Vector3<f64> {
    let (offset, arm) = body_point(Body::UpperCom, params);
    chain_position(q, offset, arm)
}

/// World position of the lower-link centre of mass.
pub fn fk_com_lower(q: &JointVec, params: &RobotParams) -> Vector3<f64> {
    let (offset, arm) = body_point(Body::LowerCom, params);
    chain_position(q, offset, arm)
}

/// World position of the leg tip.
pub fn fk_tip(q: &JointVec, params: &RobotParams) -> Vector3<f64> {
    let (offset, arm) = body_point(Body::Tip, params);
    chain_position(q, offset, arm)
}

/// Position, Jacobian, and Jacobian partial derivatives of one chain point.
///
/// `jac_partials[l]` is ∂J/∂q_l; its column k is the second partial
/// ∂²r/∂q_k ∂q_l, so the set doubles as the position Hessian.
pub(crate) struct PointKinematics {
    pub pos: Vector3<f64>,
    pub jac: Jacobian,
    pub jac_partials: [Jacobian; 4],
}

/// Closed-form kinematics of `r(q) = Rz(q0) Ry(-q1) Rx(q2) (offset + Ry(q3) arm)`
/// up to second derivatives. Each partial derivative replaces one rotation
/// factor by its angle derivative; the y-hip factor picks up a sign per
/// derivative order from its negated argument.
pub(crate) fn chain_kinematics(
    q: &JointVec,
    offset: Vector3<f64>,
    arm: Vector3<f64>,
) -> PointKinematics {
    let a = rot_axis(Axis::Z, q[0]);
    let a1 = rot_axis_deriv(Axis::Z, q[0]);
    let a2 = rot_axis_dderiv(Axis::Z, q[0]);
    let b = rot_axis(Axis::Y, -q[1]);
    let b1 = -rot_axis_deriv(Axis::Y, -q[1]);
    let b2 = rot_axis_dderiv(Axis::Y, -q[1]);
    let c = rot_axis(Axis::X, q[2]);
    let c1 = rot_axis_deriv(Axis::X, q[2]);
    let c2 = rot_axis_dderiv(Axis::X, q[2]);
    let p = offset + rot_axis(Axis::Y, q[3]) * arm;
    let p1 = rot_axis_deriv(Axis::Y, q[3]) * arm;
    let p2 = rot_axis_dderiv(Axis::Y, q[3]) * arm;

    let ab = a * b;
    let abc = ab * c;
    let a1bc = a1 * b * c;
    let ab1c = a * b1 * c;
    let abc1 = ab * c1;

    let pos = abc * p;
    let jac = Jacobian::from_columns(&[a1bc * p, ab1c * p, abc1 * p, abc * p1]);

    // Second partials, symmetric in the pair of differentiated joints.
    let d00 = a2 * b * c * p;
    let d01 = a1 * b1 * c * p;
    let d02 = a1 * b * c1 * p;
    let d03 = a1bc * p1;
    let d11 = a * b2 * c * p;
    let d12 = a * b1 * c1 * p;
    let d13 = ab1c * p1;
    let d22 = ab * c2 * p;
    let d23 = abc1 * p1;
    let d33 = abc * p2;

    let second = [
        [d00, d01, d02, d03],
        [d01, d11, d12, d13],
        [d02, d12, d22, d23],
        [d03, d13, d23, d33],
    ];
    let jac_partials = std::array::from_fn(|l| {
        Jacobian::from_columns(&[second[0][l], second[1][l], second[2][l], second[3][l]])
    });

    PointKinematics {
        pos,
        jac,
        jac_partials,
    }
}

/// Full kinematics (position, Jacobian, Jacobian partials) of a chain body.
pub(crate) fn point_kinematics(body: Body, q: &JointVec, params: &RobotParams) -> PointKinematics {
    let (offset, arm) = body_point(body, params);
    chain_kinematics(q, offset, arm)
}

/// Closed-form position Jacobian ∂r/∂q of a chain body (3×4).
pub fn jacobian_com(body: Body, q: &JointVec, params: &RobotParams) -> Jacobian {
    point_kinematics(body, q, params).jac
}

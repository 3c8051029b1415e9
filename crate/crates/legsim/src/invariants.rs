//! Runtime invariant-check suite.
//!
//! Every structural property the library is built on — rotation
//! orthonormality, mass-matrix symmetry and definiteness, the skew-symmetry
//! of Ṁ − 2C, the Euler–Lagrange consistency of the inverse dynamics, the
//! regressor reconstruction identity, estimator/batch equivalence, and the
//! control-loop hold structure — is checked here at runtime against
//! finite-difference or brute-force oracles, with the measured defect
//! reported next to its bound. Failures are report entries, never panics.

use nalgebra::Matrix3;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fmt;

use crate::control::{
    computed_torque, control_tick, ControlLawMode, Controller, ControllerState, Gains, InterpKind,
    JointTrajectory, TrajectoryPoint,
};
use crate::dynamics::{
    coriolis_matrix, forward_dynamics, gravity_vector, inverse_dynamics, mass_matrix, total_energy,
    Torque,
};
use crate::estimator::{rls_batch_oracle, rls_init, rls_update, RlsConfig};
use crate::kinematics::{
    fk_com_lower, fk_com_upper, fk_tip, jacobian_com, rot_axis, Axis, Body, Jacobian, JointState,
    JointVec, RobotParams,
};
use crate::regressor::{regressor_scaled, true_theta_scales, RegressorMatrix, ThetaVec};
use crate::sim::{rk4_step, run_experiment_traced, ExperimentConfig};

/// Direction of a check's tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    AtMost,
    AtLeast,
}

/// One invariant check with its measured value against the bound.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub measured: f64,
    pub bound: f64,
    pub kind: BoundKind,
    pub passed: bool,
}

impl CheckResult {
    fn at_most(name: &'static str, measured: f64, bound: f64) -> Self {
        CheckResult {
            name,
            measured,
            bound,
            kind: BoundKind::AtMost,
            passed: measured.is_finite() && measured <= bound,
        }
    }

    fn at_least(name: &'static str, measured: f64, bound: f64) -> Self {
        CheckResult {
            name,
            measured,
            bound,
            kind: BoundKind::AtLeast,
            passed: measured.is_finite() && measured >= bound,
        }
    }
}

/// Outcome of the full suite.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(0)
            .max(9);
        writeln!(
            f,
            "{:<width$}  {:>13}  {:>16}  status",
            "invariant", "measured", "bound"
        )?;
        for c in &self.checks {
            let rel = match c.kind {
                BoundKind::AtMost => "<=",
                BoundKind::AtLeast => ">=",
            };
            writeln!(
                f,
                "{:<width$}  {:>13.6e}  {} {:>13.6e}  {}",
                c.name,
                c.measured,
                rel,
                c.bound,
                if c.passed { "pass" } else { "FAIL" }
            )?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        if failed == 0 {
            write!(f, "all {} checks passed", self.checks.len())
        } else {
            write!(f, "{failed} of {} checks FAILED", self.checks.len())
        }
    }
}

fn random_q(rng: &mut impl Rng) -> JointVec {
    JointVec::from_fn(|_, _| rng.random_range(-PI..PI))
}

fn random_vel(rng: &mut impl Rng, scale: f64) -> JointVec {
    JointVec::from_fn(|_, _| rng.random_range(-scale..scale))
}

/// Runs every invariant check and reports measured defects. Deterministic
/// for a fixed seed; failures never abort the suite.
pub fn run_invariant_suite(params: &RobotParams, seed: u64) -> SuiteReport {
    let mut checks = Vec::new();
    let fork = |salt: u64| ChaCha8Rng::seed_from_u64(seed.wrapping_add(salt));

    checks.push(rotation_orthonormality(&mut fork(1)));
    checks.push(fk_length_preservation(params, &mut fork(2)));
    checks.push(jacobian_finite_difference(params, &mut fork(3)));
    checks.push(lower_com_tip_consistency(params, &mut fork(4)));

    checks.push(mass_symmetry(params, &mut fork(10)));
    checks.push(mass_positive_definite(params, &mut fork(11)));
    checks.push(skew_symmetry(params, &mut fork(12)));
    checks.push(euler_lagrange_consistency(params, &mut fork(13)));
    checks.push(free_fall_energy(params, &mut fork(14)));
    checks.push(inverse_forward_roundtrip(params, &mut fork(15)));

    checks.push(reconstruction_identity_with(regressor_scaled, params, &mut fork(20)));
    checks.push(parameter_independence(params, &mut fork(21)));
    checks.push(regressor_linearity(params, &mut fork(22)));
    checks.push(cross_model_exactness(params, &mut fork(23)));

    checks.push(rls_batch_equivalence(&mut fork(30)));
    checks.push(covariance_health(&mut fork(31)));
    checks.push(covariance_monotonicity(&mut fork(32)));
    checks.push(rls_noise_free_convergence(&mut fork(33)));

    checks.push(zero_error_collapse(params, &mut fork(40)));
    checks.push(zoh_hold_structure(params));
    checks.push(trajectory_derivative_consistency(&mut fork(41)));
    checks.push(gain_monotonicity(params));

    SuiteReport { checks }
}

// ---------------------------------------------------------------------------
// kinematics

fn rotation_orthonormality(rng: &mut impl Rng) -> CheckResult {
    let mut worst = 0.0f64;
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        for _ in 0..1000 {
            let r = rot_axis(axis, rng.random_range(-10.0..10.0));
            let gram_defect = (r.transpose() * r - Matrix3::identity()).abs().max();
            let det_defect = (r.determinant() - 1.0).abs();
            worst = worst.max(gram_defect).max(det_defect);
        }
    }
    CheckResult::at_most("kinematics: rotation orthonormality", worst, 1e-12)
}

fn fk_length_preservation(params: &RobotParams, rng: &mut impl Rng) -> CheckResult {
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let q = random_q(rng);
        worst = worst.max((fk_com_upper(&q, params).norm() - params.com_upper).abs());
    }
    CheckResult::at_most("kinematics: CoM distance preservation", worst, 1e-12)
}

fn jacobian_finite_difference(params: &RobotParams, rng: &mut impl Rng) -> CheckResult {
    let h = 1e-6;
    let fk = |body: Body, q: &JointVec| match body {
        Body::UpperCom => fk_com_upper(q, params),
        Body::LowerCom => fk_com_lower(q, params),
        Body::Tip => fk_tip(q, params),
    };
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = random_q(rng);
        for body in [Body::UpperCom, Body::LowerCom, Body::Tip] {
            let analytic = jacobian_com(body, &q, params);
            let mut fd = Jacobian::zeros();
            for k in 0..4 {
                let mut qp = q;
                let mut qm = q;
                qp[k] += h;
                qm[k] -= h;
                fd.set_column(k, &((fk(body, &qp) - fk(body, &qm)) / (2.0 * h)));
            }
            worst = worst.max((analytic - fd).abs().max());
        }
    }
    CheckResult::at_most("kinematics: jacobian vs finite difference", worst, 1e-6)
}

fn lower_com_tip_consistency(params: &RobotParams, rng: &mut impl Rng) -> CheckResult {
    let mut full_com = *params;
    full_com.com_lower = full_com.len_lower;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = random_q(rng);
        worst = worst.max((fk_com_lower(&q, &full_com) - fk_tip(&q, &full_com)).abs().max());
    }
    CheckResult::at_most("kinematics: lower-CoM/tip consistency", worst, 0.0)
}

// ---------------------------------------------------------------------------
// dynamics

fn mass_symmetry(params: &RobotParams, rng: &mut impl Rng) -> CheckResult {
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m = mass_matrix(&random_q(rng), params);
        worst = worst.max((m - m.transpose()).abs().max());
    }
    CheckResult::at_most("dynamics: mass matrix symmetry", worst, 1e-12)
}

/// Smallest eigenvalue over random configurations plus the upright one (the
/// alignment case), combined with the operational test that the factorized
/// solve succeeds there.
fn mass_positive_definite(params: &RobotParams, rng: &mut impl Rng) -> CheckResult {
    let mut min_eig = f64::INFINITY;
    let mut solvable = true;
    let mut configs = vec![JointVec::zeros()];
    configs.extend((0..1000).map(|_| random_q(rng)));
    for q in &configs {
        let m = mass_matrix(q, params);
        min_eig = min_eig.min(m.symmetric_eigenvalues().min());
        if forward_dynamics(q, &JointVec::zeros(), &gravity_vector(q, params), params).is_err() {
            solvable = false;
        }
    }
    let mut check = CheckResult::at_least(
        "dynamics: mass matrix positive definite",
        min_eig,
        params.rotor_inertia - 1e-12,
    );
    check.passed &= solvable;
    check
}

fn skew_symmetry(params: &RobotParams, rng: &mut impl Rng) -> CheckResult {
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = random_q(rng);
        let qd = random_vel(rng, 1.0).normalize();
        let c = coriolis_matrix(&q, &qd, params);
        let m_dot = (mass_matrix(&(q + h * qd), params) - mass_matrix(&(q - h * qd), params))
            / (2.0 * h);
        worst = worst.max(qd.dot(&((m_dot - 2.0 * c) * qd)).abs());
    }
    CheckResult::at_most("dynamics: skew symmetry of Mdot - 2C", worst, 1e-9)
}

fn euler_lagrange_consistency(params: &RobotParams, rng: &mut impl Rng) -> CheckResult {
    let lagrangian = |q: &JointVec, qd: &JointVec| {
        let ju = jacobian_com(Body::UpperCom, q, params);
        let jl = jacobian_com(Body::LowerCom, q, params);
        let kinetic = 0.5 * params.mass_upper * (ju * qd).norm_squared()
            + 0.5 * params.mass_lower * (jl * qd).norm_squared()
            + 0.5 * params.rotor_inertia * qd.norm_squared();
        let potential = params.gravity
            * (params.mass_upper * fk_com_upper(q, params)[2]
                + params.mass_lower * fk_com_lower(q, params)[2]);
        kinetic - potential
    };
    // time and position steps 1e-6; the velocity step is wide because the
    // Lagrangian is exactly quadratic in q̇ (no truncation error there)
    let h = 1e-6;
    let hv = 1e-3;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = random_q(rng);
        let qd = random_vel(rng, 2.0);
        let qdd = random_vel(rng, 2.0);
        let tau = inverse_dynamics(&q, &qd, &qdd, params);
        let oracle = JointVec::from_fn(|k, _| {
            let dl_dqd = |q: &JointVec, qd: &JointVec| {
                let mut vp = *qd;
                let mut vm = *qd;
                vp[k] += hv;
                vm[k] -= hv;
                (lagrangian(q, &vp) - lagrangian(q, &vm)) / (2.0 * hv)
            };
            let ddt = (dl_dqd(&(q + h * qd), &(qd + h * qdd))
                - dl_dqd(&(q - h * qd), &(qd - h * qdd)))
                / (2.0 * h);
            let mut qp = q;
            let mut qm = q;
            qp[k] += h;
            qm[k] -= h;
            let dl_dq = (lagrangian(&qp, &qd) - lagrangian(&qm, &qd)) / (2.0 * h);
            ddt - dl_dq
        });
        worst = worst.max((tau - oracle).norm() / tau.norm().max(1.0));
    }
    CheckResult::at_most("dynamics: Euler-Lagrange consistency (rel)", worst, 1e-5)
}

fn free_fall_energy(params: &RobotParams, rng: &mut impl Rng) -> CheckResult {
    let mut q = random_vel(rng, 1.0);
    let mut qd = random_vel(rng, 1.0);
    let tau = Torque::zeros();
    let e0 = total_energy(&q, &qd, params);
    if e0.abs() < 1e-3 {
        q[1] += 0.5; // move off the zero-energy surface
    }
    let e0 = total_energy(&q, &qd, params);
    let dt = 1e-4;
    for _ in 0..100_000 {
        match rk4_step(&q, &qd, &tau, dt, params) {
            Ok((qn, qdn)) => {
                q = qn;
                qd = qdn;
            }
            Err(_) => {
                return CheckResult::at_most(
                    "dynamics: free-fall energy conservation (rel, 10 s)",
                    f64::INFINITY,
                    1e-6,
                )
            }
        }
    }
    let drift = (total_energy(&q, &qd, params) - e0).abs() / e0.abs();
    CheckResult::at_most("dynamics: free-fall energy conservation (rel, 10 s)", drift, 1e-6)
}

fn inverse_forward_roundtrip(params: &RobotParams, rng: &mut impl Rng) -> CheckResult {
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let q = random_q(rng);
        let qd = random_vel(rng, 3.0);
        let qdd = random_vel(rng, 3.0);
        let tau = inverse_dynamics(&q, &qd, &qdd, params);
        match forward_dynamics(&q, &qd, &tau, params) {
            Ok(back) => worst = worst.max((back - qdd).abs().max()),
            Err(_) => worst = f64::INFINITY,
        }
    }
    CheckResult::at_most("dynamics: inverse/forward roundtrip", worst, 1e-9)
}

// ---------------------------------------------------------------------------
// regressor

/// Reconstruction identity with an injectable regressor, so tampering is
/// detectable in tests of the check itself.
pub(crate) fn reconstruction_identity_with(
    phi_fn: impl Fn(&JointVec, &JointVec, &JointVec, &RobotParams) -> RegressorMatrix,
    params: &RobotParams,
    rng: &mut impl Rng,
) -> CheckResult {
    let ones = ThetaVec::repeat(1.0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let q = random_q(rng);
        let qd = random_vel(rng, 3.0);
        let qdd = random_vel(rng, 3.0);
        let tau = inverse_dynamics(&q, &qd, &qdd, params);
        let recon = phi_fn(&q, &qd, &qdd, params) * ones;
        worst = worst.max((recon - tau).abs().max());
    }
    CheckResult::at_most("regressor: reconstruction identity", worst, 1e-9)
}

fn parameter_independence(params: &RobotParams, rng: &mut impl Rng) -> CheckResult {
    let mut perturbed = *params;
    perturbed.com_upper *= 0.7;
    perturbed.com_lower *= 1.3;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = random_q(rng);
        let qd = random_vel(rng, 3.0);
        let qdd = random_vel(rng, 3.0);
        let a = crate::regressor::regressor_raw(&q, &qd, &qdd, params);
        let b = crate::regressor::regressor_raw(&q, &qd, &qdd, &perturbed);
        worst = worst.max((a - b).abs().max());
    }
    CheckResult::at_most("regressor: CoM independence of columns", worst, 1e-12)
}

fn regressor_linearity(params: &RobotParams, rng: &mut impl Rng) -> CheckResult {
    let t1 = ThetaVec::new(0.3, 0.6, 0.9, 1.2, 1.5);
    let t2 = ThetaVec::new(1.0, 0.8, 0.6, 0.4, 0.2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = random_q(rng);
        let qd = random_vel(rng, 3.0);
        let qdd = random_vel(rng, 3.0);
        let phi = regressor_scaled(&q, &qd, &qdd, params);
        let (alpha, beta) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let lhs = phi * (alpha * t1 + beta * t2);
        let rhs = alpha * (phi * t1) + beta * (phi * t2);
        let scale = rhs.abs().max().max(1.0);
        worst = worst.max((lhs - rhs).abs().max() / scale);
    }
    CheckResult::at_most("regressor: linearity in theta (rel)", worst, 1e-12)
}

fn cross_model_exactness(params: &RobotParams, rng: &mut impl Rng) -> CheckResult {
    let mut worst = 0.0f64;
    for scale in [1.2, 0.8] {
        let mut actual = *params;
        actual.com_upper *= scale;
        actual.com_lower *= scale;
        let theta_star = match true_theta_scales(params, &actual) {
            Ok(t) => t,
            Err(_) => {
                return CheckResult::at_most("regressor: cross-model exactness", f64::INFINITY, 1e-9)
            }
        };
        for _ in 0..500 {
            let q = random_q(rng);
            let qd = random_vel(rng, 3.0);
            let qdd = random_vel(rng, 3.0);
            let predicted = regressor_scaled(&q, &qd, &qdd, params) * theta_star;
            let tau_actual = inverse_dynamics(&q, &qd, &qdd, &actual);
            worst = worst.max((predicted - tau_actual).abs().max());
        }
    }
    CheckResult::at_most("regressor: cross-model exactness", worst, 1e-9)
}

// ---------------------------------------------------------------------------
// estimator

fn random_phi(rng: &mut impl Rng) -> RegressorMatrix {
    RegressorMatrix::from_fn(|_, _| rng.random_range(-1.0..1.0))
}

fn rls_batch_equivalence(rng: &mut impl Rng) -> CheckResult {
    let cfg = RlsConfig::default();
    let theta_true = ThetaVec::new(1.44, 1.2, 0.64, 0.8, 1.0);
    let samples: Vec<_> = (0..500)
        .map(|_| {
            let phi = random_phi(rng);
            (phi, phi * theta_true)
        })
        .collect();
    let mut state = rls_init(&cfg).expect("default config is valid");
    for (phi, tau) in &samples {
        state = match rls_update(&state, phi, tau) {
            Ok(s) => s,
            Err(_) => {
                return CheckResult::at_most("estimator: RLS/batch equivalence", f64::INFINITY, 1e-8)
            }
        };
    }
    let batch = match rls_batch_oracle(&samples, &cfg) {
        Ok(t) => t,
        Err(_) => return CheckResult::at_most("estimator: RLS/batch equivalence", f64::INFINITY, 1e-8),
    };
    CheckResult::at_most(
        "estimator: RLS/batch equivalence",
        (state.theta_hat - batch).abs().max(),
        1e-8,
    )
}

fn covariance_health(rng: &mut impl Rng) -> CheckResult {
    let mut state = rls_init(&RlsConfig::default()).expect("default config is valid");
    let mut worst_asym = 0.0f64;
    let mut min_eig = f64::INFINITY;
    for _ in 0..10_000 {
        let phi = random_phi(rng);
        let tau = phi * ThetaVec::repeat(1.0);
        state = match rls_update(&state, &phi, &tau) {
            Ok(s) => s,
            Err(_) => {
                return CheckResult::at_most("estimator: covariance symmetry/SPD", f64::INFINITY, 1e-9)
            }
        };
        worst_asym = worst_asym.max((state.cov - state.cov.transpose()).abs().max());
        min_eig = min_eig.min(state.cov.symmetric_eigenvalues().min());
    }
    let mut check =
        CheckResult::at_most("estimator: covariance symmetry/SPD", worst_asym, 1e-9);
    check.passed &= min_eig > 0.0;
    check
}

fn covariance_monotonicity(rng: &mut impl Rng) -> CheckResult {
    let mut state = rls_init(&RlsConfig::default()).expect("default config is valid");
    let probe = ThetaVec::new(0.5, -1.0, 0.25, 2.0, -0.5);
    let mut prev = probe.dot(&(state.cov * probe));
    let mut worst_growth = 0.0f64;
    for _ in 0..2000 {
        let phi = random_phi(rng);
        let tau = phi * ThetaVec::repeat(1.0);
        state = match rls_update(&state, &phi, &tau) {
            Ok(s) => s,
            Err(_) => {
                return CheckResult::at_most(
                    "estimator: covariance monotonicity",
                    f64::INFINITY,
                    1e-12,
                )
            }
        };
        let quad = probe.dot(&(state.cov * probe));
        worst_growth = worst_growth.max(quad - prev);
        prev = quad;
    }
    CheckResult::at_most("estimator: covariance monotonicity", worst_growth, 1e-12)
}

fn rls_noise_free_convergence(rng: &mut impl Rng) -> CheckResult {
    let cfg = RlsConfig {
        initial_cov_scale: 1e6,
        ..RlsConfig::default()
    };
    let theta_true = ThetaVec::new(1.44, 1.2, 0.64, 0.8, 1.0);
    let mut state = rls_init(&cfg).expect("config is valid");
    let mut err = f64::INFINITY;
    for _ in 0..500 {
        let phi = random_phi(rng);
        state = match rls_update(&state, &phi, &(phi * theta_true)) {
            Ok(s) => s,
            Err(_) => break,
        };
        err = (state.theta_hat - theta_true).abs().max();
        if err <= 1e-6 {
            break;
        }
    }
    CheckResult::at_most("estimator: noise-free convergence (500 ticks)", err, 1e-6)
}

// ---------------------------------------------------------------------------
// control

fn zero_error_collapse(params: &RobotParams, rng: &mut impl Rng) -> CheckResult {
    let gains = Gains::default();
    let theta = ThetaVec::new(1.1, 0.9, 1.2, 0.8, 1.0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let reference = TrajectoryPoint {
            q_ref: random_q(rng),
            qd_ref: random_vel(rng, 2.0),
            qdd_ref: random_vel(rng, 2.0),
        };
        let meas = JointState::new(reference.q_ref, reference.qd_ref, JointVec::zeros());
        let std_tau =
            computed_torque(&meas, &reference, &theta, params, &gains, ControlLawMode::Standard);
        let lit_tau = computed_torque(
            &meas,
            &reference,
            &theta,
            params,
            &gains,
            ControlLawMode::PaperLiteral,
        );
        worst = worst.max((std_tau - lit_tau).abs().max());
    }
    CheckResult::at_most("control: zero-error mode collapse", worst, 1e-12)
}

fn zoh_hold_structure(params: &RobotParams) -> CheckResult {
    let config = ExperimentConfig {
        nominal_params: *params,
        true_params: *params,
        duration: 0.5,
        plant_substep: 1e-3,
        ..ExperimentConfig::default()
    };
    match run_experiment_traced(&config) {
        Ok((records, trace)) => {
            let n_sub = config.substeps_per_tick();
            let mut worst = 0.0f64;
            for (k, chunk) in trace.chunks(n_sub).enumerate() {
                for sample in chunk {
                    worst = worst.max((sample.tau - records[k].tau).abs().max());
                }
            }
            CheckResult::at_most("control: ZOH hold structure", worst, 0.0)
        }
        Err(_) => CheckResult::at_most("control: ZOH hold structure", f64::INFINITY, 0.0),
    }
}

fn trajectory_derivative_consistency(rng: &mut impl Rng) -> CheckResult {
    let trajectory = JointTrajectory::through_waypoints(
        vec![random_q(rng), random_q(rng), random_q(rng)],
        3.0,
        InterpKind::Quintic,
    );
    let h = 1e-6;
    let mut worst = 0.0f64;
    for i in 1..150 {
        let t = 3.0 * i as f64 / 150.0;
        // skip samples straddling a segment boundary
        if (t / 1.5 - (t / 1.5).round()).abs() < 2.0 * h {
            continue;
        }
        let p = trajectory.sample(t);
        let fp = trajectory.sample(t + h);
        let fm = trajectory.sample(t - h);
        let qd_fd = (fp.q_ref - fm.q_ref) / (2.0 * h);
        let qdd_fd = (fp.qd_ref - fm.qd_ref) / (2.0 * h);
        worst = worst.max((p.qd_ref - qd_fd).norm() / p.qd_ref.norm().max(1.0));
        worst = worst.max((p.qdd_ref - qdd_fd).norm() / p.qdd_ref.norm().max(1.0));
    }
    CheckResult::at_most("control: trajectory derivative consistency (rel)", worst, 1e-5)
}

/// Regulation against a plant with +20% CoM error, adaptation off: doubling
/// K_p (with K_d rescaled for equal damping ratio) must not increase the
/// settled position error.
fn gain_monotonicity(params: &RobotParams) -> CheckResult {
    let mut plant = *params;
    plant.com_upper *= 1.2;
    plant.com_lower *= 1.2;
    let target = JointVec::new(0.3, 0.4, 0.2, 0.5);

    let settled_error = |gains: Gains| -> f64 {
        let controller = Controller {
            trajectory: JointTrajectory::point_to_point(
                JointVec::zeros(),
                target,
                1.0,
                InterpKind::Quintic,
            ),
            gains,
            nominal: *params,
            mode: ControlLawMode::Standard,
        };
        let mut state = ControllerState::new(
            rls_init(&RlsConfig::default()).expect("default config is valid"),
        );
        let (mut q, mut qd) = (JointVec::zeros(), JointVec::zeros());
        let (period, substep) = (0.01, 1e-3);
        let mut err_sum = 0.0;
        let mut err_count = 0usize;
        for k in 0..=200 {
            let t = k as f64 * period;
            let qdd = forward_dynamics(
                &q,
                &qd,
                &state.prev_tau.unwrap_or_else(Torque::zeros),
                &plant,
            )
            .unwrap_or_else(|_| JointVec::zeros());
            let obs = JointState::new(q, qd, qdd);
            let (tau, next) = control_tick(t, &controller, &state, &obs, false);
            state = next;
            if t >= 1.5 {
                err_sum += (q - target).abs().max();
                err_count += 1;
            }
            if k < 200 {
                for _ in 0..10 {
                    match rk4_step(&q, &qd, &tau, substep, &plant) {
                        Ok((qn, qdn)) => {
                            q = qn;
                            qd = qdn;
                        }
                        Err(_) => return f64::INFINITY,
                    }
                }
            }
        }
        err_sum / err_count.max(1) as f64
    };

    let base = settled_error(Gains::default());
    let double = settled_error(Gains::uniform(200.0, 20.0 * 2f64.sqrt()));
    let ratio = double / base;
    let mut check = CheckResult::at_most("control: gain monotonicity (error ratio)", ratio, 1.0);
    check.passed = ratio.is_finite() && ratio <= 1.0 + 1e-9;
    check
}

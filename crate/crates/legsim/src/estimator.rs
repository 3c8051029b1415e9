//! Multi-output recursive least squares over the five scale parameters.
//!
//! Each control tick contributes one matrix measurement `Φ′_i θ = τ_i` with
//! Φ′_i 4×5. The update is the standard inversion-lemma form with optional
//! exponential forgetting:
//!
//! ```text
//! S_i = λI + Φ_i P_{i-1} Φ_iᵀ
//! K_i = P_{i-1} Φ_iᵀ S_i⁻¹
//! θ̂_i = θ̂_{i-1} + K_i (τ_i − Φ_i θ̂_{i-1})
//! P_i = (P_{i-1} − K_i Φ_i P_{i-1}) / λ
//! ```
//!
//! With λ = 1 the recursion is algebraically identical to regularized batch
//! least squares with prior weight P₀⁻¹, which [`rls_batch_oracle`] solves
//! directly.

use nalgebra::{Cholesky, Matrix4, SMatrix};
use thiserror::Error;

use crate::dynamics::Torque;
use crate::regressor::{RegressorMatrix, ThetaVec};

/// RLS gain, 5×4 (parameters × outputs).
pub type GainMatrix = SMatrix<f64, 5, 4>;

/// Parameter covariance, 5×5 symmetric positive definite.
pub type CovMatrix = SMatrix<f64, 5, 5>;

#[derive(Debug, Error)]
pub enum RlsError {
    #[error("initial_cov_scale must be > 0, got {0}")]
    InvalidCovScale(f64),
    #[error("forgetting factor must lie in (0, 1], got {0}")]
    InvalidForgetting(f64),
    #[error("innovation matrix is numerically singular (condition estimate {cond:.3e})")]
    SingularInnovation { cond: f64 },
    #[error("batch normal matrix is singular")]
    SingularNormalMatrix,
    #[error("batch oracle needs at least one sample")]
    NoSamples,
}

/// Estimator configuration. Defaults: θ̂₀ = all-ones (trust the nominal
/// model), P₀ = 1e3·I, no forgetting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RlsConfig {
    pub initial_theta: ThetaVec,
    pub initial_cov_scale: f64,
    pub forgetting: f64,
}

impl Default for RlsConfig {
    fn default() -> Self {
        RlsConfig {
            initial_theta: ThetaVec::repeat(1.0),
            initial_cov_scale: 1e3,
            forgetting: 1.0,
        }
    }
}

/// Persistent estimator memory: the estimate, its covariance, the most
/// recent gain (kept for log fidelity; it is recomputable), and the tick
/// count. The forgetting factor rides along so updates need no extra
/// configuration argument.
#[derive(Clone, Debug, PartialEq)]
pub struct RlsState {
    pub theta_hat: ThetaVec,
    pub cov: CovMatrix,
    pub gain: GainMatrix,
    pub tick: u64,
    pub forgetting: f64,
}

/// Fresh estimator state from a configuration.
pub fn rls_init(config: &RlsConfig) -> Result<RlsState, RlsError> {
    if !(config.initial_cov_scale > 0.0) {
        return Err(RlsError::InvalidCovScale(config.initial_cov_scale));
    }
    if !(config.forgetting > 0.0 && config.forgetting <= 1.0) {
        return Err(RlsError::InvalidForgetting(config.forgetting));
    }
    Ok(RlsState {
        theta_hat: config.initial_theta,
        cov: CovMatrix::identity() * config.initial_cov_scale,
        gain: GainMatrix::zeros(),
        tick: 0,
        forgetting: config.forgetting,
    })
}

/// One RLS step on a (regressor, torque) pair. Pure: consumes the old state
/// by reference and returns the new one.
pub fn rls_update(
    state: &RlsState,
    phi: &RegressorMatrix,
    tau: &Torque,
) -> Result<RlsState, RlsError> {
    let lambda = state.forgetting;
    let p_phi_t = state.cov * phi.transpose(); // 5×4
    let s: Matrix4<f64> = lambda * Matrix4::identity() + phi * p_phi_t;

    // S is symmetric positive definite by construction; a blown-up
    // condition number still signals that the update would be garbage.
    let eigs = s.symmetric_eigenvalues();
    let (min_e, max_e) = (eigs.min(), eigs.max());
    if !(min_e > 0.0) || max_e / min_e > 1e12 {
        return Err(RlsError::SingularInnovation {
            cond: if min_e > 0.0 { max_e / min_e } else { f64::INFINITY },
        });
    }
    let chol = Cholesky::new(s).ok_or(RlsError::SingularInnovation {
        cond: max_e / min_e,
    })?;
    // K = P Φᵀ S⁻¹, computed as (S⁻¹ (P Φᵀ)ᵀ)ᵀ since S is symmetric.
    let gain: GainMatrix = chol.solve(&p_phi_t.transpose()).transpose();

    let innovation = tau - phi * state.theta_hat;
    let theta_hat = state.theta_hat + gain * innovation;
    let cov_raw = (state.cov - gain * (phi * state.cov)) / lambda;
    let cov = 0.5 * (cov_raw + cov_raw.transpose());

    Ok(RlsState {
        theta_hat,
        cov,
        gain,
        tick: state.tick + 1,
        forgetting: lambda,
    })
}

/// Batch solution of the same estimation problem (λ = 1): solves the
/// regularized normal equations
/// `(Σ ΦᵀΦ + P₀⁻¹) θ = Σ Φᵀτ + P₀⁻¹ θ₀` with P₀ = initial_cov_scale·I.
/// Test oracle for the sequential update.
pub fn rls_batch_oracle(
    samples: &[(RegressorMatrix, Torque)],
    config: &RlsConfig,
) -> Result<ThetaVec, RlsError> {
    if samples.is_empty() {
        return Err(RlsError::NoSamples);
    }
    if !(config.initial_cov_scale > 0.0) {
        return Err(RlsError::InvalidCovScale(config.initial_cov_scale));
    }
    let prior_weight = 1.0 / config.initial_cov_scale;
    let mut normal = CovMatrix::identity() * prior_weight;
    let mut rhs = prior_weight * config.initial_theta;
    for (phi, tau) in samples {
        normal += phi.transpose() * phi;
        rhs += phi.transpose() * tau;
    }
    let chol = Cholesky::new(normal).ok_or(RlsError::SingularNormalMatrix)?;
    Ok(chol.solve(&rhs))
}

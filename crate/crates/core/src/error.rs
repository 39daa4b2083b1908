//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::scenario::ValidationReport;

#[derive(Debug, Clone, Error)]
pub enum SimError {
    /// The pitch angle is too close to the Euler representation singularity
    /// for a representation Jacobian to be trusted.
    #[error("pitch {pitch:.6} rad is within {margin:.0e} rad of the representation singularity")]
    SingularOrientation { pitch: f64, margin: f64 },

    /// A navigation-function evaluation was requested on or inside an
    /// inflated obstacle or the workspace boundary.
    #[error("pose lies on or inside an inflated obstacle/boundary (beta = {beta:.3e})")]
    OnObstacleBoundary { beta: f64 },

    /// The gradient flow stalled away from the goal for longer than the
    /// configured window (saddle point of the potential).
    #[error(
        "gradient flow stalled at t = {t:.2} s (|grad| = {grad_norm:.3e}, gamma = {gamma:.3e})"
    )]
    StuckAtSaddle { t: f64, grad_norm: f64, gamma: f64 },

    /// A follower's estimation error reached its performance envelope.
    #[error(
        "estimation error left the envelope at t = {t:.2} s \
         (robot {robot}, axis {axis}): |e| = {error:.4} >= rho = {bound:.4}"
    )]
    EnvelopeViolation {
        t: f64,
        robot: usize,
        axis: usize,
        error: f64,
        bound: f64,
    },

    /// A grasp Jacobian passed to a transformation was numerically singular.
    #[error("grasp jacobian is rank deficient")]
    RankDeficientJacobian,

    /// The coupled mass matrix lost positive definiteness. Impossible for
    /// valid inputs, so treated as fatal.
    #[error("coupled mass matrix is not positive definite")]
    SingularMass,

    /// A non-finite value appeared in the named quantity. The run aborts at
    /// the first occurrence instead of propagating NaNs.
    #[error("non-finite value in `{what}` at t = {t:.2} s")]
    NonFinite { what: String, t: f64 },

    /// The scenario configuration failed validation.
    #[error("invalid scenario config:\n{0}")]
    InvalidConfig(ValidationReport),
}

impl SimError {
    pub fn non_finite(what: impl Into<String>, t: f64) -> Self {
        SimError::NonFinite {
            what: what.into(),
            t,
        }
    }
}

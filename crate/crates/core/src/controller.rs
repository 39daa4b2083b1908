//! Per-robot adaptive impedance control: desired wrench synthesis with load
//! sharing, force filtering, reference-velocity construction, the control
//! input itself, and parameter adaptation. Leader and followers run the
//! identical law; they differ only in where their reference trajectory comes
//! from.

use nalgebra::{Matrix6, Vector6};

use crate::dynamics::{
    DisturbanceRegressor, DisturbanceTheta, RegressorMatrix, Theta,
};
use crate::error::SimError;
use crate::se3::{Grasp, Wrench6};

/// Gain set of one robot's controller.
///
/// The robot-level damping and stiffness are derived from `(M_d, F, Y)` as
/// `D_d = M_d (F + Y)` and `K_d = M_d Y F`, which keeps the gain identities
/// `K_g = F + Y`, `K_p = Y F` exact by construction (constant `F`).
#[derive(Debug, Clone)]
pub struct ImpedanceGains {
    /// Desired object-level inertia, SPD.
    pub object_inertia: Matrix6<f64>,
    /// Desired object-level damping, SPD.
    pub object_damping: Matrix6<f64>,
    /// Desired object-level stiffness, SPD.
    pub object_stiffness: Matrix6<f64>,
    /// Desired robot-level inertia, SPD.
    pub robot_inertia: Matrix6<f64>,
    /// Diagonal of the filter split gain `F`, positive.
    pub f_gain: Vector6<f64>,
    /// Diagonal of the filter split gain `Y`, positive.
    pub y_gain: Vector6<f64>,
    /// Feedback gain on the composite velocity error, SPD.
    pub z_gain: Matrix6<f64>,
    /// Diagonal adaptation gains for the body parameters.
    pub adapt_gain: Theta,
    /// Diagonal adaptation gains for the disturbance parameters.
    pub adapt_gain_disturbance: DisturbanceTheta,
    /// Desired internal wrench; must lie in the null space of the grasp
    /// aggregation across the team.
    pub desired_internal_wrench: Wrench6,
    /// Optional box projection `[lo, hi]` applied to every adapted
    /// parameter component.
    pub adapt_projection: Option<(f64, f64)>,
}

impl ImpedanceGains {
    /// `K_f = M_d^{-1}`.
    pub fn force_gain(&self) -> Matrix6<f64> {
        self.robot_inertia
            .try_inverse()
            .expect("robot inertia is SPD")
    }

    pub fn kg(&self) -> Vector6<f64> {
        self.f_gain + self.y_gain
    }

    pub fn kp(&self) -> Vector6<f64> {
        self.y_gain.component_mul(&self.f_gain)
    }

    /// Robot-level damping `D_d = M_d (F + Y)`.
    pub fn robot_damping(&self) -> Matrix6<f64> {
        self.robot_inertia * Matrix6::from_diagonal(&self.kg())
    }

    /// Robot-level stiffness `K_d = M_d Y F`.
    pub fn robot_stiffness(&self) -> Matrix6<f64> {
        self.robot_inertia * Matrix6::from_diagonal(&self.kp())
    }
}

/// The object terms a robot is responsible for under its load share:
/// `mass = c_i M_O` and `bias = c_i (C_O v + D_O v + g_O)`.
#[derive(Debug, Clone)]
pub struct ObjectShare {
    pub mass: Matrix6<f64>,
    pub bias: Vector6<f64>,
}

/// Mutable controller state of one robot.
#[derive(Debug, Clone)]
pub struct ControllerState {
    /// Estimate of the body parameter vector.
    pub theta_hat: Theta,
    /// Estimate of the disturbance parameter vector.
    pub theta_d_hat: DisturbanceTheta,
    /// Filtered force state.
    pub force_filter: Vector6<f64>,
    prev_filter_input: Option<Vector6<f64>>,
}

impl ControllerState {
    /// Starts with the given parameter estimates and a zero force filter, so
    /// the initial reference velocity equals the desired one minus the
    /// pose-error correction.
    pub fn new(theta_hat: Theta, theta_d_hat: DisturbanceTheta) -> Self {
        ControllerState {
            theta_hat,
            theta_d_hat,
            force_filter: Vector6::zeros(),
            prev_filter_input: None,
        }
    }
}

/// Pre-designed object-level input
/// `y = vdot_d + M_dO^{-1} (-D_dO vtilde - K_dO etilde)`.
pub fn y_cmd(
    accel_des: &Vector6<f64>,
    twist_err: &Vector6<f64>,
    pose_err: &Vector6<f64>,
    gains: &ImpedanceGains,
) -> Vector6<f64> {
    let rhs = -(gains.object_damping * twist_err) - gains.object_stiffness * pose_err;
    accel_des
        + gains
            .object_inertia
            .cholesky()
            .expect("object-level inertia is SPD")
            .solve(&rhs)
}

/// Desired wrench of one robot:
/// `lambda_d = lambda_int - J^{-T} (M_share y + bias_share - lambda_e_hat)`.
///
/// Applied by all robots simultaneously this cancels the object
/// nonlinearities, injects the internal-wrench component and imposes the
/// desired object impedance.
pub fn desired_wrench(
    share: &ObjectShare,
    y: &Vector6<f64>,
    lambda_e_hat: &Wrench6,
    grasp: &Grasp,
    gains: &ImpedanceGains,
) -> Result<Wrench6, SimError> {
    if grasp.jac.determinant().abs() < 1e-12 {
        return Err(SimError::RankDeficientJacobian);
    }
    let object_side = share.mass * y + share.bias - lambda_e_hat.to_vector();
    Ok(Wrench6::from_vector(
        &(gains.desired_internal_wrench.to_vector() - grasp.jac_inv_t * object_side),
    ))
}

/// Advances the force filter `fdot + Y f = K_f J^T lambda_d` one control
/// period (implicit trapezoid; `Y` diagonal makes the solve componentwise)
/// and returns the filter rate at the new instant.
pub fn force_filter_step(
    state: &mut ControllerState,
    lambda_d: &Wrench6,
    grasp: &Grasp,
    gains: &ImpedanceGains,
    dt: f64,
) -> Vector6<f64> {
    assert!(dt > 0.0);
    let input = gains.force_gain() * (grasp.jac_t * lambda_d.to_vector());
    let prev_input = state.prev_filter_input.unwrap_or(input);
    let half = dt / 2.0;
    let mut f_new = Vector6::zeros();
    for j in 0..6 {
        let y = gains.y_gain[j];
        f_new[j] = ((1.0 - half * y) * state.force_filter[j]
            + half * (prev_input[j] + input[j]))
            / (1.0 + half * y);
    }
    state.force_filter = f_new;
    state.prev_filter_input = Some(input);
    input - Vector6::from_fn(|j, _| gains.y_gain[j] * f_new[j])
}

/// Composite velocity error `z = vtilde + F etilde - f`, identically
/// `v_O - v_ref`.
pub fn auxiliary_z(
    twist_err: &Vector6<f64>,
    pose_err: &Vector6<f64>,
    force_filter: &Vector6<f64>,
    gains: &ImpedanceGains,
) -> Vector6<f64> {
    twist_err + gains.f_gain.component_mul(pose_err) - force_filter
}

/// Reference velocity `v_ref = v_d - F etilde + f` and its derivative
/// `vdot_ref = vdot_d - F etilde_dot + fdot`, with the pose-error rate
/// supplied analytically.
pub fn reference_velocity(
    twist_des: &Vector6<f64>,
    accel_des: &Vector6<f64>,
    pose_err: &Vector6<f64>,
    pose_err_rate: &Vector6<f64>,
    force_filter: &Vector6<f64>,
    force_filter_rate: &Vector6<f64>,
    gains: &ImpedanceGains,
) -> (Vector6<f64>, Vector6<f64>) {
    let v_ref = twist_des - gains.f_gain.component_mul(pose_err) + force_filter;
    let v_ref_dot =
        accel_des - gains.f_gain.component_mul(pose_err_rate) + force_filter_rate;
    (v_ref, v_ref_dot)
}

/// Impedance control input
/// `u = -lambda + J^{-T} (Omega theta_hat + Delta theta_d_hat - K z)`.
pub fn control_input(
    lambda_meas: &Wrench6,
    omega: &RegressorMatrix,
    delta: &DisturbanceRegressor,
    state: &ControllerState,
    z: &Vector6<f64>,
    gains: &ImpedanceGains,
    grasp: &Grasp,
) -> Result<Wrench6, SimError> {
    if grasp.jac.determinant().abs() < 1e-12 {
        return Err(SimError::RankDeficientJacobian);
    }
    let feedforward = omega * state.theta_hat + delta * state.theta_d_hat;
    let inner = feedforward - gains.z_gain * z;
    Ok(Wrench6::from_vector(
        &(-lambda_meas.to_vector() + grasp.jac_inv_t * inner),
    ))
}

/// Explicit-Euler adaptation step
/// `theta_hat -= dt Gamma Omega^T z`, `theta_d_hat -= dt Gamma_d Delta^T z`,
/// with optional box projection.
pub fn adapt_step(
    state: &mut ControllerState,
    omega: &RegressorMatrix,
    delta: &DisturbanceRegressor,
    z: &Vector6<f64>,
    gains: &ImpedanceGains,
    dt: f64,
) {
    let grad = omega.transpose() * z;
    for j in 0..Theta::len(&grad) {
        state.theta_hat[j] -= dt * gains.adapt_gain[j] * grad[j];
    }
    let grad_d = delta.transpose() * z;
    for j in 0..DisturbanceTheta::len(&grad_d) {
        state.theta_d_hat[j] -= dt * gains.adapt_gain_disturbance[j] * grad_d[j];
    }
    if let Some((lo, hi)) = gains.adapt_projection {
        state.theta_hat.apply(|x| *x = x.clamp(lo, hi));
        state.theta_d_hat.apply(|x| *x = x.clamp(lo, hi));
    }
}

/// One robot's contribution to the Lyapunov diagnostic
/// `1/2 z^T M_i z + 1/2 theta_err^T Gamma^{-1} theta_err
///  + 1/2 theta_d_err^T Gamma_d^{-1} theta_d_err`.
/// Needs the true parameters, so it is a simulation-only quantity.
pub fn lyapunov_term(
    z: &Vector6<f64>,
    mass: &Matrix6<f64>,
    theta_err: &Theta,
    theta_d_err: &DisturbanceTheta,
    gains: &ImpedanceGains,
) -> f64 {
    let mut v = 0.5 * (z.transpose() * mass * z)[0];
    for j in 0..Theta::len(theta_err) {
        v += 0.5 * theta_err[j] * theta_err[j] / gains.adapt_gain[j];
    }
    for j in 0..DisturbanceTheta::len(theta_d_err) {
        v += 0.5 * theta_d_err[j] * theta_d_err[j] / gains.adapt_gain_disturbance[j];
    }
    v
}

/// Robot-level impedance error
/// `w = M_d vtilde_dot + D_d vtilde + K_d etilde - J^T lambda_d`, the
/// convergence target of the control law. Diagnostic only: it contains the
/// object acceleration error, which no robot measures.
pub fn impedance_error(
    accel_err: &Vector6<f64>,
    twist_err: &Vector6<f64>,
    pose_err: &Vector6<f64>,
    lambda_d: &Wrench6,
    grasp: &Grasp,
    gains: &ImpedanceGains,
) -> Vector6<f64> {
    gains.robot_inertia * accel_err + gains.robot_damping() * twist_err
        + gains.robot_stiffness() * pose_err
        - grasp.jac_t * lambda_d.to_vector()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;

    fn test_gains() -> ImpedanceGains {
        ImpedanceGains {
            object_inertia: Matrix6::identity(),
            object_damping: Matrix6::identity() * 2.0,
            object_stiffness: Matrix6::identity() * 4.0,
            robot_inertia: Matrix6::identity() * 0.5,
            f_gain: Vector6::repeat(0.8),
            y_gain: Vector6::repeat(1.5),
            z_gain: Matrix6::identity() * 3.0,
            adapt_gain: Theta::repeat(0.01),
            adapt_gain_disturbance: DisturbanceTheta::repeat(0.02),
            desired_internal_wrench: Wrench6::zero(),
            adapt_projection: None,
        }
    }

    #[test]
    fn gain_identities_hold_by_construction() {
        let g = test_gains();
        let kg = g.kg();
        let kp = g.kp();
        for j in 0..6 {
            assert_eq!(kg[j], 0.8 + 1.5);
            assert_eq!(kp[j], 1.5 * 0.8);
        }
        // D_d = M_d K_g and K_d = M_d K_p with diagonal factors.
        assert!((g.robot_damping() - g.robot_inertia * Matrix6::from_diagonal(&kg)).norm() == 0.0);
        assert!(
            (g.robot_stiffness() - g.robot_inertia * Matrix6::from_diagonal(&kp)).norm() == 0.0
        );
    }

    #[test]
    fn y_cmd_examples() {
        let g = test_gains();
        assert_eq!(
            y_cmd(&Vector6::zeros(), &Vector6::zeros(), &Vector6::zeros(), &g),
            Vector6::zeros()
        );
        // Unit pose error on x with M = I, K = 4I and no damping term.
        let mut e = Vector6::zeros();
        e[0] = 1.0;
        let y = y_cmd(&Vector6::zeros(), &Vector6::zeros(), &e, &g);
        assert_abs_diff_eq!(y[0], -4.0, epsilon = 1e-14);
        for j in 1..6 {
            assert_abs_diff_eq!(y[j], 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn y_cmd_matches_reevaluation() {
        let g = test_gains();
        let a = Vector6::new(0.1, -0.2, 0.3, 0.0, 0.05, -0.1);
        let tv = Vector6::new(0.2, 0.1, -0.3, 0.02, 0.0, 0.1);
        let pe = Vector6::new(-0.1, 0.4, 0.2, 0.01, -0.03, 0.0);
        let y = y_cmd(&a, &tv, &pe, &g);
        let manual = a
            + g.object_inertia.try_inverse().unwrap()
                * (-(g.object_damping * tv) - g.object_stiffness * pe);
        assert!((y - manual).norm() < 1e-13);
    }

    #[test]
    fn desired_wrench_at_rest_reference_is_internal_only() {
        let g = test_gains();
        let grasp = Grasp::new(Vector3::new(0.5, 0.2, 0.0));
        let share = ObjectShare {
            mass: Matrix6::identity() * 0.25,
            bias: Vector6::zeros(),
        };
        let w = desired_wrench(&share, &Vector6::zeros(), &Wrench6::zero(), &grasp, &g).unwrap();
        assert_eq!(w.to_vector(), Vector6::zeros());
    }

    #[test]
    fn desired_wrench_maps_share_through_inverse_transpose() {
        let g = test_gains();
        let grasp = Grasp::new(Vector3::new(0.4, -0.1, 0.3));
        let share = ObjectShare {
            mass: Matrix6::identity() * 0.25,
            bias: Vector6::new(1.0, 0.0, -2.0, 0.1, 0.0, 0.4),
        };
        let y = Vector6::new(0.3, 0.2, 0.0, 0.0, -0.1, 0.05);
        let le = Wrench6::new(Vector3::new(0.5, 0.0, 0.0), Vector3::zeros());
        let w = desired_wrench(&share, &y, &le, &grasp, &g).unwrap();
        let object_side = share.mass * y + share.bias - le.to_vector();
        let expected = -(grasp.jac_inv_t * object_side);
        assert!((w.to_vector() - expected).norm() < 1e-13);
        // Aggregated back through J^T this is exactly the share the object
        // sees (negated).
        let back = grasp.jac_t * w.to_vector();
        assert!((back + object_side).norm() < 1e-12);
    }

    #[test]
    fn force_filter_zero_input_stays_zero() {
        let g = test_gains();
        let grasp = Grasp::new(Vector3::zeros());
        let mut state = ControllerState::new(Theta::zeros(), DisturbanceTheta::zeros());
        for _ in 0..50 {
            let rate = force_filter_step(&mut state, &Wrench6::zero(), &grasp, &g, 0.1);
            assert_eq!(state.force_filter, Vector6::zeros());
            assert_eq!(rate, Vector6::zeros());
        }
    }

    #[test]
    fn force_filter_constant_input_settles_to_dc_gain() {
        // f -> Y^{-1} K_f J^T w within 2% after 4 / min(Y).
        let g = test_gains();
        let grasp = Grasp::new(Vector3::new(0.3, 0.0, -0.2));
        let mut state = ControllerState::new(Theta::zeros(), DisturbanceTheta::zeros());
        let w = Wrench6::new(Vector3::new(2.0, -1.0, 0.5), Vector3::new(0.2, 0.0, -0.1));
        let dt = 0.01;
        let steps = (4.0_f64 / 1.5 / dt).ceil() as usize;
        for _ in 0..=steps {
            force_filter_step(&mut state, &w, &grasp, &g, dt);
        }
        let target = Vector6::from_fn(|j, _| 1.0 / g.y_gain[j])
            .component_mul(&(g.force_gain() * (grasp.jac_t * w.to_vector())));
        assert!(
            (state.force_filter - target).norm() < 0.02 * target.norm(),
            "filter at {:?} vs {:?}",
            state.force_filter,
            target
        );
    }

    #[test]
    fn force_filter_doubling_y_halves_settling() {
        let settle = |y: f64| -> f64 {
            let mut g = test_gains();
            g.y_gain = Vector6::repeat(y);
            let grasp = Grasp::new(Vector3::zeros());
            let mut state = ControllerState::new(Theta::zeros(), DisturbanceTheta::zeros());
            let w = Wrench6::new(Vector3::new(1.0, 0.0, 0.0), Vector3::zeros());
            let dt = 0.002;
            let dc = (g.force_gain() * w.to_vector())[0] / y;
            let mut t = 0.0;
            loop {
                force_filter_step(&mut state, &w, &grasp, &g, dt);
                t += dt;
                if state.force_filter[0] >= 0.632 * dc {
                    return t;
                }
            }
        };
        let ratio = settle(1.0) / settle(2.0);
        assert!((ratio - 2.0).abs() < 0.2, "settling ratio {ratio}");
    }

    #[test]
    fn auxiliary_z_examples() {
        let g = test_gains();
        assert_eq!(
            auxiliary_z(&Vector6::zeros(), &Vector6::zeros(), &Vector6::zeros(), &g),
            Vector6::zeros()
        );
        // vtilde = f with zero pose error cancels.
        let f = Vector6::new(0.3, -0.1, 0.2, 0.0, 0.1, 0.0);
        assert_eq!(auxiliary_z(&f, &Vector6::zeros(), &f, &g), Vector6::zeros());
    }

    #[test]
    fn auxiliary_z_equals_velocity_minus_reference() {
        let g = test_gains();
        let twist_err = Vector6::new(0.2, -0.3, 0.1, 0.05, 0.0, -0.1);
        let pose_err = Vector6::new(0.1, 0.2, -0.4, 0.0, 0.02, 0.03);
        let f = Vector6::new(-0.05, 0.1, 0.0, 0.01, 0.0, 0.02);
        let twist_des = Vector6::new(1.0, 0.5, -0.2, 0.1, 0.0, 0.3);
        let twist = twist_des + twist_err;

        let z = auxiliary_z(&twist_err, &pose_err, &f, &g);
        let (v_ref, _) = reference_velocity(
            &twist_des,
            &Vector6::zeros(),
            &pose_err,
            &Vector6::zeros(),
            &f,
            &Vector6::zeros(),
            &g,
        );
        assert!((z - (twist - v_ref)).norm() < 1e-12);
    }

    #[test]
    fn reference_velocity_trivial_cases() {
        let g = test_gains();
        let twist_des = Vector6::new(0.4, 0.0, -0.1, 0.0, 0.2, 0.0);
        let accel_des = Vector6::new(0.1, 0.0, 0.0, 0.0, 0.0, 0.05);
        let (v_ref, v_ref_dot) = reference_velocity(
            &twist_des,
            &accel_des,
            &Vector6::zeros(),
            &Vector6::zeros(),
            &Vector6::zeros(),
            &Vector6::zeros(),
            &g,
        );
        assert_eq!(v_ref, twist_des);
        assert_eq!(v_ref_dot, accel_des);

        // Static frames: error rate zero, so vdot_ref = vdot_d + fdot.
        let fdot = Vector6::new(0.02, 0.0, 0.0, 0.0, 0.01, 0.0);
        let (_, v_ref_dot) = reference_velocity(
            &twist_des,
            &accel_des,
            &Vector6::zeros(),
            &Vector6::zeros(),
            &Vector6::zeros(),
            &fdot,
            &g,
        );
        assert_eq!(v_ref_dot, accel_des + fdot);
    }

    #[test]
    fn control_input_reduces_to_wrench_cancellation() {
        let g = test_gains();
        let grasp = Grasp::new(Vector3::new(0.2, 0.1, 0.0));
        let state = ControllerState::new(Theta::zeros(), DisturbanceTheta::zeros());
        let lambda = Wrench6::new(Vector3::new(1.0, -2.0, 0.5), Vector3::new(0.1, 0.0, 0.2));
        let u = control_input(
            &lambda,
            &RegressorMatrix::zeros(),
            &DisturbanceRegressor::zeros(),
            &state,
            &Vector6::zeros(),
            &g,
            &grasp,
        )
        .unwrap();
        assert_eq!(u.to_vector(), -lambda.to_vector());
    }

    #[test]
    fn adapt_step_examples() {
        let g = test_gains();
        let mut state = ControllerState::new(Theta::zeros(), DisturbanceTheta::zeros());

        // z = 0 leaves parameters unchanged.
        adapt_step(
            &mut state,
            &RegressorMatrix::from_fn(|_, _| 1.0),
            &DisturbanceRegressor::from_fn(|_, _| 1.0),
            &Vector6::zeros(),
            &g,
            0.1,
        );
        assert_eq!(state.theta_hat, Theta::zeros());
        assert_eq!(state.theta_d_hat, DisturbanceTheta::zeros());

        // One Euler step: delta theta = -dt * Gamma * Omega^T z exactly.
        let omega = RegressorMatrix::from_fn(|i, j| ((i + 2 * j) % 5) as f64 * 0.1);
        let delta = DisturbanceRegressor::from_fn(|i, j| ((i + j) % 3) as f64 * 0.2);
        let z = Vector6::new(0.1, -0.2, 0.3, 0.0, 0.05, -0.1);
        adapt_step(&mut state, &omega, &delta, &z, &g, 0.1);
        let expected = -(omega.transpose() * z) * 0.1 * 0.01;
        assert!((state.theta_hat - expected).norm() < 1e-15);
        let expected_d = -(delta.transpose() * z) * 0.1 * 0.02;
        assert!((state.theta_d_hat - expected_d).norm() < 1e-15);
    }

    #[test]
    fn adapt_projection_clamps() {
        let mut g = test_gains();
        g.adapt_projection = Some((-0.5, 0.5));
        let mut state = ControllerState::new(Theta::repeat(0.49), DisturbanceTheta::zeros());
        let omega = RegressorMatrix::from_fn(|_, _| -1.0);
        let z = Vector6::repeat(1.0);
        adapt_step(&mut state, &omega, &DisturbanceRegressor::zeros(), &z, &g, 10.0);
        assert!(state.theta_hat.iter().all(|&x| x <= 0.5));
    }

    #[test]
    fn lyapunov_is_zero_at_zero_errors_and_nonnegative() {
        let g = test_gains();
        assert_eq!(
            lyapunov_term(
                &Vector6::zeros(),
                &Matrix6::identity(),
                &Theta::zeros(),
                &DisturbanceTheta::zeros(),
                &g
            ),
            0.0
        );
        let v = lyapunov_term(
            &Vector6::new(0.1, -0.2, 0.0, 0.3, 0.0, 0.1),
            &(Matrix6::identity() * 5.0),
            &Theta::repeat(0.3),
            &DisturbanceTheta::repeat(-0.2),
            &g,
        );
        assert!(v > 0.0);
    }

    #[test]
    fn impedance_error_zero_under_perfect_tracking() {
        // If the desired wrench is exactly realized and the impedance target
        // holds, w vanishes: construct the consistent lambda_d.
        let g = test_gains();
        let grasp = Grasp::new(Vector3::new(0.3, -0.2, 0.1));
        let accel_err = Vector6::new(0.05, -0.1, 0.0, 0.02, 0.0, 0.01);
        let twist_err = Vector6::new(0.1, 0.0, -0.2, 0.0, 0.03, 0.0);
        let pose_err = Vector6::new(-0.2, 0.1, 0.0, 0.01, 0.0, 0.02);
        let target = g.robot_inertia * accel_err
            + g.robot_damping() * twist_err
            + g.robot_stiffness() * pose_err;
        let lambda_d = Wrench6::from_vector(&(grasp.jac_inv_t * target));
        let w = impedance_error(&accel_err, &twist_err, &pose_err, &lambda_d, &grasp, &g);
        assert!(w.norm() < 1e-13);
    }
}

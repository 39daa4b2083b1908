//! Distributed momentum-based estimation of each robot's share of the
//! unknown external wrench acting on the object.
//!
//! Each robot runs one first-order filter on its share of the object
//! momentum. The filter state tracks the load-share fraction of the total
//! external wrench driving the object; subtracting the robot's own applied
//! wrench leaves its share of the unmeasured disturbance. No quantity from
//! any other robot enters the update.

use nalgebra::{Matrix6, Vector6};

use crate::se3::{Grasp, Twist6, Wrench6};

/// Filter state of one robot's wrench observer.
#[derive(Debug, Clone)]
pub struct ObserverState {
    /// Filter output.
    pub zeta: Vector6<f64>,
    /// Running integral of the momentum-balance residual.
    pub integral_acc: Vector6<f64>,
    /// SPD filter gain; its inverse sets the time constants.
    pub k_mu: Matrix6<f64>,
    /// Load-share coefficient in (0, 1).
    pub load_share: f64,
    prev_bias: Option<Vector6<f64>>,
}

/// Object equivalent momentum share: `mu = M_share * v`.
pub fn object_momentum(v: &Twist6, mass_share: &Matrix6<f64>) -> Vector6<f64> {
    mass_share * v.to_vector()
}

impl ObserverState {
    pub fn new(k_mu: Matrix6<f64>, load_share: f64) -> Self {
        ObserverState {
            zeta: Vector6::zeros(),
            integral_acc: Vector6::zeros(),
            k_mu,
            load_share,
            prev_bias: None,
        }
    }

    /// Advances the filter by one control period with the trapezoidal rule.
    ///
    /// `momentum` is the robot's momentum share at the new instant and
    /// `bias` the share-scaled object bias force `c_i (C v + D v + g)` at the
    /// same instant. The first call anchors the integral so the output
    /// starts at zero instead of jumping to the initial momentum.
    ///
    /// The implicit trapezoidal update solves
    /// `(I + dt/2 K) zeta_n = K (mu_n + I_{n-1} + dt/2 (s_{n-1} + bias_n))`
    /// with `s = bias - zeta`, and is stable for any SPD gain.
    pub fn step(&mut self, momentum: &Vector6<f64>, bias: &Vector6<f64>, dt: f64) {
        assert!(dt > 0.0);
        match self.prev_bias {
            None => {
                self.integral_acc = -momentum;
                self.zeta = Vector6::zeros();
            }
            Some(prev_bias) => {
                let half = dt / 2.0;
                let s_prev = prev_bias - self.zeta;
                let rhs = self.k_mu * (momentum + self.integral_acc + (s_prev + bias) * half);
                let lhs = Matrix6::identity() + self.k_mu * half;
                let zeta_new = lhs
                    .lu()
                    .solve(&rhs)
                    .expect("I + dt/2 K is invertible for SPD gains");
                self.integral_acc += (s_prev + (bias - zeta_new)) * half;
                self.zeta = zeta_new;
            }
        }
        self.prev_bias = Some(*bias);
    }

    /// Estimate of this robot's share of the external disturbance wrench.
    ///
    /// `applied` is the wrench the robot applies to the object at its
    /// end-effector (the negated force/torque sensor reading):
    /// `lambda_hat = zeta - J^T applied`.
    pub fn disturbance_estimate(&self, applied: &Wrench6, grasp: &Grasp) -> Wrench6 {
        Wrench6::from_vector(&(self.zeta - grasp.jac_t * applied.to_vector()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn momentum_examples() {
        assert_eq!(
            object_momentum(&Twist6::zero(), &(Matrix6::identity() * 25.0)),
            Vector6::zeros()
        );
        // M = 100 I scaled by c = 0.25, unit surge velocity.
        let m_share = Matrix6::identity() * 100.0 * 0.25;
        let v = Twist6::new(Vector3::new(1.0, 0.0, 0.0), Vector3::zeros());
        let mu = object_momentum(&v, &m_share);
        assert_eq!(mu, Vector6::new(25.0, 0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn momentum_matches_dense_product() {
        let m = Matrix6::from_fn(|i, j| (i * 6 + j) as f64 * 0.1 + 1.0);
        let v = Twist6::new(Vector3::new(0.3, -0.2, 0.5), Vector3::new(0.1, 0.7, -0.4));
        let mu = object_momentum(&v, &m);
        assert!((mu - m * v.to_vector()).norm() < 1e-14);
    }

    #[test]
    fn rest_state_keeps_zero_output() {
        let mut obs = ObserverState::new(Matrix6::identity() * 2.0, 0.25);
        for _ in 0..100 {
            obs.step(&Vector6::zeros(), &Vector6::zeros(), 0.1);
        }
        assert_eq!(obs.zeta, Vector6::zeros());
    }

    #[test]
    fn output_starts_at_zero_even_in_motion() {
        let mut obs = ObserverState::new(Matrix6::identity() * 2.0, 0.25);
        let mu = Vector6::new(12.0, -3.0, 0.5, 0.0, 1.0, 0.0);
        obs.step(&mu, &Vector6::zeros(), 0.1);
        assert_eq!(obs.zeta, Vector6::zeros());
    }

    #[test]
    fn constant_wrench_first_order_response() {
        // Static analysis: object towed at terminal velocity so the bias
        // force equals the share of the constant driving wrench. The output
        // must follow the first-order response c*w*(1 - exp(-k t)) and land
        // within 2% after four time constants.
        let k = 2.0;
        let c = 0.25;
        let w = Vector6::new(8.0, -4.0, 2.0, 1.0, 0.5, -0.25);
        let dt = 0.01;
        let mut obs = ObserverState::new(Matrix6::identity() * k, c);
        let mu = Vector6::zeros();
        let bias = w * c;
        let four_tau = 4.0 / k;
        let steps = (four_tau / dt).round() as usize;
        obs.step(&mu, &bias, dt);
        for n in 1..=steps {
            obs.step(&mu, &bias, dt);
            let t = n as f64 * dt;
            let expected = bias * (1.0 - (-k * t).exp());
            assert!(
                (obs.zeta - expected).norm() < 2e-4 * bias.norm() + 1e-12,
                "trapezoidal response drifted from the closed form at t = {t}"
            );
        }
        let target = bias;
        assert!((obs.zeta - target).norm() < 0.02 * target.norm());
    }

    #[test]
    fn doubling_gain_halves_rise_time() {
        let rise_time = |k: f64| -> f64 {
            let dt = 0.005;
            let mut obs = ObserverState::new(Matrix6::identity() * k, 1.0);
            let bias = Vector6::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            obs.step(&Vector6::zeros(), &bias, dt);
            let mut t = 0.0;
            while obs.zeta[0] < 0.632 {
                obs.step(&Vector6::zeros(), &bias, dt);
                t += dt;
            }
            t
        };
        let t1 = rise_time(2.0);
        let t2 = rise_time(4.0);
        let ratio = t1 / t2;
        assert!((ratio - 2.0).abs() < 0.2, "rise-time ratio {ratio}");
    }

    #[test]
    fn estimate_subtracts_applied_wrench() {
        let grasp = Grasp::new(Vector3::new(0.5, -0.2, 0.1));
        let mut obs = ObserverState::new(Matrix6::identity() * 2.0, 0.25);
        obs.zeta = Vector6::new(1.0, 2.0, 3.0, 0.1, 0.2, 0.3);
        let applied = Wrench6::new(Vector3::new(2.0, 0.0, -1.0), Vector3::new(0.0, 0.5, 0.0));
        let est = obs.disturbance_estimate(&applied, &grasp);
        let expected = obs.zeta - grasp.jac_t * applied.to_vector();
        assert!((est.to_vector() - expected).norm() < 1e-15);
    }

    #[test]
    fn sinusoid_attenuation_matches_first_order_lag() {
        // Drive with a sinusoidal bias at the sea-current frequency; the
        // steady output amplitude must match |H| = k/sqrt(k^2 + omega^2).
        let k = 20.0;
        let omega = std::f64::consts::PI / 15.0;
        let dt = 0.01;
        let mut obs = ObserverState::new(Matrix6::identity() * k, 1.0);
        let amp = 5.0;
        let mut peak: f64 = 0.0;
        let steps = (300.0 / dt) as usize;
        for n in 0..steps {
            let t = n as f64 * dt;
            let mut bias = Vector6::zeros();
            bias[0] = amp * (omega * t).sin();
            obs.step(&Vector6::zeros(), &bias, dt);
            if t > 150.0 {
                peak = peak.max(obs.zeta[0].abs());
            }
        }
        let h = k / (k * k + omega * omega).sqrt();
        assert!(
            (peak - amp * h).abs() < 0.01 * amp,
            "peak {peak} vs expected {}",
            amp * h
        );
    }

    #[test]
    fn bounded_input_bounded_output_over_many_steps() {
        let mut obs = ObserverState::new(Matrix6::identity() * 2.0, 0.25);
        let bound = 10.0;
        for n in 0..100_000 {
            let t = n as f64 * 0.01;
            let bias = Vector6::from_fn(|j, _| bound * (t * (j as f64 + 1.0)).sin());
            let mu = Vector6::from_fn(|j, _| 0.5 * (t + j as f64).cos());
            obs.step(&mu, &bias, 0.01);
            assert!(obs.zeta.norm().is_finite());
            // DC gain is one; sinusoids only shrink through the lag, and the
            // momentum term contributes at most k * |mu| on top.
            assert!(obs.zeta.norm() < 2.0 * bound * 6.0);
        }
    }
}

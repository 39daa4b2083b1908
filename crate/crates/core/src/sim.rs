//! Deterministic closed-loop engine: couples the N+1 controllers, the rigid
//! grasp, the object and robot dynamics and the disturbances.
//!
//! The rigid assembly is simulated in object coordinates, one 6-DoF
//! generalized coordinate, which satisfies the grasp constraint exactly; the
//! interaction wrenches are recovered afterwards by back-substituting the
//! object acceleration into each robot's own dynamics. Control runs at the
//! control period with zero-order hold; the plant is integrated with
//! classical fixed-step RK4 over `substeps` sub-intervals.
//!
//! Update order within one control period is fixed for determinism:
//! followers in index order, then the leader, then the plant.

use nalgebra::{SVector, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::controller::{
    adapt_step, auxiliary_z, control_input, desired_wrench, force_filter_step, lyapunov_term,
    reference_velocity, y_cmd, ControllerState, ObjectShare,
};
use crate::dynamics::{body_terms, robot_object_frame_terms, Regressor};
use crate::error::SimError;
use crate::estimator::EstimatorState;
use crate::log::{RobotStep, SimLog, StepRecord};
use crate::nav::{beta, gamma, nav_potential, propagate_desired_trajectory, DesiredTrajectory};
use crate::observer::{object_momentum, ObserverState};
use crate::scenario::{Scenario, ScenarioConfig};
use crate::se3::{pose_error, pose_error_rate, pose_rate, Pose6, Twist6, Wrench6};

/// Mutable per-robot runtime: controller, observer and (followers only) the
/// trajectory estimator.
#[derive(Debug, Clone)]
pub struct RobotRuntime {
    pub controller: ControllerState,
    pub observer: ObserverState,
    pub estimator: Option<EstimatorState>,
}

/// Full closed-loop state between control periods.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub step_index: usize,
    pub object_pose: Pose6,
    pub object_twist: Twist6,
    /// Object acceleration at the current instant (previous period's hold).
    pub object_accel: Vector6<f64>,
    /// Constraint wrench each robot's sensor reads at the current instant.
    pub lambda_true: Vec<Wrench6>,
    /// Same, with optional measurement noise; what controllers consume.
    pub lambda_meas: Vec<Wrench6>,
    pub robots: Vec<RobotRuntime>,
}

/// Instantaneous coupled dynamics: solves the object-coordinate force
/// balance for the acceleration and back-substitutes it into each robot's
/// dynamics to recover the interaction wrenches.
///
/// Returns the object acceleration and the wrench the object exerts on each
/// robot (the sensor-side sign).
pub fn coupled_accel(
    scenario: &Scenario,
    pose: &Pose6,
    twist: &Twist6,
    inputs: &[Vector6<f64>],
    t: f64,
) -> Result<(Vector6<f64>, Vec<Wrench6>), SimError> {
    let rot = pose.rotation();
    let v = twist.to_vector();
    let object = body_terms(&rot, &v, &scenario.object_hydro);

    let mut total_mass = object.mass;
    let mut rhs = scenario.disturbance.lambda_e(t)
        - object.coriolis * v
        - object.drag * v
        - object.restoring;

    let zero_jdot = nalgebra::Matrix6::zeros();
    let mut robot_terms = Vec::with_capacity(scenario.robots.len());
    for (i, r) in scenario.robots.iter().enumerate() {
        let terms = robot_object_frame_terms(&rot, &v, &r.grasp, &zero_jdot, &r.hydro)?;
        let d_i = scenario.disturbance.regressor(&r.grasp, t) * r.theta_d_true;
        total_mass += terms.mass;
        rhs += r.grasp.jac_t * inputs[i] - terms.bias_force(&v) - d_i;
        robot_terms.push((terms, d_i));
    }

    let accel = total_mass
        .cholesky()
        .ok_or(SimError::SingularMass)?
        .solve(&rhs);

    let mut wrenches = Vec::with_capacity(scenario.robots.len());
    for (i, r) in scenario.robots.iter().enumerate() {
        let (terms, d_i) = &robot_terms[i];
        // J^T lambda_i = M_i vdot + C_i v + D_i v + g_i + d_i - J^T u_i
        let jt_lambda =
            terms.mass * accel + terms.bias_force(&v) + d_i - r.grasp.jac_t * inputs[i];
        wrenches.push(Wrench6::from_vector(&(r.grasp.jac_inv_t * jt_lambda)));
    }
    Ok((accel, wrenches))
}

fn check_finite(label: &str, v: &Vector6<f64>, t: f64) -> Result<(), SimError> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(SimError::non_finite(label, t));
    }
    Ok(())
}

/// A scenario bound to its leader trajectory and runtime state.
pub struct Simulation {
    pub scenario: Scenario,
    pub leader_trajectory: DesiredTrajectory,
    pub state: SimState,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        let leader_trajectory = propagate_desired_trajectory(
            &scenario.initial_pose,
            &scenario.world,
            &scenario.nav,
            scenario.dt_control,
            scenario.duration,
        )?;

        let robots = scenario
            .robots
            .iter()
            .enumerate()
            .map(|(i, r)| RobotRuntime {
                controller: ControllerState::new(r.theta_hat0, r.theta_d_hat0),
                observer: ObserverState::new(scenario.observer_gain, r.load_share),
                estimator: (i != 0).then(|| {
                    EstimatorState::new(
                        i,
                        &scenario.initial_pose,
                        scenario.estimator.gains,
                        scenario.estimator.rho_inf,
                        scenario.estimator.decay_rate,
                        scenario.estimator.rho0_floor,
                    )
                }),
            })
            .collect();

        // Sensors read the pre-control constraint load at t = 0.
        let zero_inputs = vec![Vector6::zeros(); scenario.robots.len()];
        let (accel0, lambda0) = coupled_accel(
            &scenario,
            &scenario.initial_pose,
            &scenario.initial_twist,
            &zero_inputs,
            0.0,
        )?;

        let noise = (scenario.lambda_noise_std > 0.0)
            .then(|| Normal::new(0.0, scenario.lambda_noise_std).unwrap());
        let mut sim = Simulation {
            rng: ChaCha8Rng::seed_from_u64(scenario.rng_seed),
            state: SimState {
                t: 0.0,
                step_index: 0,
                object_pose: scenario.initial_pose,
                object_twist: scenario.initial_twist,
                object_accel: accel0,
                lambda_true: lambda0.clone(),
                lambda_meas: lambda0,
                robots,
            },
            scenario,
            leader_trajectory,
            noise,
        };
        sim.state.lambda_meas = sim.measure(&sim.state.lambda_true.clone());
        Ok(sim)
    }

    fn measure(&mut self, lambda: &[Wrench6]) -> Vec<Wrench6> {
        match self.noise {
            None => lambda.to_vec(),
            Some(normal) => lambda
                .iter()
                .map(|w| {
                    let mut v = w.to_vector();
                    for j in 0..6 {
                        v[j] += normal.sample(&mut self.rng);
                    }
                    Wrench6::from_vector(&v)
                })
                .collect(),
        }
    }

    /// Runs one control period and returns the record of everything that
    /// happened at its start instant.
    pub fn step(&mut self) -> Result<StepRecord, SimError> {
        let t = self.state.t;
        let dt = self.scenario.dt_control;
        let pose = self.state.object_pose;
        let twist = self.state.object_twist;
        let rot = pose.rotation();
        let v = twist.to_vector();

        check_finite("object_twist", &v, t)?;
        check_finite("object_pose", &pose.to_vector(), t)?;

        // Object terms shared by every robot's controller (the object model
        // is part of the static configuration every robot carries).
        let object = body_terms(&rot, &v, &self.scenario.object_hydro);
        let object_bias = object.coriolis * v + object.drag * v + object.restoring;

        let n = self.scenario.robots.len();
        let mut robot_steps: Vec<Option<RobotStep>> = vec![None; n];
        let mut inputs = vec![Vector6::zeros(); n];
        let mut lyapunov = 0.0;

        // Followers in index order, then the leader.
        let order = (1..n).chain(std::iter::once(0));
        for i in order {
            let spec = &self.scenario.robots[i];
            let lambda_meas = self.state.lambda_meas[i];

            // Reference trajectory: the leader looks up its precomputed
            // navigation series; followers estimate from observed motion.
            let (ref_pose, ref_twist, ref_accel, est_log) = if i == 0 {
                let s = self.leader_trajectory.sample(self.state.step_index);
                (s.pose, s.twist, s.accel, None)
            } else {
                let est = self.state.robots[i].estimator.as_mut().expect("follower");
                let r = est.follower_reference(&pose, &twist, dt)?;
                (r.pose, r.twist, r.accel, Some((r.error, r.rho, r.pose)))
            };

            let pose_err = pose_error(&pose, &ref_pose);
            let twist_err = v - ref_twist.to_vector();
            let pose_err_rate = pose_error_rate(&pose, &twist, &ref_pose, &ref_twist);

            // Observer update and local disturbance-share estimate.
            let share_mass = object.mass * spec.load_share;
            let mu = object_momentum(&twist, &share_mass);
            let bias_share = object_bias * spec.load_share;
            let runtime = &mut self.state.robots[i];
            runtime.observer.step(&mu, &bias_share, dt);
            let applied = Wrench6::from_vector(&(-lambda_meas.to_vector()));
            let lambda_e_hat = runtime.observer.disturbance_estimate(&applied, &spec.grasp);

            // Impedance law.
            let y = y_cmd(&ref_accel, &twist_err, &pose_err, &spec.gains);
            let share = ObjectShare {
                mass: share_mass,
                bias: bias_share,
            };
            let lambda_d = desired_wrench(&share, &y, &lambda_e_hat, &spec.grasp, &spec.gains)?;
            let f_dot =
                force_filter_step(&mut runtime.controller, &lambda_d, &spec.grasp, &spec.gains, dt);
            let f = runtime.controller.force_filter;
            let (v_ref, v_ref_dot) = reference_velocity(
                &ref_twist.to_vector(),
                &ref_accel,
                &pose_err,
                &pose_err_rate,
                &f,
                &f_dot,
                &spec.gains,
            );
            let z = auxiliary_z(&twist_err, &pose_err, &f, &spec.gains);
            debug_assert!((z - (v - v_ref)).norm() < 1e-9);

            let omega = Regressor::for_grasp(spec.grasp).eval(&rot, &v, &v_ref, &v_ref_dot);
            let delta = self.scenario.disturbance.regressor(&spec.grasp, t);
            let u = control_input(
                &lambda_meas,
                &omega,
                &delta,
                &runtime.controller,
                &z,
                &spec.gains,
                &spec.grasp,
            )?;
            check_finite(&format!("u[{i}]"), &u.to_vector(), t)?;

            // Lyapunov contribution with the pre-adaptation estimates.
            let mass_i = spec.grasp.jac_t * spec.hydro.mass_matrix * spec.grasp.jac;
            let theta_err = runtime.controller.theta_hat - spec.theta_true;
            let theta_d_err = runtime.controller.theta_d_hat - spec.theta_d_true;
            lyapunov += lyapunov_term(&z, &mass_i, &theta_err, &theta_d_err, &spec.gains);

            adapt_step(&mut runtime.controller, &omega, &delta, &z, &spec.gains, dt);

            inputs[i] = u.to_vector();
            robot_steps[i] = Some(RobotStep {
                u: u.to_vector(),
                lambda: self.state.lambda_true[i].to_vector(),
                lambda_d: lambda_d.to_vector(),
                z,
                theta_err_norm: theta_err.norm(),
                theta_d_err_norm: theta_d_err.norm(),
                zeta: runtime.observer.zeta,
                lambda_e_hat: lambda_e_hat.to_vector(),
                est_error: est_log.map(|(e, _, _)| e),
                est_rho: est_log.map(|(_, r, _)| r),
                est_pose: est_log.map(|(_, _, p)| p.to_vector()),
            });
        }

        let leader_sample = self.leader_trajectory.sample(self.state.step_index);
        let record = StepRecord {
            t,
            object_pose: pose.to_vector(),
            object_twist: v,
            object_accel: self.state.object_accel,
            desired_pose: leader_sample.pose.to_vector(),
            desired_twist: leader_sample.twist.to_vector(),
            lyapunov,
            potential: nav_potential(&pose, &self.scenario.world, &self.scenario.nav),
            gamma: gamma(&pose, &self.scenario.nav.goal),
            min_beta: beta(&pose, &self.scenario.world),
            min_clearance: self.scenario.world.clearance(&pose.position),
            lambda_e_true: self.scenario.disturbance.lambda_e(t),
            robots: robot_steps.into_iter().map(|r| r.expect("all updated")).collect(),
        };

        self.integrate_plant(&inputs)?;
        Ok(record)
    }

    /// Fixed-step RK4 over the control period with the inputs held.
    fn integrate_plant(&mut self, inputs: &[Vector6<f64>]) -> Result<(), SimError> {
        let dt = self.scenario.dt_control;
        let h = dt / self.scenario.substeps as f64;
        let mut y: SVector<f64, 12> = SVector::zeros();
        y.fixed_rows_mut::<6>(0)
            .copy_from(&self.state.object_pose.to_vector());
        y.fixed_rows_mut::<6>(6)
            .copy_from(&self.state.object_twist.to_vector());

        let deriv = |y: &SVector<f64, 12>, t: f64| -> Result<SVector<f64, 12>, SimError> {
            let pose = Pose6::from_vector(&y.fixed_rows::<6>(0).into());
            let twist = Twist6::from_vector(&y.fixed_rows::<6>(6).into());
            let xdot = pose_rate(&pose, &twist)?;
            let (vdot, _) = coupled_accel(&self.scenario, &pose, &twist, inputs, t)?;
            let mut dy = SVector::<f64, 12>::zeros();
            dy.fixed_rows_mut::<6>(0).copy_from(&xdot);
            dy.fixed_rows_mut::<6>(6).copy_from(&vdot);
            Ok(dy)
        };

        let t0 = self.state.t;
        for s in 0..self.scenario.substeps {
            let ts = t0 + s as f64 * h;
            let k1 = deriv(&y, ts)?;
            let k2 = deriv(&(y + k1 * (h / 2.0)), ts + h / 2.0)?;
            let k3 = deriv(&(y + k2 * (h / 2.0)), ts + h / 2.0)?;
            let k4 = deriv(&(y + k3 * h), ts + h)?;
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }

        self.state.step_index += 1;
        self.state.t = self.state.step_index as f64 * dt;
        self.state.object_pose = Pose6::from_vector(&y.fixed_rows::<6>(0).into());
        self.state.object_twist = Twist6::from_vector(&y.fixed_rows::<6>(6).into());
        check_finite(
            "object_pose",
            &self.state.object_pose.to_vector(),
            self.state.t,
        )?;
        check_finite(
            "object_twist",
            &self.state.object_twist.to_vector(),
            self.state.t,
        )?;

        // Sensor causality: controllers at the next instant read the
        // constraint wrench of the state they find themselves in, still
        // under the held inputs.
        let (accel, lambda) = coupled_accel(
            &self.scenario,
            &self.state.object_pose,
            &self.state.object_twist,
            inputs,
            self.state.t,
        )?;
        self.state.object_accel = accel;
        self.state.lambda_meas = self.measure(&lambda);
        self.state.lambda_true = lambda;
        Ok(())
    }
}

/// Validates, builds and runs a scenario to completion.
pub fn run_scenario(config: &ScenarioConfig) -> Result<SimLog, SimError> {
    let scenario = config.build()?;
    let steps = (scenario.duration / scenario.dt_control).round() as usize;
    let mut sim = Simulation::new(scenario)?;
    let mut log = SimLog::new(&sim.scenario);
    for _ in 0..steps {
        let record = sim.step()?;
        log.push(record);
    }
    log.finish(&sim.state.object_pose, &sim.state.object_twist);
    Ok(log)
}

//! Scenario configuration: JSON schema, validation and conversion into the
//! runtime types used by the engine.
//!
//! All physical quantities are SI; matrices are row-major lists or, for the
//! common diagonal case, `{"diagonal": [..6 entries..]}`. Validation checks
//! every invariant and reports the full list of violations instead of
//! stopping at the first.

use std::fmt;

use nalgebra::{Matrix6, Vector2, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::controller::ImpedanceGains;
use crate::dynamics::{
    is_spd, DisturbanceModel, DisturbanceTheta, HydroParams, Theta, DISTURBANCE_DIM, THETA_DIM,
};
use crate::error::SimError;
use crate::nav::{beta, NavParams, Obstacle, SphereWorld};
use crate::se3::{Grasp, Pose6, Twist6, Wrench6, SINGULARITY_MARGIN};

/// Outcome of config validation: every violation found, not just the first.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            write!(f, "valid")
        } else {
            for v in &self.violations {
                writeln!(f, "- {v}")?;
            }
            Ok(())
        }
    }
}

/// A 6x6 matrix given as a scalar multiple of the identity, by its diagonal,
/// or in full (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Uniform(f64),
    Diagonal { diagonal: [f64; 6] },
    Full { rows: [[f64; 6]; 6] },
}

impl MatrixSpec {
    pub fn diagonal(d: [f64; 6]) -> Self {
        MatrixSpec::Diagonal { diagonal: d }
    }

    pub fn to_matrix(&self) -> Matrix6<f64> {
        match self {
            MatrixSpec::Uniform(u) => Matrix6::identity() * *u,
            MatrixSpec::Diagonal { diagonal } => {
                Matrix6::from_diagonal(&Vector6::from_row_slice(diagonal))
            }
            MatrixSpec::Full { rows } => Matrix6::from_fn(|i, j| rows[i][j]),
        }
    }
}

/// A per-component gain vector given as one scalar or the full list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    Uniform(f64),
    PerComponent(Vec<f64>),
}

impl GainSpec {
    fn to_vec(&self, len: usize, label: &str, violations: &mut Vec<String>) -> Vec<f64> {
        match self {
            GainSpec::Uniform(g) => vec![*g; len],
            GainSpec::PerComponent(v) => {
                if v.len() != len {
                    violations.push(format!(
                        "{label}: expected {len} entries, got {}",
                        v.len()
                    ));
                    vec![v.first().copied().unwrap_or(0.0); len]
                } else {
                    v.clone()
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseConfig {
    pub position: [f64; 3],
    pub euler: [f64; 3],
}

impl PoseConfig {
    pub fn to_pose(&self) -> Pose6 {
        Pose6::new(
            Vector3::from_row_slice(&self.position),
            Vector3::from_row_slice(&self.euler),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistConfig {
    pub linear: [f64; 3],
    pub angular: [f64; 3],
}

impl TwistConfig {
    pub fn to_twist(&self) -> Twist6 {
        Twist6::new(
            Vector3::from_row_slice(&self.linear),
            Vector3::from_row_slice(&self.angular),
        )
    }
}

fn zero_twist() -> TwistConfig {
    TwistConfig {
        linear: [0.0; 3],
        angular: [0.0; 3],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroConfig {
    pub mass_matrix: MatrixSpec,
    pub drag_linear: [f64; 6],
    pub drag_quadratic: [f64; 6],
    #[serde(default = "zero6")]
    pub restoring: [f64; 6],
}

fn zero6() -> [f64; 6] {
    [0.0; 6]
}

impl HydroConfig {
    pub fn to_params(&self) -> HydroParams {
        HydroParams {
            mass_matrix: self.mass_matrix.to_matrix(),
            drag_linear: Vector6::from_row_slice(&self.drag_linear),
            drag_quadratic: Vector6::from_row_slice(&self.drag_quadratic),
            restoring: Vector6::from_row_slice(&self.restoring),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleConfig {
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub workspace_center: [f64; 3],
    pub workspace_radius: f64,
    #[serde(default)]
    pub obstacles: Vec<ObstacleConfig>,
    /// Bounding radius of one robot around its end-effector.
    pub robot_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectConfig {
    pub hydro: HydroConfig,
    pub bounding_radius: f64,
    pub initial_pose: PoseConfig,
    #[serde(default = "zero_twist")]
    pub initial_twist: TwistConfig,
    pub goal_pose: PoseConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainsConfig {
    pub object_inertia: MatrixSpec,
    pub object_damping: MatrixSpec,
    pub object_stiffness: MatrixSpec,
    pub robot_inertia: MatrixSpec,
    pub f_gain: [f64; 6],
    pub y_gain: [f64; 6],
    pub z_gain: MatrixSpec,
    pub adapt_gain: GainSpec,
    pub adapt_gain_disturbance: GainSpec,
    #[serde(default = "zero6")]
    pub internal_wrench: [f64; 6],
    #[serde(default)]
    pub adapt_projection: Option<(f64, f64)>,
}

impl GainsConfig {
    fn to_gains(&self, label: &str, violations: &mut Vec<String>) -> ImpedanceGains {
        let adapt = self.adapt_gain.to_vec(
            THETA_DIM,
            &format!("{label}.adapt_gain"),
            violations,
        );
        let adapt_d = self.adapt_gain_disturbance.to_vec(
            DISTURBANCE_DIM,
            &format!("{label}.adapt_gain_disturbance"),
            violations,
        );
        ImpedanceGains {
            object_inertia: self.object_inertia.to_matrix(),
            object_damping: self.object_damping.to_matrix(),
            object_stiffness: self.object_stiffness.to_matrix(),
            robot_inertia: self.robot_inertia.to_matrix(),
            f_gain: Vector6::from_row_slice(&self.f_gain),
            y_gain: Vector6::from_row_slice(&self.y_gain),
            z_gain: self.z_gain.to_matrix(),
            adapt_gain: Theta::from_row_slice(&adapt),
            adapt_gain_disturbance: DisturbanceTheta::from_row_slice(&adapt_d),
            desired_internal_wrench: Wrench6::from_vector(&Vector6::from_row_slice(
                &self.internal_wrench,
            )),
            adapt_projection: self.adapt_projection,
        }
    }
}

fn default_theta_like() -> Vec<f64> {
    vec![0.0; THETA_DIM]
}

fn default_disturbance_like() -> Vec<f64> {
    vec![0.0; DISTURBANCE_DIM]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotConfig {
    pub hydro: HydroConfig,
    pub grasp_offset: [f64; 3],
    pub gains: GainsConfig,
    /// Load-share coefficient; omitted means uniform `1 / (N+1)`.
    #[serde(default)]
    pub load_share: Option<f64>,
    /// True disturbance parameters of this robot.
    #[serde(default = "default_disturbance_like")]
    pub theta_d_true: Vec<f64>,
    /// Initial body-parameter estimate (defaults to zero).
    #[serde(default = "default_theta_like")]
    pub theta_hat0: Vec<f64>,
    /// Initial disturbance-parameter estimate (defaults to zero).
    #[serde(default = "default_disturbance_like")]
    pub theta_d_hat0: Vec<f64>,
}

fn default_exponent_k() -> f64 {
    2.0
}

fn default_saddle_eps() -> f64 {
    1e-6
}

fn default_saddle_window() -> f64 {
    5.0
}

fn default_goal_tol() -> f64 {
    1e-2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavConfig {
    #[serde(default = "default_exponent_k")]
    pub exponent_k: f64,
    pub gain: f64,
    #[serde(default = "default_saddle_eps")]
    pub saddle_grad_eps: f64,
    #[serde(default = "default_saddle_window")]
    pub saddle_window: f64,
    #[serde(default = "default_goal_tol")]
    pub goal_gamma_tol: f64,
}

fn default_k_mu() -> MatrixSpec {
    MatrixSpec::diagonal([2.0; 6])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverConfig {
    #[serde(default = "default_k_mu")]
    pub k_mu: MatrixSpec,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        ObserverConfig {
            k_mu: default_k_mu(),
        }
    }
}

fn default_rho0_floor() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub gains: [f64; 6],
    pub rho_inf: [f64; 6],
    pub decay_rate: f64,
    #[serde(default = "default_rho0_floor")]
    pub rho0_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceConfig {
    #[serde(default)]
    pub current_amplitude: [f64; 2],
    #[serde(default)]
    pub current_frequency: f64,
    /// True parameters of the wrench disturbing the object.
    #[serde(default = "default_disturbance_like")]
    pub theta_d: Vec<f64>,
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        DisturbanceConfig {
            current_amplitude: [0.0; 2],
            current_frequency: 0.0,
            theta_d: default_disturbance_like(),
        }
    }
}

fn default_substeps() -> u32 {
    10
}

fn default_dt() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub world: WorldConfig,
    pub object: ObjectConfig,
    pub robots: Vec<RobotConfig>,
    pub nav: NavConfig,
    #[serde(default)]
    pub observer: ObserverConfig,
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub disturbance: DisturbanceConfig,
    #[serde(default = "default_dt")]
    pub dt_control: f64,
    #[serde(default = "default_substeps")]
    pub substeps: u32,
    pub duration: f64,
    #[serde(default)]
    pub rng_seed: u64,
    /// Standard deviation of optional zero-mean Gaussian noise added to the
    /// wrench measurements fed to the controllers. Zero disables it.
    #[serde(default)]
    pub lambda_noise_std: f64,
}

/// Everything the engine needs, fully typed and validated.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub world: SphereWorld,
    pub nav: NavParams,
    pub object_hydro: HydroParams,
    pub object_radius: f64,
    pub initial_pose: Pose6,
    pub initial_twist: Twist6,
    pub goal: Pose6,
    pub robots: Vec<RobotSpec>,
    pub observer_gain: Matrix6<f64>,
    pub estimator: EstimatorParams,
    pub disturbance: DisturbanceModel,
    pub dt_control: f64,
    pub substeps: u32,
    pub duration: f64,
    pub rng_seed: u64,
    pub lambda_noise_std: f64,
}

#[derive(Debug, Clone)]
pub struct RobotSpec {
    pub hydro: HydroParams,
    pub grasp: Grasp,
    pub gains: ImpedanceGains,
    pub theta_true: Theta,
    pub theta_d_true: DisturbanceTheta,
    pub theta_hat0: Theta,
    pub theta_d_hat0: DisturbanceTheta,
    pub load_share: f64,
}

#[derive(Debug, Clone)]
pub struct EstimatorParams {
    pub gains: Vector6<f64>,
    pub rho_inf: Vector6<f64>,
    pub decay_rate: f64,
    pub rho0_floor: f64,
}

fn fixed_theta<const N: usize>(
    v: &[f64],
    label: &str,
    violations: &mut Vec<String>,
) -> nalgebra::SVector<f64, N> {
    if v.len() != N {
        violations.push(format!("{label}: expected {N} entries, got {}", v.len()));
        return nalgebra::SVector::<f64, N>::zeros();
    }
    nalgebra::SVector::<f64, N>::from_row_slice(v)
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every invariant; the report lists all violations.
    pub fn validate(&self) -> ValidationReport {
        self.build_internal().1
    }

    /// Validates and converts into the runtime scenario.
    pub fn build(&self) -> Result<Scenario, SimError> {
        let (scenario, report) = self.build_internal();
        if report.is_valid() {
            Ok(scenario)
        } else {
            Err(SimError::InvalidConfig(report))
        }
    }

    fn build_internal(&self) -> (Scenario, ValidationReport) {
        let mut violations = Vec::new();

        if !(self.dt_control > 0.0) {
            violations.push("dt_control must be positive".into());
        }
        if self.substeps == 0 {
            violations.push("substeps must be at least 1".into());
        }
        if !(self.duration >= 0.0) {
            violations.push("duration must be non-negative".into());
        }
        if self.lambda_noise_std < 0.0 {
            violations.push("lambda_noise_std must be non-negative".into());
        }

        // World geometry.
        let team_radius = self.world.robot_radius + self.object.bounding_radius;
        let world = SphereWorld {
            workspace_center: Vector3::from_row_slice(&self.world.workspace_center),
            workspace_radius: self.world.workspace_radius,
            obstacles: self
                .world
                .obstacles
                .iter()
                .map(|o| Obstacle {
                    center: Vector3::from_row_slice(&o.center),
                    radius: o.radius,
                })
                .collect(),
            team_radius,
        };
        if !(self.world.robot_radius > 0.0) || !(self.object.bounding_radius > 0.0) {
            violations.push("robot_radius and object.bounding_radius must be positive".into());
        }
        if world.workspace_radius <= team_radius {
            violations.push("workspace radius must exceed the team radius".into());
        }
        for (m, ob) in world.obstacles.iter().enumerate() {
            if !(ob.radius > 0.0) {
                violations.push(format!("obstacle {m}: radius must be positive"));
            }
            let reach = (ob.center - world.workspace_center).norm() + ob.radius;
            if reach >= world.workspace_radius {
                violations.push(format!(
                    "obstacle {m} is not strictly inside the workspace \
                     (extends to {reach:.3} m of {:.3} m)",
                    world.workspace_radius
                ));
            }
        }
        for i in 0..world.obstacles.len() {
            for j in (i + 1)..world.obstacles.len() {
                let a = &world.obstacles[i];
                let b = &world.obstacles[j];
                let gap = (a.center - b.center).norm() - a.radius - b.radius;
                if gap <= 2.0 * team_radius {
                    violations.push(format!(
                        "obstacles {i} and {j}: surface gap {gap:.3} m does not exceed \
                         twice the team radius {team_radius:.3} m"
                    ));
                }
            }
        }

        // Bodies.
        let object_hydro = self.object.hydro.to_params();
        object_hydro.check("object.hydro", &mut violations);

        let n_total = self.robots.len();
        if n_total < 1 {
            violations.push("at least one robot (the leader) is required".into());
        }

        let shares_given = self.robots.iter().filter(|r| r.load_share.is_some()).count();
        if shares_given != 0 && shares_given != n_total {
            violations.push(
                "load_share must be given for all robots or for none (uniform default)".into(),
            );
        }
        let uniform = 1.0 / n_total.max(1) as f64;
        let shares: Vec<f64> = self
            .robots
            .iter()
            .map(|r| r.load_share.unwrap_or(uniform))
            .collect();
        for (i, c) in shares.iter().enumerate() {
            if !(*c > 0.0 && *c < 1.0) {
                violations.push(format!("robot {i}: load share {c} outside (0, 1)"));
            }
        }
        let share_sum: f64 = shares.iter().sum();
        if n_total > 0 && (share_sum - 1.0).abs() > 1e-9 {
            violations.push(format!("load shares sum to {share_sum}, expected 1"));
        }

        let mut robots = Vec::with_capacity(n_total);
        for (i, rc) in self.robots.iter().enumerate() {
            let label = format!("robot {i}");
            let hydro = rc.hydro.to_params();
            hydro.check(&format!("{label}.hydro"), &mut violations);
            let offset = Vector3::from_row_slice(&rc.grasp_offset);
            if offset.norm() > self.object.bounding_radius + 1e-12 {
                violations.push(format!(
                    "{label}: grasp offset |l| = {:.3} exceeds the object bounding radius",
                    offset.norm()
                ));
            }
            let gains = rc.gains.to_gains(&label, &mut violations);
            for (name, m) in [
                ("object_inertia", &gains.object_inertia),
                ("object_damping", &gains.object_damping),
                ("object_stiffness", &gains.object_stiffness),
                ("robot_inertia", &gains.robot_inertia),
                ("z_gain", &gains.z_gain),
            ] {
                if !is_spd(m) {
                    violations.push(format!("{label}.gains.{name} is not SPD"));
                }
            }
            if gains.f_gain.iter().chain(gains.y_gain.iter()).any(|&x| x <= 0.0) {
                violations.push(format!("{label}.gains: f_gain and y_gain must be positive"));
            }
            if gains.adapt_gain.iter().any(|&x| x <= 0.0)
                || gains.adapt_gain_disturbance.iter().any(|&x| x <= 0.0)
            {
                violations.push(format!("{label}.gains: adaptation gains must be positive"));
            }
            if let Some((lo, hi)) = gains.adapt_projection {
                if lo >= hi {
                    violations.push(format!("{label}.gains.adapt_projection: lo >= hi"));
                }
            }
            let theta_true = hydro.theta();
            robots.push(RobotSpec {
                grasp: Grasp::new(offset),
                hydro,
                gains,
                theta_true,
                theta_d_true: fixed_theta::<DISTURBANCE_DIM>(
                    &rc.theta_d_true,
                    &format!("{label}.theta_d_true"),
                    &mut violations,
                ),
                theta_hat0: fixed_theta::<THETA_DIM>(
                    &rc.theta_hat0,
                    &format!("{label}.theta_hat0"),
                    &mut violations,
                ),
                theta_d_hat0: fixed_theta::<DISTURBANCE_DIM>(
                    &rc.theta_d_hat0,
                    &format!("{label}.theta_d_hat0"),
                    &mut violations,
                ),
                load_share: shares.get(robots.len()).copied().unwrap_or(uniform),
            });
        }

        for i in 0..robots.len() {
            for j in (i + 1)..robots.len() {
                if (robots[i].grasp.offset - robots[j].grasp.offset).norm() < 1e-9 {
                    violations.push(format!("robots {i} and {j} share the same grasp offset"));
                }
            }
        }

        // Aggregated internal wrench must not move the object.
        if !robots.is_empty() {
            let mut total = Vector6::zeros();
            let mut scale = 0.0_f64;
            for r in &robots {
                let w = r.gains.desired_internal_wrench.to_vector();
                total += r.grasp.jac_t * w;
                scale = scale.max(w.norm());
            }
            if total.norm() > 1e-9 * (1.0 + scale) {
                violations.push(format!(
                    "desired internal wrenches do not cancel: |sum J^T w| = {:.3e}",
                    total.norm()
                ));
            }
        }

        // Navigation.
        if !(self.nav.exponent_k > 1.0) {
            violations.push("nav.exponent_k must exceed 1".into());
        }
        if !(self.nav.gain > 0.0) {
            violations.push("nav.gain must be positive".into());
        }
        let nav = NavParams {
            exponent_k: self.nav.exponent_k,
            gain: self.nav.gain,
            goal: self.object.goal_pose.to_pose(),
            saddle_grad_eps: self.nav.saddle_grad_eps,
            saddle_window: self.nav.saddle_window,
            goal_gamma_tol: self.nav.goal_gamma_tol,
        };

        let initial_pose = self.object.initial_pose.to_pose();
        let goal = self.object.goal_pose.to_pose();
        for (name, pose) in [("initial_pose", &initial_pose), ("goal_pose", &goal)] {
            if beta(pose, &world) <= 0.0 {
                violations.push(format!(
                    "object.{name} is not in free space (inflated beta <= 0)"
                ));
            }
            if pose.euler.y.abs() >= std::f64::consts::FRAC_PI_2 - SINGULARITY_MARGIN {
                violations.push(format!(
                    "object.{name}: pitch too close to the representation singularity"
                ));
            }
        }

        // Observer.
        let observer_gain = self.observer.k_mu.to_matrix();
        if !is_spd(&observer_gain) {
            violations.push("observer.k_mu is not SPD".into());
        }

        // Estimator: positive gains, feasible envelopes, and the explicit
        // Euler stiffness bound k dt <= rho_inf / 2 per axis.
        let est = EstimatorParams {
            gains: Vector6::from_row_slice(&self.estimator.gains),
            rho_inf: Vector6::from_row_slice(&self.estimator.rho_inf),
            decay_rate: self.estimator.decay_rate,
            rho0_floor: self.estimator.rho0_floor,
        };
        if est.gains.iter().any(|&k| k <= 0.0) {
            violations.push("estimator.gains must be positive".into());
        }
        if est.rho_inf.iter().any(|&r| r <= 0.0) {
            violations.push("estimator.rho_inf must be positive".into());
        }
        if !(est.decay_rate > 0.0) {
            violations.push("estimator.decay_rate must be positive".into());
        }
        if !(est.rho0_floor > 0.0) {
            violations.push("estimator.rho0_floor must be positive".into());
        }
        for j in 0..6 {
            if est.rho_inf[j] >= est.rho0_floor {
                violations.push(format!(
                    "estimator.rho_inf[{j}] must stay below rho0_floor"
                ));
            }
            if est.gains[j] * self.dt_control > est.rho_inf[j] / 2.0 {
                violations.push(format!(
                    "estimator.gains[{j}] = {} too large for dt = {}: explicit Euler needs \
                     k*dt <= rho_inf/2 = {}",
                    est.gains[j],
                    self.dt_control,
                    est.rho_inf[j] / 2.0
                ));
            }
        }

        if self.disturbance.current_frequency < 0.0 {
            violations.push("disturbance.current_frequency must be non-negative".into());
        }
        let disturbance = DisturbanceModel {
            current_amplitude: Vector2::from_row_slice(&self.disturbance.current_amplitude),
            current_frequency: self.disturbance.current_frequency,
            theta_d: fixed_theta::<DISTURBANCE_DIM>(
                &self.disturbance.theta_d,
                "disturbance.theta_d",
                &mut violations,
            ),
        };

        let scenario = Scenario {
            world,
            nav,
            object_hydro,
            object_radius: self.object.bounding_radius,
            initial_pose,
            initial_twist: self.object.initial_twist.to_twist(),
            goal,
            robots,
            observer_gain,
            estimator: est,
            disturbance,
            dt_control: self.dt_control,
            substeps: self.substeps,
            duration: self.duration,
            rng_seed: self.rng_seed,
            lambda_noise_std: self.lambda_noise_std,
        };
        (scenario, ValidationReport { violations })
    }

    /// Applies one `dotted.key=value` override to the JSON form of the
    /// config. Array elements are addressed numerically
    /// (`robots.0.load_share`). The value is parsed as JSON, falling back to
    /// a string.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<(), String> {
        let mut root = serde_json::to_value(&*self).map_err(|e| e.to_string())?;
        {
            let mut node = &mut root;
            let parts: Vec<&str> = key.split('.').collect();
            for (depth, part) in parts.iter().enumerate() {
                let last = depth + 1 == parts.len();
                match node {
                    serde_json::Value::Object(map) => {
                        if last {
                            let parsed = serde_json::from_str(value)
                                .unwrap_or_else(|_| serde_json::Value::String(value.into()));
                            map.insert((*part).into(), parsed);
                            node = map.get_mut(*part).unwrap();
                        } else {
                            node = map
                                .get_mut(*part)
                                .ok_or_else(|| format!("unknown config key `{key}`"))?;
                        }
                    }
                    serde_json::Value::Array(arr) => {
                        let idx: usize = part
                            .parse()
                            .map_err(|_| format!("`{part}` is not an array index in `{key}`"))?;
                        let slot = arr
                            .get_mut(idx)
                            .ok_or_else(|| format!("index {idx} out of range in `{key}`"))?;
                        if last {
                            *slot = serde_json::from_str(value)
                                .unwrap_or_else(|_| serde_json::Value::String(value.into()));
                        }
                        node = slot;
                    }
                    _ => return Err(format!("`{key}` does not address a config field")),
                }
            }
        }
        *self = serde_json::from_value(root).map_err(|e| format!("override `{key}`: {e}"))?;
        Ok(())
    }

    /// The shipped four-robot transport scenario: two 1 m obstacles, sea
    /// currents `0.3 sin(pi t / 15)`, `0.3 cos(pi t / 15)` m/s, 0.1 s control
    /// period.
    pub fn nominal() -> Self {
        let robot_hydro = HydroConfig {
            mass_matrix: MatrixSpec::diagonal([40.0, 42.0, 45.0, 6.0, 7.0, 8.0]),
            drag_linear: [25.0, 27.0, 30.0, 6.0, 7.0, 8.0],
            drag_quadratic: [12.0, 13.0, 15.0, 3.0, 3.0, 4.0],
            restoring: [0.0; 6],
        };
        // The wrench cancellation in the control law sees the measured
        // wrench one period late, so the internal force loops must stay
        // contractive at the 0.1 s sample: keep K K_f / Y and M K_f well
        // below one (K_f = robot_inertia^{-1}). The constant block of the
        // disturbance regressor has unit coefficients where the current
        // blocks carry the 0.3 m/s amplitude, so it gets a smaller
        // adaptation gain for the same per-step contraction.
        let adapt_disturbance: Vec<f64> = (0..DISTURBANCE_DIM)
            .map(|j| if j < 12 { 30.0 } else { 6.0 })
            .collect();
        let gains = GainsConfig {
            object_inertia: MatrixSpec::diagonal([60.0, 60.0, 60.0, 10.0, 10.0, 10.0]),
            object_damping: MatrixSpec::diagonal([180.0, 180.0, 180.0, 30.0, 30.0, 30.0]),
            object_stiffness: MatrixSpec::diagonal([120.0, 120.0, 120.0, 20.0, 20.0, 20.0]),
            robot_inertia: MatrixSpec::diagonal([200.0, 200.0, 200.0, 80.0, 80.0, 80.0]),
            f_gain: [1.2; 6],
            y_gain: [1.5; 6],
            z_gain: MatrixSpec::diagonal([80.0, 80.0, 80.0, 20.0, 20.0, 20.0]),
            adapt_gain: GainSpec::Uniform(0.2),
            adapt_gain_disturbance: GainSpec::PerComponent(adapt_disturbance),
            internal_wrench: [0.0; 6],
            adapt_projection: None,
        };
        let robot_theta_d = {
            let mut v = vec![0.0; DISTURBANCE_DIM];
            v[0] = 25.0;
            v[1] = 3.0;
            v[5] = 1.0;
            v[6] = 3.0;
            v[7] = 27.0;
            v[11] = -1.0;
            v
        };
        let offsets = [
            [0.6, 0.4, 0.0],
            [-0.6, 0.4, 0.0],
            [-0.6, -0.4, 0.0],
            [0.6, -0.4, 0.0],
        ];
        let robots = offsets
            .iter()
            .map(|&grasp_offset| RobotConfig {
                hydro: robot_hydro.clone(),
                grasp_offset,
                gains: gains.clone(),
                load_share: None,
                theta_d_true: robot_theta_d.clone(),
                theta_hat0: default_theta_like(),
                theta_d_hat0: default_disturbance_like(),
            })
            .collect();

        let object_theta_d = {
            let mut v = vec![0.0; DISTURBANCE_DIM];
            v[0] = 30.0;
            v[1] = 4.0;
            v[5] = 2.0;
            v[6] = 4.0;
            v[7] = 32.0;
            v[11] = -2.0;
            v
        };

        ScenarioConfig {
            world: WorldConfig {
                workspace_center: [0.0, 0.0, 0.0],
                workspace_radius: 12.0,
                obstacles: vec![
                    ObstacleConfig {
                        center: [-1.5, 2.0, 0.0],
                        radius: 1.0,
                    },
                    ObstacleConfig {
                        center: [1.5, -2.0, 0.0],
                        radius: 1.0,
                    },
                ],
                robot_radius: 0.6,
            },
            object: ObjectConfig {
                hydro: HydroConfig {
                    mass_matrix: MatrixSpec::diagonal([80.0, 85.0, 95.0, 12.0, 14.0, 16.0]),
                    drag_linear: [40.0, 45.0, 50.0, 10.0, 11.0, 12.0],
                    drag_quadratic: [20.0, 22.0, 25.0, 5.0, 5.0, 6.0],
                    restoring: [0.0; 6],
                },
                bounding_radius: 0.8,
                initial_pose: PoseConfig {
                    position: [-7.0, 0.0, 0.0],
                    euler: [0.0, 0.0, 0.0],
                },
                initial_twist: zero_twist(),
                goal_pose: PoseConfig {
                    position: [7.0, 0.0, 0.0],
                    euler: [0.0, 0.0, 0.4],
                },
            },
            robots,
            nav: NavConfig {
                exponent_k: 2.0,
                gain: 8.0,
                saddle_grad_eps: 1e-6,
                saddle_window: 5.0,
                goal_gamma_tol: 1e-2,
            },
            observer: ObserverConfig {
                k_mu: MatrixSpec::diagonal([2.0; 6]),
            },
            estimator: EstimatorConfig {
                gains: [0.8; 6],
                rho_inf: [0.2; 6],
                decay_rate: 0.3,
                rho0_floor: 0.5,
            },
            disturbance: DisturbanceConfig {
                current_amplitude: [0.3, 0.3],
                current_frequency: std::f64::consts::PI / 15.0,
                theta_d: object_theta_d,
            },
            dt_control: 0.1,
            substeps: 10,
            duration: 300.0,
            rng_seed: 0,
            lambda_noise_std: 0.0,
        }
    }

    /// Degenerate scenario that starts at the goal with no disturbance:
    /// the exact fixed point of the closed loop.
    pub fn trivial() -> Self {
        let mut cfg = Self::nominal();
        cfg.object.initial_pose = cfg.object.goal_pose.clone();
        cfg.disturbance = DisturbanceConfig::default();
        for r in &mut cfg.robots {
            r.theta_d_true = default_disturbance_like();
        }
        cfg.duration = 5.0;
        cfg
    }
}

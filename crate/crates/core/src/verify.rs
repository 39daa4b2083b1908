//! Self-contained numerical verification suites: the oracle checks behind
//! the test suite, runnable from the CLI as well. Each suite reports its
//! worst error against its tolerance.

use nalgebra::{Matrix6, Vector2, Vector3, Vector6};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{
    robot_object_frame_terms, DisturbanceModel, DisturbanceTheta, HydroParams, Regressor,
};
use crate::nav::{nav_potential, Obstacle, SphereWorld};
use crate::scenario::ScenarioConfig;
use crate::se3::{Grasp, Pose6, Twist6};
use crate::sim::coupled_accel;

/// Outcome of one verification suite.
#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub max_error: f64,
    pub tolerance: f64,
    pub cases: usize,
}

impl SuiteResult {
    fn evaluate(name: &str, max_error: f64, tolerance: f64, cases: usize) -> Self {
        SuiteResult {
            name: name.into(),
            passed: max_error < tolerance,
            max_error,
            tolerance,
            cases,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {:<28} max error {:.3e} (tol {:.1e}, {} cases)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.max_error,
            self.tolerance,
            self.cases
        )
    }
}

pub fn random_hydro(rng: &mut impl Rng) -> HydroParams {
    let a = Matrix6::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    HydroParams {
        mass_matrix: (a * a.transpose() + Matrix6::identity() * rng.gen_range(2.0..5.0)) * 10.0,
        drag_linear: Vector6::from_fn(|_, _| rng.gen_range(0.0..30.0)),
        drag_quadratic: Vector6::from_fn(|_, _| rng.gen_range(0.0..15.0)),
        restoring: Vector6::from_fn(|_, _| rng.gen_range(-20.0..20.0)),
    }
}

pub fn random_pose(rng: &mut impl Rng) -> Pose6 {
    Pose6::new(
        Vector3::from_fn(|_, _| rng.gen_range(-5.0..5.0)),
        Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-3.0..3.0),
        ),
    )
}

pub fn random_twist(rng: &mut impl Rng, scale: f64) -> Twist6 {
    Twist6::new(
        Vector3::from_fn(|_, _| rng.gen_range(-scale..scale)),
        Vector3::from_fn(|_, _| rng.gen_range(-scale..scale)),
    )
}

fn random_vec6(rng: &mut impl Rng, scale: f64) -> Vector6<f64> {
    Vector6::from_fn(|_, _| rng.gen_range(-scale..scale))
}

/// Worst relative mismatch between an analytic gradient and central finite
/// differences over the given points. Exposed separately so a broken
/// gradient can be checked to fail.
pub fn max_gradient_mismatch(
    f: impl Fn(&Vector6<f64>) -> f64,
    grad: impl Fn(&Vector6<f64>) -> Vector6<f64>,
    points: &[Vector6<f64>],
    h: f64,
) -> f64 {
    let mut worst = 0.0_f64;
    for x in points {
        let g = grad(x);
        let mut fd = Vector6::zeros();
        for j in 0..6 {
            let mut xp = *x;
            let mut xm = *x;
            xp[j] += h;
            xm[j] -= h;
            fd[j] = (f(&xp) - f(&xm)) / (2.0 * h);
        }
        worst = worst.max((fd - g).norm() / g.norm().max(1e-12));
    }
    worst
}

/// Worst skew-symmetry defect `|z^T (Mdot - 2C) z| / |z|^2`, with `Mdot`
/// estimated by central differences of the mass matrix along the motion.
pub fn max_skew_defect(
    mass_at: impl Fn(f64) -> Matrix6<f64>,
    coriolis_at: impl Fn(f64) -> Matrix6<f64>,
    times: &[f64],
    z_samples: &[Vector6<f64>],
    h: f64,
) -> f64 {
    let mut worst = 0.0_f64;
    for &t in times {
        let m_dot = (mass_at(t + h) - mass_at(t - h)) / (2.0 * h);
        let q = m_dot - coriolis_at(t) * 2.0;
        for z in z_samples {
            worst = worst.max((z.transpose() * q * z)[0].abs() / z.norm_squared());
        }
    }
    worst
}

/// Property suite: positive-definite masses and the skew symmetry of
/// `Mdot - 2C` for object and transformed robot terms along a trajectory.
pub fn skew_symmetry_suite(seed: u64, cases: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    let mut checked = 0;
    while checked < cases {
        let p = random_hydro(&mut rng);
        let grasp = Grasp::new(Vector3::from_fn(|_, _| rng.gen_range(-0.8..0.8)));
        // A smooth synthetic velocity trajectory.
        let amp = random_vec6(&mut rng, 1.5);
        let phase = random_vec6(&mut rng, 3.0);
        let v_at = |t: f64| Vector6::from_fn(|j, _| amp[j] * (t + phase[j]).sin());
        let rot = crate::se3::rotation_from_euler(&Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-3.0..3.0),
        ));
        let terms_at = |t: f64| {
            robot_object_frame_terms(&rot, &v_at(t), &grasp, &Matrix6::zeros(), &p).unwrap()
        };
        let min_eig = terms_at(0.0).mass.symmetric_eigenvalues().min();
        if min_eig <= 0.0 {
            return SuiteResult::evaluate("mass positive definiteness", f64::INFINITY, 1e-8, checked);
        }
        let zs: Vec<Vector6<f64>> = (0..4).map(|_| random_vec6(&mut rng, 2.0)).collect();
        let ts: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..10.0)).collect();
        let defect = max_skew_defect(
            |t| terms_at(t).mass,
            |t| terms_at(t).coriolis,
            &ts,
            &zs,
            1e-5,
        );
        worst = worst.max(defect);
        checked += 1;
    }
    SuiteResult::evaluate("skew symmetry (Mdot - 2C)", worst, 1e-8, checked)
}

/// Property suite: the regressors reproduce the dynamics products for both
/// the body parameters and the disturbance parameters.
pub fn regressor_suite(seed: u64, cases: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let p = random_hydro(&mut rng);
        let grasp = Grasp::new(Vector3::from_fn(|_, _| rng.gen_range(-0.8..0.8)));
        let pose = random_pose(&mut rng);
        let rot = pose.rotation();
        let b = random_vec6(&mut rng, 2.0);
        let c = random_vec6(&mut rng, 2.0);
        let d = random_vec6(&mut rng, 3.0);
        let terms = robot_object_frame_terms(&rot, &b, &grasp, &Matrix6::zeros(), &p).unwrap();
        let direct = terms.mass * d + terms.coriolis * c + terms.drag * c + terms.restoring;
        let omega = Regressor::for_grasp(grasp).eval(&rot, &b, &c, &d);
        let residual = (direct - omega * p.theta()).norm() / (1.0 + c.norm() + d.norm());
        worst = worst.max(residual);

        // Disturbance side.
        let model = DisturbanceModel {
            current_amplitude: Vector2::new(rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5)),
            current_frequency: rng.gen_range(0.05..0.5),
            theta_d: DisturbanceTheta::from_fn(|_, _| rng.gen_range(-30.0..30.0)),
        };
        let t = rng.gen_range(0.0..300.0);
        let d_direct = model.regressor(&grasp, t) * model.theta_d;
        let d_manual = grasp.jac_t * (model.regressor_task(t) * model.theta_d);
        worst = worst.max((d_direct - d_manual).norm() / (1.0 + d_manual.norm()));
    }
    SuiteResult::evaluate("regressor identity", worst, 1e-9, cases)
}

/// Navigation suite: analytic gradient against central finite differences
/// over random free-space points of the nominal world.
pub fn gradient_suite(seed: u64, cases: usize) -> SuiteResult {
    let scenario = ScenarioConfig::nominal().build().unwrap();
    let world = &scenario.world;
    let params = &scenario.nav;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(cases);
    while points.len() < cases {
        let pose = Pose6::new(
            Vector3::new(
                rng.gen_range(-9.0..9.0),
                rng.gen_range(-9.0..9.0),
                rng.gen_range(-3.0..3.0),
            ),
            Vector3::new(
                rng.gen_range(-0.6..0.6),
                rng.gen_range(-0.6..0.6),
                rng.gen_range(-2.0..2.0),
            ),
        );
        if crate::nav::beta(&pose, world) < 0.5 {
            continue;
        }
        match crate::nav::nav_gradient(&pose, world, params) {
            Ok(g) if g.norm() > 1e-4 => points.push(pose.to_vector()),
            _ => continue,
        }
    }
    let worst = max_gradient_mismatch(
        |x| nav_potential(&Pose6::from_vector(x), world, params),
        |x| crate::nav::nav_gradient(&Pose6::from_vector(x), world, params).unwrap(),
        &points,
        1e-6,
    );
    SuiteResult::evaluate("navigation gradient", worst, 1e-5, cases)
}

/// Coupled-dynamics suite: the object-side force balance closes after the
/// interaction wrenches are recovered by back-substitution.
pub fn newton_suite(seed: u64, cases: usize) -> SuiteResult {
    let scenario = ScenarioConfig::nominal().build().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let pose = random_pose(&mut rng);
        let twist = random_twist(&mut rng, 1.0);
        let inputs: Vec<Vector6<f64>> = (0..scenario.robots.len())
            .map(|_| random_vec6(&mut rng, 20.0))
            .collect();
        let t = rng.gen_range(0.0..300.0);
        let (accel, lambda) = coupled_accel(&scenario, &pose, &twist, &inputs, t).unwrap();
        let rot = pose.rotation();
        let v = twist.to_vector();
        let obj = crate::dynamics::body_terms(&rot, &v, &scenario.object_hydro);
        let mut sum = Vector6::zeros();
        for (i, r) in scenario.robots.iter().enumerate() {
            sum += r.grasp.jac_t * lambda[i].to_vector();
        }
        let lhs = obj.mass * accel + obj.coriolis * v + obj.drag * v + obj.restoring;
        let rhs = -sum + scenario.disturbance.lambda_e(t);
        worst = worst.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
    }
    SuiteResult::evaluate("newton back-substitution", worst, 1e-8, cases)
}

/// Runs every suite at its acceptance size.
pub fn run_all(seed: u64) -> Vec<SuiteResult> {
    vec![
        skew_symmetry_suite(seed, 1000),
        regressor_suite(seed.wrapping_add(1), 1000),
        gradient_suite(seed.wrapping_add(2), 1000),
        newton_suite(seed.wrapping_add(3), 1000),
    ]
}

/// Navigation worlds used by tests and examples.
pub fn two_obstacle_world() -> SphereWorld {
    SphereWorld {
        workspace_center: Vector3::zeros(),
        workspace_radius: 12.0,
        obstacles: vec![
            Obstacle {
                center: Vector3::new(-1.5, 2.0, 0.0),
                radius: 1.0,
            },
            Obstacle {
                center: Vector3::new(1.5, -2.0, 0.0),
                radius: 1.0,
            },
        ],
        team_radius: 1.4,
    }
}

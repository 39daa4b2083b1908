//! Run logs on the uniform control grid, derived metrics, and CSV/JSON
//! export.

use nalgebra::Vector6;
use serde::Serialize;

use crate::nav::wrap_angle;
use crate::scenario::Scenario;
use crate::se3::{rotation_from_euler, Pose6, Twist6};

/// Everything one robot reports at one control instant.
#[derive(Debug, Clone)]
pub struct RobotStep {
    pub u: Vector6<f64>,
    pub lambda: Vector6<f64>,
    pub lambda_d: Vector6<f64>,
    pub z: Vector6<f64>,
    pub theta_err_norm: f64,
    pub theta_d_err_norm: f64,
    pub zeta: Vector6<f64>,
    pub lambda_e_hat: Vector6<f64>,
    /// Follower-only: estimation error, envelope and pose estimate.
    pub est_error: Option<Vector6<f64>>,
    pub est_rho: Option<Vector6<f64>>,
    pub est_pose: Option<Vector6<f64>>,
}

/// One control instant of the whole system.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: f64,
    pub object_pose: Vector6<f64>,
    pub object_twist: Vector6<f64>,
    pub object_accel: Vector6<f64>,
    pub desired_pose: Vector6<f64>,
    pub desired_twist: Vector6<f64>,
    pub lyapunov: f64,
    pub potential: f64,
    pub gamma: f64,
    pub min_beta: f64,
    pub min_clearance: f64,
    pub lambda_e_true: Vector6<f64>,
    pub robots: Vec<RobotStep>,
}

/// Time-series log of one scenario run.
#[derive(Debug, Clone)]
pub struct SimLog {
    pub dt: f64,
    pub goal: Pose6,
    pub rho_inf: Vector6<f64>,
    pub records: Vec<StepRecord>,
    pub final_pose: Pose6,
    pub final_twist: Twist6,
}

impl SimLog {
    pub fn new(scenario: &Scenario) -> Self {
        SimLog {
            dt: scenario.dt_control,
            goal: scenario.goal,
            rho_inf: scenario.estimator.rho_inf,
            records: Vec::new(),
            final_pose: scenario.initial_pose,
            final_twist: scenario.initial_twist,
        }
    }

    pub fn push(&mut self, record: StepRecord) {
        self.records.push(record);
    }

    pub fn finish(&mut self, pose: &Pose6, twist: &Twist6) {
        self.final_pose = *pose;
        self.final_twist = *twist;
    }

    pub fn robot_count(&self) -> usize {
        self.records.first().map_or(0, |r| r.robots.len())
    }

    /// Per-axis tracking error against the leader's reference, orientation
    /// axes wrapped.
    fn tracking_error(rec: &StepRecord) -> Vector6<f64> {
        let mut e = rec.object_pose - rec.desired_pose;
        for j in 3..6 {
            e[j] = wrap_angle(e[j]);
        }
        e
    }

    /// Flat CSV export, one row per control instant. Column order:
    /// `t`, object pose (6), twist (6), acceleration (6), leader desired
    /// pose (6) and twist (6), `V`, `phi`, `gamma`, `min_beta`,
    /// `min_clearance`, true external wrench (6), then per robot `i`:
    /// `u` (6), `lambda` (6), `lambda_d` (6), `z` (6), `theta_err`,
    /// `theta_d_err`, `zeta` (6), `lambda_e_hat` (6), and for followers
    /// `est_err` (6), `est_rho` (6), `est_pose` (6).
    pub fn to_csv(&self) -> String {
        let n = self.robot_count();
        let mut out = String::new();
        let vec_cols = |name: &str, labels: [&str; 6]| {
            labels
                .iter()
                .map(|l| format!("{name}_{l}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let pose_labels = ["x", "y", "z", "roll", "pitch", "yaw"];
        let twist_labels = ["vx", "vy", "vz", "wx", "wy", "wz"];
        let wrench_labels = ["fx", "fy", "fz", "tx", "ty", "tz"];
        let axis_labels = ["1", "2", "3", "4", "5", "6"];

        out.push('t');
        out.push(',');
        out.push_str(&vec_cols("obj", pose_labels));
        out.push(',');
        out.push_str(&vec_cols("obj", twist_labels));
        out.push(',');
        out.push_str(&vec_cols("obj_acc", axis_labels));
        out.push(',');
        out.push_str(&vec_cols("des", pose_labels));
        out.push(',');
        out.push_str(&vec_cols("des", twist_labels));
        out.push_str(",V,phi,gamma,min_beta,min_clearance,");
        out.push_str(&vec_cols("lambda_e", wrench_labels));
        for i in 0..n {
            for (block, labels) in [
                ("u", wrench_labels),
                ("lambda", wrench_labels),
                ("lambda_d", wrench_labels),
                ("z", axis_labels),
            ] {
                out.push(',');
                out.push_str(&vec_cols(&format!("r{i}_{block}"), labels));
            }
            out.push_str(&format!(",r{i}_theta_err,r{i}_theta_d_err,"));
            out.push_str(&vec_cols(&format!("r{i}_zeta"), axis_labels));
            out.push(',');
            out.push_str(&vec_cols(&format!("r{i}_lehat"), wrench_labels));
            if self
                .records
                .first()
                .map_or(false, |r| r.robots[i].est_error.is_some())
            {
                out.push(',');
                out.push_str(&vec_cols(&format!("r{i}_e"), axis_labels));
                out.push(',');
                out.push_str(&vec_cols(&format!("r{i}_rho"), axis_labels));
                out.push(',');
                out.push_str(&vec_cols(&format!("r{i}_xhat"), pose_labels));
            }
        }
        out.push('\n');

        let push_vec = |out: &mut String, v: &Vector6<f64>| {
            for x in v.iter() {
                out.push(',');
                out.push_str(&format!("{x:?}"));
            }
        };
        for rec in &self.records {
            out.push_str(&format!("{:?}", rec.t));
            push_vec(&mut out, &rec.object_pose);
            push_vec(&mut out, &rec.object_twist);
            push_vec(&mut out, &rec.object_accel);
            push_vec(&mut out, &rec.desired_pose);
            push_vec(&mut out, &rec.desired_twist);
            out.push_str(&format!(
                ",{:?},{:?},{:?},{:?},{:?}",
                rec.lyapunov, rec.potential, rec.gamma, rec.min_beta, rec.min_clearance
            ));
            push_vec(&mut out, &rec.lambda_e_true);
            for r in &rec.robots {
                push_vec(&mut out, &r.u);
                push_vec(&mut out, &r.lambda);
                push_vec(&mut out, &r.lambda_d);
                push_vec(&mut out, &r.z);
                out.push_str(&format!(",{:?},{:?}", r.theta_err_norm, r.theta_d_err_norm));
                push_vec(&mut out, &r.zeta);
                push_vec(&mut out, &r.lambda_e_hat);
                if let (Some(e), Some(rho), Some(xh)) = (&r.est_error, &r.est_rho, &r.est_pose) {
                    push_vec(&mut out, e);
                    push_vec(&mut out, rho);
                    push_vec(&mut out, xh);
                }
            }
            out.push('\n');
        }
        out
    }

    /// Data behind the transport figure: planar object path against the
    /// leader's reference, with clearance.
    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from("t,x,y,z,des_x,des_y,des_z,min_clearance\n");
        for rec in &self.records {
            out.push_str(&format!(
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
                rec.t,
                rec.object_pose[0],
                rec.object_pose[1],
                rec.object_pose[2],
                rec.desired_pose[0],
                rec.desired_pose[1],
                rec.desired_pose[2],
                rec.min_clearance
            ));
        }
        out
    }

    /// Data behind the tracking-error figure: per-axis object pose error
    /// against the leader's reference.
    pub fn tracking_error_csv(&self) -> String {
        let mut out = String::from("t,ex,ey,ez,eroll,epitch,eyaw\n");
        for rec in &self.records {
            let e = Self::tracking_error(rec);
            out.push_str(&format!(
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
                rec.t, e[0], e[1], e[2], e[3], e[4], e[5]
            ));
        }
        out
    }

    /// Data behind the estimation figure: per-follower estimation errors
    /// with their envelopes.
    pub fn estimation_envelope_csv(&self) -> String {
        let n = self.robot_count();
        let mut out = String::from("t");
        for i in 0..n {
            if self
                .records
                .first()
                .map_or(false, |r| r.robots[i].est_error.is_some())
            {
                for j in 1..=6 {
                    out.push_str(&format!(",r{i}_e{j},r{i}_rho{j}"));
                }
            }
        }
        out.push('\n');
        for rec in &self.records {
            out.push_str(&format!("{:?}", rec.t));
            for r in &rec.robots {
                if let (Some(e), Some(rho)) = (&r.est_error, &r.est_rho) {
                    for j in 0..6 {
                        out.push_str(&format!(",{:?},{:?}", e[j], rho[j]));
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn metrics(&self) -> Metrics {
        let n = self.robot_count();
        let records = &self.records;

        let final_position_error = (self.final_pose.position - self.goal.position).norm();
        let rot_f = rotation_from_euler(&self.final_pose.euler);
        let rot_g = rotation_from_euler(&self.goal.euler);
        // Geodesic angle of the relative rotation.
        let rel = rot_g.transpose() * rot_f;
        let cos_angle = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        let final_orientation_error = cos_angle.acos();

        let mut rms = Vector6::<f64>::zeros();
        let mut terminal = Vector6::<f64>::zeros();
        for rec in records {
            let e = Self::tracking_error(rec);
            rms += e.component_mul(&e);
            terminal = e;
        }
        if !records.is_empty() {
            rms /= records.len() as f64;
            rms.apply(|x| *x = x.sqrt());
        }

        let mut max_envelope_ratio = 0.0_f64;
        let mut estimation_settle_time = None;
        for rec in records.iter() {
            let mut settled = true;
            for r in &rec.robots {
                if let (Some(e), Some(rho)) = (&r.est_error, &r.est_rho) {
                    for j in 0..6 {
                        max_envelope_ratio = max_envelope_ratio.max(e[j].abs() / rho[j]);
                        if e[j].abs() > self.rho_inf[j] {
                            settled = false;
                        }
                    }
                }
            }
            match (settled, estimation_settle_time) {
                (true, None) => estimation_settle_time = Some(rec.t),
                (false, Some(_)) => estimation_settle_time = None,
                _ => {}
            }
        }

        // Observer settle: total estimate within 5% of the true external
        // wrench scale, sustained to the end of the run.
        let lambda_scale = records
            .iter()
            .map(|r| r.lambda_e_true.norm())
            .fold(0.0, f64::max);
        let mut observer_settle_time = None;
        if lambda_scale > 0.0 {
            for rec in records.iter() {
                let total: Vector6<f64> = rec
                    .robots
                    .iter()
                    .map(|r| r.lambda_e_hat)
                    .fold(Vector6::zeros(), |a, b| a + b);
                let ok = (total - rec.lambda_e_true).norm() <= 0.05 * lambda_scale;
                match (ok, observer_settle_time) {
                    (true, None) => observer_settle_time = Some(rec.t),
                    (false, Some(_)) => observer_settle_time = None,
                    _ => {}
                }
            }
        }

        let v0 = records.first().map_or(0.0, |r| r.lyapunov);
        let tol = 1e-6 * v0;
        let mut lyapunov_violations = 0usize;
        for w in records.windows(2) {
            if w[1].lyapunov > w[0].lyapunov + tol {
                lyapunov_violations += 1;
            }
        }

        let mut control_effort = vec![0.0; n];
        let mut z_l2 = vec![0.0; n];
        let mut z_l2_tail = vec![0.0; n];
        let tail_start = records.len() - records.len() / 5;
        for (idx, rec) in records.iter().enumerate() {
            for (i, r) in rec.robots.iter().enumerate() {
                control_effort[i] += self.dt * r.u.norm();
                let zz = self.dt * r.z.norm_squared();
                z_l2[i] += zz;
                if idx >= tail_start {
                    z_l2_tail[i] += zz;
                }
            }
        }

        Metrics {
            final_position_error,
            final_orientation_error,
            rms_tracking_error: rms.iter().copied().collect(),
            terminal_tracking_error: terminal.iter().copied().collect(),
            max_envelope_ratio,
            min_beta: records.iter().map(|r| r.min_beta).fold(f64::INFINITY, f64::min),
            min_clearance: records
                .iter()
                .map(|r| r.min_clearance)
                .fold(f64::INFINITY, f64::min),
            lyapunov_initial: v0,
            lyapunov_violations,
            control_effort,
            z_l2,
            z_l2_tail,
            estimation_settle_time,
            observer_settle_time,
            steps: records.len(),
            non_finite: false,
        }
    }
}

/// Summary metrics of one run, exported as `metrics.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub final_position_error: f64,
    pub final_orientation_error: f64,
    pub rms_tracking_error: Vec<f64>,
    pub terminal_tracking_error: Vec<f64>,
    pub max_envelope_ratio: f64,
    pub min_beta: f64,
    pub min_clearance: f64,
    pub lyapunov_initial: f64,
    pub lyapunov_violations: usize,
    pub control_effort: Vec<f64>,
    pub z_l2: Vec<f64>,
    pub z_l2_tail: Vec<f64>,
    pub estimation_settle_time: Option<f64>,
    pub observer_settle_time: Option<f64>,
    pub steps: usize,
    pub non_finite: bool,
}

impl Metrics {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

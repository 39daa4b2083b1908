//! Hydrodynamic rigid-body models for the object and the robots (expressed in
//! object coordinates), their linear-in-parameters regressor forms, and the
//! sea-current disturbance model.
//!
//! Each body is one fully-actuated 6-DoF task-space body with constant
//! rigid-plus-added mass, body-frame Coriolis factorization, diagonal
//! linear + quadratic drag and a constant world-frame restoring wrench
//! resolved into the mixed velocity frame. The Coriolis matrix is built from
//! the mass matrix, which makes it skew-symmetric, so `Mdot - 2C` is
//! skew-symmetric with a constant `M`.

use nalgebra::{Matrix3, Matrix6, SMatrix, SVector, Vector2, Vector3, Vector6};

use crate::error::SimError;
use crate::se3::{skew, Grasp, Pose6, Twist6};

/// Length of a body's flattened parameter vector:
/// 21 mass entries (upper triangle, row major) + 6 linear drag
/// + 6 quadratic drag + 6 restoring.
pub const THETA_DIM: usize = 39;
pub type Theta = SVector<f64, THETA_DIM>;
pub type RegressorMatrix = SMatrix<f64, 6, THETA_DIM>;

/// Length of the disturbance parameter vector: one 6-block each for the
/// sine and cosine current components plus one constant 6-block.
pub const DISTURBANCE_DIM: usize = 18;
pub type DisturbanceTheta = SVector<f64, DISTURBANCE_DIM>;
pub type DisturbanceRegressor = SMatrix<f64, 6, DISTURBANCE_DIM>;

/// Hydrodynamic model coefficients of one body.
#[derive(Debug, Clone, PartialEq)]
pub struct HydroParams {
    /// Rigid + added mass matrix, symmetric positive definite.
    pub mass_matrix: Matrix6<f64>,
    /// Diagonal linear drag coefficients, non-negative.
    pub drag_linear: Vector6<f64>,
    /// Diagonal quadratic drag coefficients, non-negative.
    pub drag_quadratic: Vector6<f64>,
    /// Net gravity-buoyancy wrench at neutral orientation, world frame.
    pub restoring: Vector6<f64>,
}

impl HydroParams {
    /// Body-frame Coriolis factorization from the (constant) mass matrix.
    ///
    /// With `s = M v`, `C(v) = [[0, -S(s1)], [-S(s1), -S(s2)]]`, which is
    /// skew-symmetric for any `v`.
    pub fn coriolis(&self, v: &Vector6<f64>) -> Matrix6<f64> {
        let s = self.mass_matrix * v;
        let s1 = skew(&Vector3::new(s[0], s[1], s[2]));
        let s2 = skew(&Vector3::new(s[3], s[4], s[5]));
        let mut c = Matrix6::zeros();
        c.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-s1));
        c.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-s1));
        c.fixed_view_mut::<3, 3>(3, 3).copy_from(&(-s2));
        c
    }

    /// Diagonal drag matrix `D(v) = diag(d_lin + d_quad .* |v|)`.
    pub fn drag_matrix(&self, v: &Vector6<f64>) -> Matrix6<f64> {
        let mut d = Matrix6::zeros();
        for j in 0..6 {
            d[(j, j)] = self.drag_linear[j] + self.drag_quadratic[j] * v[j].abs();
        }
        d
    }

    /// Restoring wrench resolved into the mixed velocity frame: force stays
    /// in the world frame, torque is rotated into the body frame.
    pub fn restoring_wrench(&self, rot: &Matrix3<f64>) -> Vector6<f64> {
        let f: Vector3<f64> = self.restoring.fixed_rows::<3>(0).into();
        let tau: Vector3<f64> = self.restoring.fixed_rows::<3>(3).into();
        let tau_b = rot.transpose() * tau;
        Vector6::new(f.x, f.y, f.z, tau_b.x, tau_b.y, tau_b.z)
    }

    /// Flattened parameter vector matching the regressor layout.
    pub fn theta(&self) -> Theta {
        let mut th = Theta::zeros();
        let mut idx = 0;
        for i in 0..6 {
            for j in i..6 {
                th[idx] = self.mass_matrix[(i, j)];
                idx += 1;
            }
        }
        for j in 0..6 {
            th[21 + j] = self.drag_linear[j];
            th[27 + j] = self.drag_quadratic[j];
            th[33 + j] = self.restoring[j];
        }
        th
    }

    /// Reconstructs parameters from a flattened vector. Inverse of
    /// [`HydroParams::theta`]; does not check admissibility.
    pub fn from_theta(theta: &Theta) -> Self {
        let mut m = Matrix6::zeros();
        let mut idx = 0;
        for i in 0..6 {
            for j in i..6 {
                m[(i, j)] = theta[idx];
                m[(j, i)] = theta[idx];
                idx += 1;
            }
        }
        let mut dl = Vector6::zeros();
        let mut dq = Vector6::zeros();
        let mut g = Vector6::zeros();
        for j in 0..6 {
            dl[j] = theta[21 + j];
            dq[j] = theta[27 + j];
            g[j] = theta[33 + j];
        }
        HydroParams {
            mass_matrix: m,
            drag_linear: dl,
            drag_quadratic: dq,
            restoring: g,
        }
    }

    /// Config-time admissibility: SPD mass, non-negative drag, finite values.
    pub fn check(&self, label: &str, violations: &mut Vec<String>) {
        if self.mass_matrix.iter().any(|x| !x.is_finite())
            || self.drag_linear.iter().any(|x| !x.is_finite())
            || self.drag_quadratic.iter().any(|x| !x.is_finite())
            || self.restoring.iter().any(|x| !x.is_finite())
        {
            violations.push(format!("{label}: non-finite hydrodynamic coefficient"));
            return;
        }
        let sym = (self.mass_matrix - self.mass_matrix.transpose()).norm();
        if sym > 1e-9 {
            violations.push(format!("{label}: mass matrix is not symmetric"));
        }
        if !is_spd(&self.mass_matrix) {
            violations.push(format!("{label}: mass matrix is not positive definite"));
        }
        if self.drag_linear.iter().chain(self.drag_quadratic.iter()).any(|&d| d < 0.0) {
            violations.push(format!("{label}: drag coefficients must be non-negative"));
        }
    }
}

pub fn is_spd(m: &Matrix6<f64>) -> bool {
    (m - m.transpose()).norm() < 1e-9 * (1.0 + m.norm()) && m.symmetric_eigenvalues().min() > 0.0
}

/// Mass matrix, Coriolis, drag and restoring terms of one body at one state.
#[derive(Debug, Clone)]
pub struct BodyTerms {
    pub mass: Matrix6<f64>,
    pub coriolis: Matrix6<f64>,
    pub drag: Matrix6<f64>,
    pub restoring: Vector6<f64>,
}

impl BodyTerms {
    /// Bias force `C v + D v + g` for a velocity in this frame.
    pub fn bias_force(&self, v: &Vector6<f64>) -> Vector6<f64> {
        self.coriolis * v + self.drag * v + self.restoring
    }
}

/// Object-frame model terms of the object itself, with the force-level
/// products (`C v`, `D v`) evaluated at its own velocity.
#[derive(Debug, Clone)]
pub struct ObjectTerms {
    pub mass: Matrix6<f64>,
    pub coriolis_force: Vector6<f64>,
    pub drag_force: Vector6<f64>,
    pub restoring: Vector6<f64>,
}

impl ObjectTerms {
    pub fn bias_force(&self) -> Vector6<f64> {
        self.coriolis_force + self.drag_force + self.restoring
    }
}

/// Newton-Euler terms of the object at the given state.
pub fn object_terms(pose: &Pose6, twist: &Twist6, p: &HydroParams) -> ObjectTerms {
    let v = twist.to_vector();
    ObjectTerms {
        mass: p.mass_matrix,
        coriolis_force: p.coriolis(&v) * v,
        drag_force: p.drag_matrix(&v) * v,
        restoring: p.restoring_wrench(&pose.rotation()),
    }
}

/// Full matrix form of one body's terms (used by the coupled solve).
pub fn body_terms(rot: &Matrix3<f64>, v: &Vector6<f64>, p: &HydroParams) -> BodyTerms {
    BodyTerms {
        mass: p.mass_matrix,
        coriolis: p.coriolis(v),
        drag: p.drag_matrix(v),
        restoring: p.restoring_wrench(rot),
    }
}

/// A robot's task-space terms congruence-transformed to object coordinates:
/// `M_i = J^T M_v J`, `C_i = J^T (C_v(J v) J + M_v Jdot)`,
/// `D_i = J^T D_v(J v) J`, `g_i = J^T g_v`.
///
/// `v_o` is the object velocity; the robot's own velocity is `J v_o`. With a
/// constant grasp offset `grasp_dot` is zero, but the general form is kept.
pub fn robot_object_frame_terms(
    rot: &Matrix3<f64>,
    v_o: &Vector6<f64>,
    grasp: &Grasp,
    grasp_dot: &Matrix6<f64>,
    p: &HydroParams,
) -> Result<BodyTerms, SimError> {
    if grasp.jac.determinant().abs() < 1e-12 {
        return Err(SimError::RankDeficientJacobian);
    }
    let j = &grasp.jac;
    let jt = &grasp.jac_t;
    let v_robot = j * v_o;
    Ok(BodyTerms {
        mass: jt * p.mass_matrix * j,
        coriolis: jt * (p.coriolis(&v_robot) * j + p.mass_matrix * grasp_dot),
        drag: jt * p.drag_matrix(&v_robot) * j,
        restoring: jt * p.restoring_wrench(rot),
    })
}

/// Maps the upper-triangle mass parameters to `M w`: `L(w) theta_M = M w`.
fn mass_product_coefficients(w: &Vector6<f64>) -> SMatrix<f64, 6, 21> {
    let mut l = SMatrix::<f64, 6, 21>::zeros();
    let mut idx = 0;
    for i in 0..6 {
        for j in i..6 {
            l[(i, idx)] += w[j];
            if i != j {
                l[(j, idx)] += w[i];
            }
            idx += 1;
        }
    }
    l
}

/// `C(v_b) w = B(w) (M v_b)` with `B(w) = [[S(w2), 0], [S(w1), S(w2)]]`.
fn coriolis_product_map(w: &Vector6<f64>) -> Matrix6<f64> {
    let w1 = skew(&Vector3::new(w[0], w[1], w[2]));
    let w2 = skew(&Vector3::new(w[3], w[4], w[5]));
    let mut b = Matrix6::zeros();
    b.fixed_view_mut::<3, 3>(0, 0).copy_from(&w2);
    b.fixed_view_mut::<3, 3>(3, 0).copy_from(&w1);
    b.fixed_view_mut::<3, 3>(3, 3).copy_from(&w2);
    b
}

/// Regressor of one body's object-frame dynamics. For the object itself the
/// grasp is the identity.
#[derive(Debug, Clone, Copy)]
pub struct Regressor {
    pub grasp: Grasp,
}

impl Regressor {
    pub fn identity() -> Self {
        Regressor {
            grasp: Grasp::new(Vector3::zeros()),
        }
    }

    pub fn for_grasp(grasp: Grasp) -> Self {
        Regressor { grasp }
    }

    /// `Omega(a, b, c, d)` such that
    /// `Omega theta = M_i(a) d + C_i(a, b) c + D_i(a, b) c + g_i(a)`
    /// for every admissible parameter vector, where `a` fixes the
    /// orientation, `b` the velocity the matrices are evaluated at, `c` the
    /// multiplied velocity and `d` the acceleration.
    pub fn eval(
        &self,
        rot: &Matrix3<f64>,
        b: &Vector6<f64>,
        c: &Vector6<f64>,
        d: &Vector6<f64>,
    ) -> RegressorMatrix {
        let j = &self.grasp.jac;
        let jt = &self.grasp.jac_t;
        let vb = j * b;
        let vc = j * c;
        let vd = j * d;

        let mut omega = RegressorMatrix::zeros();
        // Mass columns: M_v vd + C_v(vb) vc, both linear in theta_M.
        let mass_cols = mass_product_coefficients(&vd)
            + coriolis_product_map(&vc) * mass_product_coefficients(&vb);
        omega.fixed_view_mut::<6, 21>(0, 0).copy_from(&(jt * mass_cols));
        // Drag columns.
        for k in 0..6 {
            let mut col = Vector6::zeros();
            col[k] = vc[k];
            omega.set_column(21 + k, &(jt * col));
            let mut colq = Vector6::zeros();
            colq[k] = vb[k].abs() * vc[k];
            omega.set_column(27 + k, &(jt * colq));
        }
        // Restoring columns: world force block, body-resolved torque block.
        let rt = rot.transpose();
        for k in 0..3 {
            let mut col = Vector6::zeros();
            col[k] = 1.0;
            omega.set_column(33 + k, &(jt * col));
            let mut colt = Vector6::zeros();
            colt.fixed_rows_mut::<3>(3).copy_from(&rt.column(k));
            omega.set_column(36 + k, &(jt * colt));
        }
        omega
    }
}

/// Sea-current disturbance model. The task-space disturbance of a body is
/// `Delta_v(t) theta_d` with
/// `Delta_v(t) = [u_cx(t) I | u_cy(t) I | I]`, where `u_c` are the current
/// velocity components; the constant block carries steady offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceModel {
    /// Current velocity amplitudes [m/s].
    pub current_amplitude: Vector2<f64>,
    /// Current angular frequency [rad/s].
    pub current_frequency: f64,
    /// Parameter vector of the disturbance wrench acting on the object.
    pub theta_d: DisturbanceTheta,
}

impl DisturbanceModel {
    /// Horizontal sea-current velocity at time `t`.
    pub fn current_velocity(&self, t: f64) -> Vector2<f64> {
        Vector2::new(
            self.current_amplitude.x * (self.current_frequency * t).sin(),
            self.current_amplitude.y * (self.current_frequency * t).cos(),
        )
    }

    /// Task-space disturbance regressor at time `t`.
    pub fn regressor_task(&self, t: f64) -> DisturbanceRegressor {
        let u = self.current_velocity(t);
        let mut delta = DisturbanceRegressor::zeros();
        for k in 0..6 {
            delta[(k, k)] = u.x;
            delta[(k, 6 + k)] = u.y;
            delta[(k, 12 + k)] = 1.0;
        }
        delta
    }

    /// Object-frame disturbance regressor of one robot: `J^T Delta_v(t)`.
    pub fn regressor(&self, grasp: &Grasp, t: f64) -> DisturbanceRegressor {
        grasp.jac_t * self.regressor_task(t)
    }

    /// External disturbance wrench acting on the object.
    pub fn lambda_e(&self, t: f64) -> Vector6<f64> {
        self.regressor_task(t) * self.theta_d
    }

    /// Upper bound on the regressor norm, valid for all `t`.
    pub fn regressor_bound(&self) -> f64 {
        // Each row has entries (Ax sin, Ay cos, 1) in distinct columns.
        (6.0 * (self.current_amplitude.x.powi(2) + self.current_amplitude.y.powi(2) + 1.0)).sqrt()
    }
}

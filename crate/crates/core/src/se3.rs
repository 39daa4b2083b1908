//! Rigid-body kinematics shared by every other module: Euler-angle and
//! rotation conversions, representation Jacobians, grasp-offset Jacobians,
//! the grasp matrix and pose/orientation error computations.
//!
//! Conventions. A pose is position plus roll-pitch-yaw Euler angles
//! (rotation about x, then y, then z: `R = Rz(yaw) * Ry(pitch) * Rx(roll)`).
//! A generalized velocity stacks the world-frame linear velocity of the frame
//! origin over the body-frame angular velocity; Euler rates follow from the
//! angular velocity through [`euler_rate_matrix`]. Wrenches are conjugate to
//! that velocity: world-frame force over body-frame torque.

use nalgebra::{DMatrix, Matrix3, Matrix6, Vector3, Vector6};

use crate::error::SimError;

/// Margin kept between |pitch| and pi/2 before a representation Jacobian is
/// declared singular. Keeps cond(J') bounded for the integrator.
pub const SINGULARITY_MARGIN: f64 = 1e-3;

/// Position + Euler orientation of a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose6 {
    /// Position in the inertial frame [m].
    pub position: Vector3<f64>,
    /// Roll, pitch, yaw [rad].
    pub euler: Vector3<f64>,
}

impl Pose6 {
    pub fn new(position: Vector3<f64>, euler: Vector3<f64>) -> Self {
        Pose6 { position, euler }
    }

    pub fn zero() -> Self {
        Pose6 {
            position: Vector3::zeros(),
            euler: Vector3::zeros(),
        }
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        rotation_from_euler(&self.euler)
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        stack(&self.position, &self.euler)
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Pose6 {
            position: v.fixed_rows::<3>(0).into(),
            euler: v.fixed_rows::<3>(3).into(),
        }
    }
}

/// 6-D generalized velocity: world-frame linear part, body-frame angular part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist6 {
    pub linear: Vector3<f64>,
    pub angular: Vector3<f64>,
}

impl Twist6 {
    pub fn new(linear: Vector3<f64>, angular: Vector3<f64>) -> Self {
        Twist6 { linear, angular }
    }

    pub fn zero() -> Self {
        Twist6 {
            linear: Vector3::zeros(),
            angular: Vector3::zeros(),
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        stack(&self.linear, &self.angular)
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Twist6 {
            linear: v.fixed_rows::<3>(0).into(),
            angular: v.fixed_rows::<3>(3).into(),
        }
    }
}

/// 6-D generalized force: world-frame force, body-frame torque.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench6 {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl Wrench6 {
    pub fn new(force: Vector3<f64>, torque: Vector3<f64>) -> Self {
        Wrench6 { force, torque }
    }

    pub fn zero() -> Self {
        Wrench6 {
            force: Vector3::zeros(),
            torque: Vector3::zeros(),
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        stack(&self.force, &self.torque)
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Wrench6 {
            force: v.fixed_rows::<3>(0).into(),
            torque: v.fixed_rows::<3>(3).into(),
        }
    }
}

/// Constant offset of an end-effector with respect to the object frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspOffset(pub Vector3<f64>);

fn stack(a: &Vector3<f64>, b: &Vector3<f64>) -> Vector6<f64> {
    Vector6::new(a.x, a.y, a.z, b.x, b.y, b.z)
}

/// Rotation matrix from roll-pitch-yaw Euler angles.
///
/// Columns are the frame axes (n, o, a) expressed in the inertial frame.
pub fn rotation_from_euler(euler: &Vector3<f64>) -> Matrix3<f64> {
    let (sr, cr) = euler.x.sin_cos();
    let (sp, cp) = euler.y.sin_cos();
    let (sy, cy) = euler.z.sin_cos();
    Matrix3::new(
        cy * cp,
        cy * sp * sr - sy * cr,
        cy * sp * cr + sy * sr,
        sy * cp,
        sy * sp * sr + cy * cr,
        sy * sp * cr - cy * sr,
        -sp,
        cp * sr,
        cp * cr,
    )
}

fn check_pitch(euler: &Vector3<f64>) -> Result<(), SimError> {
    if euler.y.abs() >= std::f64::consts::FRAC_PI_2 - SINGULARITY_MARGIN {
        return Err(SimError::SingularOrientation {
            pitch: euler.y,
            margin: SINGULARITY_MARGIN,
        });
    }
    Ok(())
}

/// 3x3 map from body-frame angular velocity to Euler-angle rates.
pub fn euler_rate_matrix(euler: &Vector3<f64>) -> Result<Matrix3<f64>, SimError> {
    check_pitch(euler)?;
    let (sr, cr) = euler.x.sin_cos();
    let (sp, cp) = euler.y.sin_cos();
    let tp = sp / cp;
    Ok(Matrix3::new(
        1.0,
        sr * tp,
        cr * tp,
        0.0,
        cr,
        -sr,
        0.0,
        sr / cp,
        cr / cp,
    ))
}

/// Inverse of [`euler_rate_matrix`]: body-frame angular velocity from Euler
/// rates.
pub fn euler_rate_matrix_inv(euler: &Vector3<f64>) -> Result<Matrix3<f64>, SimError> {
    check_pitch(euler)?;
    let (sr, cr) = euler.x.sin_cos();
    let (sp, cp) = euler.y.sin_cos();
    Ok(Matrix3::new(
        1.0, 0.0, -sp, //
        0.0, cr, sr * cp, //
        0.0, -sr, cr * cp,
    ))
}

/// Time derivative of [`euler_rate_matrix`] given the Euler rates.
pub fn euler_rate_matrix_dot(
    euler: &Vector3<f64>,
    euler_rates: &Vector3<f64>,
) -> Result<Matrix3<f64>, SimError> {
    check_pitch(euler)?;
    let (sr, cr) = euler.x.sin_cos();
    let (sp, cp) = euler.y.sin_cos();
    let tp = sp / cp;
    let sec2 = 1.0 / (cp * cp);
    let d_roll = Matrix3::new(
        0.0,
        cr * tp,
        -sr * tp,
        0.0,
        -sr,
        -cr,
        0.0,
        cr / cp,
        -sr / cp,
    );
    let d_pitch = Matrix3::new(
        0.0,
        sr * sec2,
        cr * sec2,
        0.0,
        0.0,
        0.0,
        0.0,
        sr * sp * sec2,
        cr * sp * sec2,
    );
    Ok(d_roll * euler_rates.x + d_pitch * euler_rates.y)
}

/// 6x6 representation Jacobian `diag(I, J')` mapping a generalized velocity
/// to the pose rate.
pub fn euler_rate_jacobian(euler: &Vector3<f64>) -> Result<Matrix6<f64>, SimError> {
    let jp = euler_rate_matrix(euler)?;
    let mut j = Matrix6::identity();
    j.fixed_view_mut::<3, 3>(3, 3).copy_from(&jp);
    Ok(j)
}

/// Inverse of the 6x6 representation Jacobian.
pub fn euler_rate_jacobian_inv(euler: &Vector3<f64>) -> Result<Matrix6<f64>, SimError> {
    let jp = euler_rate_matrix_inv(euler)?;
    let mut j = Matrix6::identity();
    j.fixed_view_mut::<3, 3>(3, 3).copy_from(&jp);
    Ok(j)
}

/// Pose rate from a generalized velocity.
pub fn pose_rate(pose: &Pose6, twist: &Twist6) -> Result<Vector6<f64>, SimError> {
    let jp = euler_rate_matrix(&pose.euler)?;
    Ok(stack(&twist.linear, &(jp * twist.angular)))
}

/// Skew-symmetric matrix `S(l)` with `S(l) v = l x v`.
pub fn skew(l: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -l.z, l.y, l.z, 0.0, -l.x, -l.y, l.x, 0.0)
}

/// Jacobian from an end-effector frame to the object frame for a rigid grasp
/// at constant offset `l`: `[[I, -S(l)], [0, I]]`.
pub fn grasp_jacobian(l: &GraspOffset) -> Matrix6<f64> {
    let mut j = Matrix6::identity();
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-skew(&l.0)));
    j
}

/// Precomputed grasp transforms for one robot. The Jacobian of a rigid grasp
/// is unit upper-triangular, so its inverse is exact.
#[derive(Debug, Clone, Copy)]
pub struct Grasp {
    pub offset: Vector3<f64>,
    pub jac: Matrix6<f64>,
    pub jac_t: Matrix6<f64>,
    pub jac_inv: Matrix6<f64>,
    pub jac_inv_t: Matrix6<f64>,
}

impl Grasp {
    pub fn new(offset: Vector3<f64>) -> Self {
        let jac = grasp_jacobian(&GraspOffset(offset));
        let jac_inv = grasp_jacobian(&GraspOffset(-offset));
        Grasp {
            offset,
            jac,
            jac_t: jac.transpose(),
            jac_inv,
            jac_inv_t: jac_inv.transpose(),
        }
    }
}

/// Stacked grasp matrix `G` of the whole team, one 6x6 block per robot.
pub fn grasp_matrix(offsets: &[GraspOffset]) -> DMatrix<f64> {
    assert!(!offsets.is_empty(), "grasp matrix needs at least one robot");
    let mut g = DMatrix::zeros(6 * offsets.len(), 6);
    for (i, l) in offsets.iter().enumerate() {
        g.view_mut((6 * i, 0), (6, 6)).copy_from(&grasp_jacobian(l));
    }
    g
}

/// Orientation error in the outer-product formulation,
/// `1/2 (n x n_d + o x o_d + a x a_d)` over the columns of both rotations.
///
/// Zero iff the rotations coincide (within the formulation's domain); for a
/// small relative rotation it points from the current orientation toward the
/// desired one.
pub fn orientation_error(rot: &Matrix3<f64>, rot_d: &Matrix3<f64>) -> Vector3<f64> {
    let mut e = Vector3::zeros();
    for k in 0..3 {
        let c: Vector3<f64> = rot.column(k).into();
        let cd: Vector3<f64> = rot_d.column(k).into();
        e += c.cross(&cd);
    }
    0.5 * e
}

/// Object pose error: position difference stacked over the orientation error.
///
/// Both components vanish at the target and point from the desired pose
/// toward the current one, so a spring term `-K e` is corrective on all six
/// axes. The orientation part is therefore [`orientation_error`] with the
/// frames swapped (its exact negation).
pub fn pose_error(pose: &Pose6, pose_d: &Pose6) -> Vector6<f64> {
    let e_ori = orientation_error(&pose_d.rotation(), &pose.rotation());
    stack(&(pose.position - pose_d.position), &e_ori)
}

/// Analytic time derivative of [`pose_error`] given both twists.
pub fn pose_error_rate(
    pose: &Pose6,
    twist: &Twist6,
    pose_d: &Pose6,
    twist_d: &Twist6,
) -> Vector6<f64> {
    let rot = pose.rotation();
    let rot_d = pose_d.rotation();
    // Column rates from R-dot = R S(omega_body).
    let cdot = rot * skew(&twist.angular);
    let cdot_d = rot_d * skew(&twist_d.angular);
    let mut e_dot = Vector3::zeros();
    for k in 0..3 {
        let c: Vector3<f64> = rot.column(k).into();
        let cd: Vector3<f64> = rot_d.column(k).into();
        let dc: Vector3<f64> = cdot.column(k).into();
        let dcd: Vector3<f64> = cdot_d.column(k).into();
        // d/dt (c_d x c) = c_d-dot x c + c_d x c-dot
        e_dot += dcd.cross(&c) + cd.cross(&dc);
    }
    stack(&(twist.linear - twist_d.linear), &(0.5 * e_dot))
}

/// Transports an object twist to an end-effector frame through the rigid
/// grasp: linear part picks up `-l x omega`, angular part is unchanged.
pub fn transform_twist(v: &Twist6, l: &GraspOffset) -> Twist6 {
    Twist6 {
        linear: v.linear - l.0.cross(&v.angular),
        angular: v.angular,
    }
}

//! Rotation and rigid-transform algebra.
//!
//! Rotations are stored as 3x3 orthonormal matrices because the tool model
//! extracts frame axes (columns) in its hot path; unit-quaternion conversion
//! is provided only for the serialization boundary. The rotation
//! exponential/logarithm and the [`retract`] chart are what the inverse
//! solver iterates over.
//!
//! Conventions:
//! - rotation vectors have norm in [0, pi];
//! - at exactly pi the axis sign is fixed so its first nonzero component is
//!   positive, and the axis is extracted from the largest diagonal element
//!   of the symmetric part (deterministic at the branch cut);
//! - `sign(0) = +1` wherever a sign term appears.

use nalgebra::{Matrix3, Vector3};

use crate::error::KinError;

/// Frobenius tolerance for the `Rotation` type invariant (checked constructors).
pub const ROTATION_INVARIANT_TOL: f64 = 1e-9;
/// Looser tolerance at which [`rot_log`] rejects its input outright.
pub const ROTATION_LOG_TOL: f64 = 1e-6;

/// Below this rotation-vector norm, [`rot_exp`] switches to its series form.
const EXP_SERIES_NORM: f64 = 1e-10;
/// Below this angle, [`rot_log`] uses the small-angle series.
const LOG_SMALL_ANGLE: f64 = 1e-7;
/// cos(theta) below this switches [`rot_log`] to the symmetric near-pi branch.
const LOG_NEAR_PI_COS: f64 = -0.99;

/// A 3D rotation, stored as a 3x3 orthonormal matrix with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Wraps a matrix after checking the orthonormality invariant at
    /// [`ROTATION_INVARIANT_TOL`].
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, KinError> {
        let deviation = orthonormality_deviation(&m);
        if !deviation.is_finite() || deviation > ROTATION_INVARIANT_TOL {
            return Err(KinError::NonOrthonormal {
                deviation,
                tolerance: ROTATION_INVARIANT_TOL,
            });
        }
        Ok(Rotation(m))
    }

    /// Wraps a matrix that is known to be orthonormal (e.g. a product of
    /// rotations). No check is performed.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rotation(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// First column: the rotated x axis.
    pub fn x_axis(&self) -> Vector3<f64> {
        self.0.column(0).into()
    }

    /// Second column: the rotated y axis.
    pub fn y_axis(&self) -> Vector3<f64> {
        self.0.column(1).into()
    }

    /// Third column: the rotated z axis.
    pub fn z_axis(&self) -> Vector3<f64> {
        self.0.column(2).into()
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0 * other.0)
    }

    pub fn inverse(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Rotation about the x axis.
    pub fn rot_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
    }

    /// Rotation about the y axis.
    pub fn rot_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
    }

    /// Rotation about the z axis.
    pub fn rot_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// Unit quaternion in (w, x, y, z) order. Serialization boundary only.
    pub fn to_quaternion_wxyz(&self) -> [f64; 4] {
        let m = &self.0;
        let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        // Shepperd's method: pick the numerically largest pivot.
        let (w, x, y, z);
        if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            w = 0.25 * s;
            x = (m[(2, 1)] - m[(1, 2)]) / s;
            y = (m[(0, 2)] - m[(2, 0)]) / s;
            z = (m[(1, 0)] - m[(0, 1)]) / s;
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            w = (m[(2, 1)] - m[(1, 2)]) / s;
            x = 0.25 * s;
            y = (m[(0, 1)] + m[(1, 0)]) / s;
            z = (m[(0, 2)] + m[(2, 0)]) / s;
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            w = (m[(0, 2)] - m[(2, 0)]) / s;
            x = (m[(0, 1)] + m[(1, 0)]) / s;
            y = 0.25 * s;
            z = (m[(1, 2)] + m[(2, 1)]) / s;
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            w = (m[(1, 0)] - m[(0, 1)]) / s;
            x = (m[(0, 2)] + m[(2, 0)]) / s;
            y = (m[(1, 2)] + m[(2, 1)]) / s;
            z = 0.25 * s;
        }
        // Canonical sign: w >= 0.
        if w < 0.0 {
            [-w, -x, -y, -z]
        } else {
            [w, x, y, z]
        }
    }

    /// Builds a rotation from a (w, x, y, z) quaternion, normalizing first.
    pub fn from_quaternion_wxyz(q: [f64; 4]) -> Result<Self, KinError> {
        let norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(KinError::InvalidInput("quaternion has near-zero norm"));
        }
        let (w, x, y, z) = (q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm);
        let m = Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        );
        Ok(Rotation(m))
    }

    /// Frobenius deviation from orthonormality plus determinant error.
    pub fn orthonormality_deviation(&self) -> f64 {
        orthonormality_deviation(&self.0)
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        self.compose(&rhs)
    }
}

fn orthonormality_deviation(m: &Matrix3<f64>) -> f64 {
    let gram = m.transpose() * m - Matrix3::identity();
    let det_err = (m.determinant() - 1.0).abs();
    gram.norm().max(det_err)
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rodrigues rotation about `v / |v|` by `|v|` radians.
///
/// Falls back to a second-order series below [`EXP_SERIES_NORM`]; in
/// particular `rot_exp(0)` is exactly the identity.
pub fn rot_exp(v: Vector3<f64>) -> Result<Rotation, KinError> {
    if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
        return Err(KinError::InvalidInput("rotation vector must be finite"));
    }
    let theta_sq = v.norm_squared();
    let theta = theta_sq.sqrt();
    let (a, b) = if theta < EXP_SERIES_NORM {
        (1.0 - theta_sq / 6.0, 0.5 - theta_sq / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta_sq)
    };
    let k = skew(&v);
    Ok(Rotation(Matrix3::identity() + k * a + k * k * b))
}

/// Rotation vector of `r` with norm in [0, pi].
///
/// The angle comes from `atan2(|skew part|, (trace-1)/2)`, which stays well
/// conditioned at both ends of the range; near pi the axis is recovered from
/// the symmetric part `(R + R^T)/2`, which avoids the cancellation in the
/// skew part there.
pub fn rot_log(r: &Rotation) -> Result<Vector3<f64>, KinError> {
    let deviation = r.orthonormality_deviation();
    if !deviation.is_finite() || deviation > ROTATION_LOG_TOL {
        return Err(KinError::NonOrthonormal {
            deviation,
            tolerance: ROTATION_LOG_TOL,
        });
    }
    let m = r.matrix();
    // w = sin(theta) * axis
    let w = 0.5
        * Vector3::new(
            m[(2, 1)] - m[(1, 2)],
            m[(0, 2)] - m[(2, 0)],
            m[(1, 0)] - m[(0, 1)],
        );
    let s = w.norm();
    let c = ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let theta = s.atan2(c);

    if theta < LOG_SMALL_ANGLE {
        // v = w * theta/sin(theta) expanded to second order.
        let t2 = theta * theta;
        return Ok(w * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0));
    }
    if c > LOG_NEAR_PI_COS {
        return Ok(w * (theta / s));
    }

    // Near pi: (R + R^T)/2 = c*I + (1-c) * n n^T, so recover n n^T directly.
    let sym = (m + m.transpose()) * 0.5;
    let outer = (sym - Matrix3::identity() * c) / (1.0 - c);
    let k = {
        let d = outer.diagonal();
        if d.x >= d.y && d.x >= d.z {
            0
        } else if d.y >= d.z {
            1
        } else {
            2
        }
    };
    let col: Vector3<f64> = outer.column(k).into();
    let mut axis = col / outer[(k, k)].max(f64::MIN_POSITIVE).sqrt();
    let norm = axis.norm();
    if norm < 1e-12 {
        return Err(KinError::DegenerateGeometry(
            "rotation logarithm axis extraction failed",
        ));
    }
    axis /= norm;
    if s > 1e-12 {
        // Align with the skew part while it still carries sign information.
        if axis.dot(&w) < 0.0 {
            axis = -axis;
        }
    } else {
        // Exactly at pi: first nonzero component positive.
        for i in 0..3 {
            if axis[i] != 0.0 {
                if axis[i] < 0.0 {
                    axis = -axis;
                }
                break;
            }
        }
    }
    Ok(axis * theta)
}

/// A rigid transform: rotation followed by translation (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Rotation,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Rotation::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Rotation, translation: Vector3<f64>) -> Self {
        Pose {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Pose {
            rotation: Rotation::identity(),
            translation,
        }
    }

    /// `self` applied after `other`: `(self * other)(p) = self(other(p))`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation.compose(&other.rotation),
            translation: self.rotation.rotate(&other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rot_inv = self.rotation.inverse();
        Pose {
            translation: -rot_inv.rotate(&self.translation),
            rotation: rot_inv,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(p) + self.translation
    }
}

impl std::ops::Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

/// Local chart coordinates around a pose: a translation delta (meters) and a
/// body-frame rotation vector (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist6 {
    pub translation: Vector3<f64>,
    pub rotation: Vector3<f64>,
}

impl Twist6 {
    pub fn zero() -> Self {
        Twist6 {
            translation: Vector3::zeros(),
            rotation: Vector3::zeros(),
        }
    }

    pub fn new(translation: Vector3<f64>, rotation: Vector3<f64>) -> Self {
        Twist6 {
            translation,
            rotation,
        }
    }

    pub fn from_slice(v: &[f64; 6]) -> Self {
        Twist6 {
            translation: Vector3::new(v[0], v[1], v[2]),
            rotation: Vector3::new(v[3], v[4], v[5]),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.translation.norm_squared() + self.rotation.norm_squared()).sqrt()
    }
}

/// Moves `pose` by the chart coordinates `delta`: translation adds, rotation
/// right-multiplies by `rot_exp(delta.rotation)`.
///
/// `retract(pose, 0)` returns `pose` exactly, and the map is smooth and
/// locally bijective around zero.
pub fn retract(pose: &Pose, delta: &Twist6) -> Result<Pose, KinError> {
    if !(delta.translation.x.is_finite()
        && delta.translation.y.is_finite()
        && delta.translation.z.is_finite())
    {
        return Err(KinError::InvalidInput("twist translation must be finite"));
    }
    Ok(Pose {
        rotation: pose.rotation.compose(&rot_exp(delta.rotation)?),
        translation: pose.translation + delta.translation,
    })
}

/// Chart coordinates of `target` around `base`: the exact inverse of
/// [`retract`] whenever the relative rotation stays below pi.
pub fn local_twist(base: &Pose, target: &Pose) -> Result<Twist6, KinError> {
    let rel = base.rotation.inverse().compose(&target.rotation);
    Ok(Twist6 {
        translation: target.translation - base.translation,
        rotation: rot_log(&rel)?,
    })
}

//! Generic serial-chain forward kinematics.
//!
//! Joints are axis-plus-origin (URDF-style semantics): each joint contributes
//! `origin * motion(q)` where motion is a rotation about, or translation
//! along, the joint axis in the parent frame. This drives the handle pose
//! from a joint vector without committing to any particular robot.

use nalgebra::Vector3;

use crate::error::KinError;
use crate::se3::{rot_exp, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// One joint: fixed origin transform, then motion about/along `axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub kind: JointKind,
    /// Unit axis in the parent frame.
    pub axis: Vector3<f64>,
    /// Fixed transform from the parent joint frame.
    pub origin: Pose,
    /// Advisory limits (min, max), radians or meters.
    pub limits: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    pub joints: Vec<JointSpec>,
    /// Final fixed transform after the last joint.
    pub ee_offset: Pose,
}

/// Forward-kinematics output: the pose plus indices of joints whose
/// advisory limits were exceeded (the pose is still computed).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainFkResult {
    pub pose: Pose,
    pub limit_warnings: Vec<usize>,
}

impl ChainModel {
    pub fn validate(&self) -> Result<(), KinError> {
        if self.joints.is_empty() {
            return Err(KinError::InvalidInput("chain must have at least one joint"));
        }
        for joint in &self.joints {
            if (joint.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(KinError::InvalidInput("joint axis must be a unit vector"));
            }
            if let Some((lo, hi)) = joint.limits {
                if !(lo < hi) {
                    return Err(KinError::InvalidInput(
                        "joint limits must satisfy min < max",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Composes per-joint transforms left to right, then the end-effector offset.
pub fn chain_fk(model: &ChainModel, q: &[f64]) -> Result<ChainFkResult, KinError> {
    model.validate()?;
    if q.len() != model.joints.len() {
        return Err(KinError::DimensionMismatch {
            expected: model.joints.len(),
            got: q.len(),
        });
    }
    let mut pose = Pose::identity();
    let mut limit_warnings = Vec::new();
    for (i, (joint, &value)) in model.joints.iter().zip(q).enumerate() {
        if !value.is_finite() {
            return Err(KinError::InvalidInput("joint value must be finite"));
        }
        if let Some((lo, hi)) = joint.limits {
            if value < lo || value > hi {
                limit_warnings.push(i);
            }
        }
        let motion = match joint.kind {
            JointKind::Revolute => Pose::new(rot_exp(joint.axis * value)?, Vector3::zeros()),
            JointKind::Prismatic => Pose::from_translation(joint.axis * value),
        };
        pose = pose.compose(&joint.origin).compose(&motion);
    }
    Ok(ChainFkResult {
        pose: pose.compose(&model.ee_offset),
        limit_warnings,
    })
}

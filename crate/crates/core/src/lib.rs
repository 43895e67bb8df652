//! Kinematics of manually-wristed laparoscopic instruments held by a robot arm.
//!
//! A manual wristed instrument has no actuated joints: its distal tip
//! articulation is driven entirely by the pose of the handle relative to the
//! trocar point (the remote center of motion, RCM). This crate models that
//! passive chain and inverts it:
//!
//! - [`se3`]: rotation / rigid-transform algebra and the 6-parameter local
//!   chart used by the solver.
//! - [`tool`]: the forward passive-kinematics model — handle pose + RCM point
//!   in, passive bend angles and tool-tip pose out — plus the jaw mapping.
//! - [`chain`]: generic serial-chain forward kinematics for driving the
//!   handle from a joint vector.
//! - [`ik`]: the inverse mapping — desired tip pose in, handle / end-effector
//!   pose out — via trust-region nonlinear least squares with soft angle
//!   limits.
//! - [`teleop`]: the streaming console-to-robot pipeline (registration,
//!   clutching, motion scaling, warm-started IK).
//!
//! All angles are radians and all lengths are meters; degrees appear only at
//! configuration and file boundaries, which live in the companion CLI crate.

// Validation predicates use negated comparisons so NaN inputs fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod error;
pub mod ik;
pub mod se3;
pub mod teleop;
pub mod tool;

pub use error::KinError;
pub use se3::{Pose, Rotation, Twist6};

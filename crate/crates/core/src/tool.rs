//! Forward passive kinematics of a manually-wristed laparoscopic instrument.
//!
//! The instrument has no actuated joints. Its configuration is fully
//! determined by the pose of handle 1 (the frame the robot grips) and the
//! remote-center-of-motion point the shaft must pass through:
//!
//! 1. the first bend angle comes from the law of cosines on the
//!    handle-1 / handle-2 / RCM triangle;
//! 2. handle 2 is placed by a double cross product so the handle-1 to
//!    handle-2 offset stays perpendicular to the handle axis;
//! 3. the tool tip extends the handle-2 -> RCM segment as a rigid link,
//!    so the shaft line passes through the RCM by construction;
//! 4. the second bend angle is measured between the offset and the handle
//!    x axis, signs are resolved, and the tip orientation is assembled from
//!    elementary rotations geared by the ratio `k`.
//!
//! Working bend angles are deflections from the neutral posture
//! (`theta1_raw - theta1_neutral`); the mechanical limit and the gearing
//! apply to deflections.

use nalgebra::Vector3;

use crate::error::KinError;
use crate::se3::{Pose, Rotation};

/// Window around [-1, 1] inside which an arccos argument is clamped
/// silently; beyond it the geometry is reported unreachable.
pub const ARCCOS_CLAMP_WINDOW: f64 = 1e-9;
/// Below this cross-product norm the handle-2 construction is degenerate.
pub const DEGENERACY_EPS: f64 = 1e-10;
/// Fully open jaw angle, degrees.
pub const JAW_MAX_DEG: f64 = 60.0;

/// Frame used by the sign term of the first signed bend angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    /// Compare world-frame z of handle 1 and the RCM (the formula as
    /// published).
    WorldZ,
    /// Project the handle-1 -> RCM offset onto the handle z axis instead;
    /// invariant under a common rigid transform of the whole scene.
    HandleZ,
}

/// Axes of the two elementary tip rotations. `A` carries the first bend,
/// `B` the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisConvention {
    /// A about the local y axis, B about the local z axis (default: the
    /// second bend is measured in the handle x-y plane, so it rotates
    /// about z).
    Yz,
    /// Swapped: A about z, B about y.
    Zy,
}

/// Physical parameters of the instrument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToolGeometry {
    /// Handle-2 to RCM nominal length, meters.
    pub l0: f64,
    /// Offset between handles 1 and 2, meters.
    pub l12: f64,
    /// Handle-2 to tool tip length along the shaft, meters.
    pub l1: f64,
    /// Gearing ratio between handle deflection and tip deflection.
    pub k: f64,
    /// Mechanical deflection limit, radians.
    pub theta_max: f64,
    /// Interior triangle angle at handle 2 in the neutral posture, radians.
    pub theta1_neutral: f64,
    pub sign_convention: SignConvention,
    pub axis_convention: AxisConvention,
}

impl Default for ToolGeometry {
    /// Desk-scale defaults; every numeric test derives its expectations from
    /// whatever geometry is configured, so these are conventions, not truth.
    fn default() -> Self {
        ToolGeometry {
            l0: 0.30,
            l12: 0.05,
            l1: 0.36,
            k: 2.0,
            theta_max: 45.0_f64.to_radians(),
            theta1_neutral: std::f64::consts::FRAC_PI_2,
            sign_convention: SignConvention::WorldZ,
            axis_convention: AxisConvention::Yz,
        }
    }
}

impl ToolGeometry {
    pub fn validate(&self) -> Result<(), KinError> {
        if !(self.l0 > 0.0 && self.l12 > 0.0 && self.l1 > 0.0) {
            return Err(KinError::InvalidInput("link lengths must be positive"));
        }
        if !(self.k > 0.0) {
            return Err(KinError::InvalidInput("gearing ratio must be positive"));
        }
        if !(self.theta_max > 0.0 && self.theta_max <= std::f64::consts::FRAC_PI_2) {
            return Err(KinError::InvalidInput(
                "theta_max must lie in (0, pi/2] radians",
            ));
        }
        if !self.theta1_neutral.is_finite() {
            return Err(KinError::InvalidInput("theta1_neutral must be finite"));
        }
        Ok(())
    }
}

/// The RCM point and the monitoring band for shaft-through-RCM checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcmConfig {
    /// World-frame RCM position, meters.
    pub position: Vector3<f64>,
    /// Allowed shaft-to-RCM distance, meters.
    pub tolerance: f64,
}

impl RcmConfig {
    pub fn validate(&self) -> Result<(), KinError> {
        if !(self.tolerance > 0.0) {
            return Err(KinError::InvalidInput("rcm tolerance must be positive"));
        }
        Ok(())
    }
}

/// Jaw opening command. `clamped` flags an out-of-range grip input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JawCommand {
    /// Opening angle, degrees in [0, 60].
    pub opening_deg: f64,
    pub clamped: bool,
}

/// Everything the forward pass recovers about the passive chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassiveState {
    /// Interior triangle angle at handle 2 (raw arccos output), radians.
    pub theta1_raw: f64,
    /// First bend deflection: `theta1_raw - theta1_neutral`.
    pub theta1: f64,
    /// Second bend angle in [0, pi].
    pub theta2: f64,
    /// Sign-resolved deflections.
    pub theta1_signed: f64,
    pub theta2_signed: f64,
    /// Geared tip angles: `k * |theta1|` and `k * |theta2|`.
    pub theta3: f64,
    pub theta4: f64,
    /// Handle-2 position, meters.
    pub handle2: Vector3<f64>,
    /// Tool-tip position, meters.
    pub tip: Vector3<f64>,
    /// Tool-tip orientation.
    pub tip_rotation: Rotation,
}

type ElementaryRotation = fn(f64) -> Rotation;

fn sign_pos(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Handle-1 pose from the robot end-effector pose and the fixed
/// end-effector -> handle-1 mount transform.
pub fn handle1_from_ee(p_ee: &Pose, t_ee_h1: &Pose) -> Pose {
    p_ee.compose(t_ee_h1)
}

/// Interior triangle angle at handle 2, by the law of cosines on the sides
/// `l12`, `l0` and the handle-1 to RCM distance.
pub fn theta1_interior(
    x_h1: &Vector3<f64>,
    x_rcm: &Vector3<f64>,
    geom: &ToolGeometry,
) -> Result<f64, KinError> {
    let d_sq = (x_rcm - x_h1).norm_squared();
    let arg = (geom.l12 * geom.l12 + geom.l0 * geom.l0 - d_sq) / (2.0 * geom.l12 * geom.l0);
    clamped_acos(arg)
}

fn clamped_acos(arg: f64) -> Result<f64, KinError> {
    if !arg.is_finite() || arg.abs() > 1.0 + ARCCOS_CLAMP_WINDOW {
        return Err(KinError::Unreachable { argument: arg });
    }
    Ok(arg.clamp(-1.0, 1.0).acos())
}

/// Handle-2 position from the handle-1 pose and the RCM point.
///
/// `x_h2 = x_h1 + l12 * n1 x (n1 x n2) / |n1 x (n1 x n2)|` with
/// `n1 = R_h1 z` and `n2 = x_rcm - x_h1`. The construction keeps the offset
/// perpendicular to the handle axis and at length `l12` by normalization.
pub fn solve_handle2(
    p_h1: &Pose,
    x_rcm: &Vector3<f64>,
    geom: &ToolGeometry,
) -> Result<Vector3<f64>, KinError> {
    let n1 = p_h1.rotation.z_axis();
    let n2 = x_rcm - p_h1.translation;
    let inner = n1.cross(&n2);
    if inner.norm() < DEGENERACY_EPS {
        return Err(KinError::DegenerateGeometry(
            "shaft direction parallel to handle axis",
        ));
    }
    let dir = n1.cross(&inner);
    let x_h2 = p_h1.translation + geom.l12 * dir / dir.norm();
    debug_assert!(((x_h2 - p_h1.translation).norm() - geom.l12).abs() < 1e-9);
    debug_assert!(n1.dot(&(p_h1.translation - x_h2)).abs() < 1e-9);
    Ok(x_h2)
}

/// Tool-tip position by rigid extension of the handle-2 -> RCM segment,
/// scaled by the nominal length ratio `l1 / l0`.
pub fn tool_tip_position(
    x_h2: &Vector3<f64>,
    x_rcm: &Vector3<f64>,
    geom: &ToolGeometry,
) -> Result<Vector3<f64>, KinError> {
    let seg = x_rcm - x_h2;
    if seg.norm() < DEGENERACY_EPS {
        return Err(KinError::DegenerateGeometry("handle 2 coincides with RCM"));
    }
    Ok(x_h2 + (geom.l1 / geom.l0) * seg)
}

/// Second bend angle in [0, pi]: angle between the handle-2 -> handle-1
/// offset and the handle x axis.
pub fn theta2_from_vectors(p_h1: &Pose, x_h2: &Vector3<f64>) -> Result<f64, KinError> {
    let v1 = p_h1.translation - x_h2;
    let n = v1.norm();
    if n < DEGENERACY_EPS {
        return Err(KinError::DegenerateGeometry(
            "handle 2 coincides with handle 1",
        ));
    }
    let v2 = p_h1.rotation.x_axis();
    clamped_acos(v1.dot(&v2) / n)
}

/// Sign-resolved bend angles `(theta1_signed, theta2_signed)`.
///
/// The first sign compares handle 1 and the RCM along z (world or handle
/// frame per the configured convention); the second is the orientation of
/// `v1 x v2` against the handle-1 -> RCM direction. `sign(0) = +1`.
pub fn signed_angles(
    p_h1: &Pose,
    x_h2: &Vector3<f64>,
    x_rcm: &Vector3<f64>,
    theta1: f64,
    theta2: f64,
    geom: &ToolGeometry,
) -> (f64, f64) {
    let rel = p_h1.translation - x_rcm;
    let s1 = match geom.sign_convention {
        SignConvention::WorldZ => sign_pos(rel.z),
        SignConvention::HandleZ => sign_pos(rel.dot(&p_h1.rotation.z_axis())),
    };
    let v1 = p_h1.translation - x_h2;
    let v2 = p_h1.rotation.x_axis();
    let n2 = x_rcm - p_h1.translation;
    let s2 = sign_pos(v1.cross(&v2).dot(&n2));
    (s1 * theta1, s2 * theta2)
}

/// Full forward pass: handle-1 pose and RCM point to tool-tip pose plus the
/// recovered passive state.
///
/// The tip orientation is
/// `R_h1 * B(-theta2') * A(-theta1') * A(theta3 * sgn theta1') * B(theta4 * sgn theta2')`
/// with the elementary axes `A`, `B` chosen by the geometry's axis
/// convention. In the neutral posture every factor is the identity and the
/// tip frame equals the handle frame.
pub fn tool_tip_pose(
    p_h1: &Pose,
    x_rcm: &Vector3<f64>,
    geom: &ToolGeometry,
) -> Result<(Pose, PassiveState), KinError> {
    let theta1_raw = theta1_interior(&p_h1.translation, x_rcm, geom)?;
    let theta1 = theta1_raw - geom.theta1_neutral;
    let handle2 = solve_handle2(p_h1, x_rcm, geom)?;
    let tip = tool_tip_position(&handle2, x_rcm, geom)?;
    let theta2 = theta2_from_vectors(p_h1, &handle2)?;
    let (theta1_signed, theta2_signed) = signed_angles(p_h1, &handle2, x_rcm, theta1, theta2, geom);
    let theta3 = geom.k * theta1.abs();
    let theta4 = geom.k * theta2.abs();

    let (rot_a, rot_b): (ElementaryRotation, ElementaryRotation) = match geom.axis_convention {
        AxisConvention::Yz => (Rotation::rot_y, Rotation::rot_z),
        AxisConvention::Zy => (Rotation::rot_z, Rotation::rot_y),
    };
    let tip_rotation = p_h1
        .rotation
        .compose(&rot_b(-theta2_signed))
        .compose(&rot_a(-theta1_signed))
        .compose(&rot_a(theta3 * sign_pos(theta1_signed)))
        .compose(&rot_b(theta4 * sign_pos(theta2_signed)));

    let state = PassiveState {
        theta1_raw,
        theta1,
        theta2,
        theta1_signed,
        theta2_signed,
        theta3,
        theta4,
        handle2,
        tip,
        tip_rotation,
    };
    Ok((Pose::new(tip_rotation, tip), state))
}

/// Residuals of the two length constraints:
/// `(|x_h1 - x_h2| - l12, |x_rcm - x_h2| - l0)`.
///
/// The first vanishes for any handle-2 position produced by
/// [`solve_handle2`]; the second measures how far the current handle pose is
/// from the nominal insertion depth.
pub fn validate_consistency(
    p_h1: &Pose,
    x_h2: &Vector3<f64>,
    x_rcm: &Vector3<f64>,
    geom: &ToolGeometry,
) -> (f64, f64) {
    (
        (p_h1.translation - x_h2).norm() - geom.l12,
        (x_rcm - x_h2).norm() - geom.l0,
    )
}

/// Shortest distance from the RCM point to the shaft line through handle 2
/// and the tip. Monitoring value; near zero by construction.
pub fn shaft_rcm_distance(state: &PassiveState, x_rcm: &Vector3<f64>) -> f64 {
    let dir = state.tip - state.handle2;
    let n = dir.norm();
    if n < DEGENERACY_EPS {
        return (x_rcm - state.handle2).norm();
    }
    (x_rcm - state.handle2).cross(&(dir / n)).norm()
}

/// Linear map from normalized grip in [0, 1] to jaw opening in degrees,
/// 60 denoting fully open. Out-of-range input is clamped and flagged.
pub fn jaw_map(grip: f64) -> JawCommand {
    let clamped = !(0.0..=1.0).contains(&grip);
    let g = if grip.is_nan() { 0.0 } else { grip.clamp(0.0, 1.0) };
    JawCommand {
        opening_deg: JAW_MAX_DEG * g,
        clamped,
    }
}

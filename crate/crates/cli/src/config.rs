//! JSON configuration schema.
//!
//! Angles are degrees and lengths are meters at this boundary; conversion to
//! the radian-based core types happens in the `to_*` methods. Every section
//! and field has a default so a minimal config like `{}` is usable.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use wristkin::chain::{ChainModel, JointKind, JointSpec};
use wristkin::ik::{IkOptions, IkWeights};
use wristkin::se3::{Pose, Rotation};
use wristkin::teleop::TeleopConfig;
use wristkin::tool::{AxisConvention, RcmConfig, SignConvention, ToolGeometry};

use crate::error::HarnessError;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub rcm: RcmSection,
    #[serde(default)]
    pub ik: IkSection,
    #[serde(default)]
    pub teleop: TeleopSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub l0_m: f64,
    pub l12_m: f64,
    pub l1_m: f64,
    pub k: f64,
    pub theta_max_deg: f64,
    pub theta1_neutral_deg: f64,
    /// "world_z" (as published) or "handle_z" (frame-invariant).
    pub sign_convention: String,
    /// "yz" (default) or "zy".
    pub axis_convention: String,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection {
            l0_m: 0.30,
            l12_m: 0.05,
            l1_m: 0.36,
            k: 2.0,
            theta_max_deg: 45.0,
            theta1_neutral_deg: 90.0,
            sign_convention: "world_z".into(),
            axis_convention: "yz".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcmSection {
    pub x_rcm_m: [f64; 3],
    pub tolerance_m: f64,
}

impl Default for RcmSection {
    fn default() -> Self {
        RcmSection {
            x_rcm_m: [0.0, 0.0, 0.35],
            tolerance_m: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IkSection {
    pub w_t: f64,
    pub w_a: f64,
    pub theta_max_deg: f64,
    pub max_iterations: usize,
    pub residual_tol: f64,
    pub step_tol: f64,
    pub trust_radius: f64,
    pub t_offset_m: [f64; 3],
}

impl Default for IkSection {
    fn default() -> Self {
        IkSection {
            w_t: 100.0,
            w_a: 10.0,
            theta_max_deg: 45.0,
            max_iterations: 100,
            residual_tol: 1e-8,
            step_tol: 1e-10,
            trust_radius: 0.1,
            t_offset_m: [0.0, 0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeleopSection {
    pub scale: f64,
    pub registration_pos: [f64; 3],
    /// (w, x, y, z) unit quaternion.
    pub registration_quat: [f64; 4],
}

impl Default for TeleopSection {
    fn default() -> Self {
        TeleopSection {
            scale: 1.0,
            registration_pos: [0.0, 0.0, 0.0],
            registration_quat: [1.0, 0.0, 0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub joints: Vec<JointSection>,
    pub ee_offset_pos: [f64; 3],
    pub ee_offset_quat: [f64; 4],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSection {
    /// "revolute" or "prismatic".
    pub kind: String,
    pub axis: [f64; 3],
    pub origin_pos: [f64; 3],
    pub origin_quat: [f64; 4],
    /// (min, max), radians or meters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<(f64, f64)>,
}

pub fn pose_from_parts(pos: &[f64; 3], quat_wxyz: &[f64; 4]) -> Result<Pose, HarnessError> {
    let rotation = Rotation::from_quaternion_wxyz(*quat_wxyz)
        .map_err(|e| HarnessError::validation(format!("bad quaternion: {e}")))?;
    Ok(Pose::new(rotation, Vector3::new(pos[0], pos[1], pos[2])))
}

pub fn pose_to_parts(pose: &Pose) -> ([f64; 3], [f64; 4]) {
    (
        [
            pose.translation.x,
            pose.translation.y,
            pose.translation.z,
        ],
        pose.rotation.to_quaternion_wxyz(),
    )
}

impl HarnessConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::io(format!("{}: {e}", path.display())))?;
        let config: HarnessConfig = serde_json::from_str(&text)
            .map_err(|e| HarnessError::io(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.geometry()?.validate()?;
        self.rcm_config().validate()?;
        self.ik_weights()?.validate()?;
        self.ik_options()?.validate()?;
        if !(self.teleop.scale > 0.0 && self.teleop.scale <= 1.0) {
            return Err(HarnessError::validation("teleop.scale must lie in (0, 1]"));
        }
        if let Some(chain) = &self.chain {
            chain_model(chain)?.validate()?;
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<ToolGeometry, HarnessError> {
        let g = &self.geometry;
        let sign_convention = match g.sign_convention.as_str() {
            "world_z" => SignConvention::WorldZ,
            "handle_z" => SignConvention::HandleZ,
            other => {
                return Err(HarnessError::validation(format!(
                    "unknown sign_convention {other:?} (expected \"world_z\" or \"handle_z\")"
                )))
            }
        };
        let axis_convention = match g.axis_convention.as_str() {
            "yz" => AxisConvention::Yz,
            "zy" => AxisConvention::Zy,
            other => {
                return Err(HarnessError::validation(format!(
                    "unknown axis_convention {other:?} (expected \"yz\" or \"zy\")"
                )))
            }
        };
        Ok(ToolGeometry {
            l0: g.l0_m,
            l12: g.l12_m,
            l1: g.l1_m,
            k: g.k,
            theta_max: g.theta_max_deg.to_radians(),
            theta1_neutral: g.theta1_neutral_deg.to_radians(),
            sign_convention,
            axis_convention,
        })
    }

    pub fn rcm_config(&self) -> RcmConfig {
        RcmConfig {
            position: Vector3::new(self.rcm.x_rcm_m[0], self.rcm.x_rcm_m[1], self.rcm.x_rcm_m[2]),
            tolerance: self.rcm.tolerance_m,
        }
    }

    pub fn ik_weights(&self) -> Result<IkWeights, HarnessError> {
        Ok(IkWeights {
            w_t: self.ik.w_t,
            w_a: self.ik.w_a,
            theta_max: self.ik.theta_max_deg.to_radians(),
        })
    }

    pub fn ik_options(&self) -> Result<IkOptions, HarnessError> {
        Ok(IkOptions {
            max_iterations: self.ik.max_iterations,
            residual_tolerance: self.ik.residual_tol,
            step_tolerance: self.ik.step_tol,
            initial_trust_radius: self.ik.trust_radius,
            warm_start: None,
            t_offset: Vector3::new(
                self.ik.t_offset_m[0],
                self.ik.t_offset_m[1],
                self.ik.t_offset_m[2],
            ),
        })
    }

    /// Full teleop configuration. Both sides share the configured RCM point.
    pub fn teleop_config(&self) -> Result<TeleopConfig, HarnessError> {
        let rcm = self.rcm_config();
        Ok(TeleopConfig {
            scale: self.teleop.scale,
            registration: pose_from_parts(
                &self.teleop.registration_pos,
                &self.teleop.registration_quat,
            )?,
            rcm_left: rcm,
            rcm_right: rcm,
            geometry: self.geometry()?,
            weights: self.ik_weights()?,
            options: self.ik_options()?,
        })
    }

    pub fn chain_model(&self) -> Result<Option<ChainModel>, HarnessError> {
        self.chain.as_ref().map(chain_model).transpose()
    }
}

fn chain_model(section: &ChainSection) -> Result<ChainModel, HarnessError> {
    let joints = section
        .joints
        .iter()
        .map(|j| {
            let kind = match j.kind.as_str() {
                "revolute" => JointKind::Revolute,
                "prismatic" => JointKind::Prismatic,
                other => {
                    return Err(HarnessError::validation(format!(
                        "unknown joint kind {other:?} (expected \"revolute\" or \"prismatic\")"
                    )))
                }
            };
            Ok(JointSpec {
                kind,
                axis: Vector3::new(j.axis[0], j.axis[1], j.axis[2]),
                origin: pose_from_parts(&j.origin_pos, &j.origin_quat)?,
                limits: j.limits,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(ChainModel {
        joints,
        ee_offset: pose_from_parts(&section.ee_offset_pos, &section.ee_offset_quat)?,
    })
}

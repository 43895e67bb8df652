//! Console-to-robot teleoperation pipeline.
//!
//! Each side (left/right) runs an independent pipeline over a time-ordered
//! stream of console samples. Motion mapping is scaled-relative in position
//! and absolute in orientation: clutching freezes the target and re-anchors
//! on release, so console repositioning accumulates no offset, while the
//! orientation follows the registered console orientation composed with the
//! offset captured at the last release. Solves are warm-started from the
//! previous solution; a degenerate solve withholds the command and keeps
//! state intact.

use nalgebra::Vector3;

use crate::error::KinError;
use crate::ik::{solve_ik, IkOptions, IkResult, IkStatus, IkWeights};
use crate::se3::{Pose, Rotation};
use crate::tool::{jaw_map, shaft_rcm_distance, tool_tip_pose, JawCommand, RcmConfig, ToolGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Left => "L",
            Side::Right => "R",
        }
    }
}

/// One console input sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsoleSample {
    /// Monotonic time, seconds; strictly increasing per side.
    pub t: f64,
    /// Console handle pose in the console base frame.
    pub pose: Pose,
    /// Normalized grip in [0, 1].
    pub grip: f64,
    pub clutch: bool,
    pub side: Side,
}

/// Static configuration shared by both pipelines.
#[derive(Debug, Clone, PartialEq)]
pub struct TeleopConfig {
    /// Motion scaling factor in (0, 1].
    pub scale: f64,
    /// Console frame to task frame transform.
    pub registration: Pose,
    pub rcm_left: RcmConfig,
    pub rcm_right: RcmConfig,
    pub geometry: ToolGeometry,
    pub weights: IkWeights,
    /// Solver controls; the warm start field is managed by the pipeline.
    pub options: IkOptions,
}

impl TeleopConfig {
    pub fn validate(&self) -> Result<(), KinError> {
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(KinError::InvalidInput("scale must lie in (0, 1]"));
        }
        self.rcm_left.validate()?;
        self.rcm_right.validate()?;
        self.geometry.validate()?;
        self.weights.validate()?;
        self.options.validate()
    }

    pub fn rcm_for(&self, side: Side) -> &RcmConfig {
        match side {
            Side::Left => &self.rcm_left,
            Side::Right => &self.rcm_right,
        }
    }
}

/// One robot-side output command.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotCommand {
    pub t: f64,
    pub side: Side,
    /// Solved robot end-effector target.
    pub ee_pose: Pose,
    pub jaw: JawCommand,
    pub ik_status: IkStatus,
    /// Shaft-to-RCM distance at the solution, meters.
    pub rcm_distance: f64,
}

/// Per-side streaming state machine.
#[derive(Debug, Clone)]
pub struct TeleopPipeline {
    side: Side,
    last_t: Option<f64>,
    /// Task-frame console position captured at the last (re-)anchoring.
    anchor_console: Option<Vector3<f64>>,
    /// Target tip position captured at the last (re-)anchoring.
    anchor_tip: Option<Vector3<f64>>,
    /// Left-composed orientation offset captured at the last (re-)anchoring.
    orient_offset: Option<Rotation>,
    /// Current (or clutch-frozen) target tip pose.
    target: Option<Pose>,
    /// Warm start for the next solve.
    last_solution: Option<Pose>,
    needs_anchor: bool,
    /// Solves withheld because the inverse mapping degenerated.
    pub degraded_count: u64,
}

impl TeleopPipeline {
    pub fn new(side: Side) -> Self {
        TeleopPipeline {
            side,
            last_t: None,
            anchor_console: None,
            anchor_tip: None,
            orient_offset: None,
            target: None,
            last_solution: None,
            needs_anchor: true,
            degraded_count: 0,
        }
    }

    /// Current target tip pose (frozen during clutch).
    pub fn target(&self) -> Option<&Pose> {
        self.target.as_ref()
    }

    /// Processes one sample. Returns a command, or `None` while clutched or
    /// when the solve degenerated.
    pub fn step(
        &mut self,
        sample: &ConsoleSample,
        config: &TeleopConfig,
    ) -> Result<Option<RobotCommand>, KinError> {
        if sample.side != self.side {
            return Err(KinError::InvalidInput("sample routed to the wrong side"));
        }
        if let Some(last) = self.last_t {
            if sample.t <= last {
                return Err(KinError::OutOfOrderSample {
                    last,
                    got: sample.t,
                });
            }
        }
        self.last_t = Some(sample.t);

        if sample.clutch {
            // Frozen target, no command, re-anchor on release.
            self.needs_anchor = true;
            return Ok(None);
        }

        let registered = config.registration.compose(&sample.pose);
        if self.needs_anchor {
            // The very first sample adopts the registered console pose as
            // its target; later re-anchors keep the frozen target.
            let target = self.target.unwrap_or(registered);
            self.anchor_console = Some(registered.translation);
            self.anchor_tip = Some(target.translation);
            self.orient_offset =
                Some(target.rotation.compose(&registered.rotation.inverse()));
            self.target = Some(target);
            self.needs_anchor = false;
        }

        let anchor_console = self.anchor_console.expect("anchored above");
        let anchor_tip = self.anchor_tip.expect("anchored above");
        let offset = self.orient_offset.expect("anchored above");
        let target = Pose::new(
            offset.compose(&registered.rotation),
            anchor_tip + config.scale * (registered.translation - anchor_console),
        );
        self.target = Some(target);

        let rcm = config.rcm_for(self.side);
        let options = IkOptions {
            warm_start: self.last_solution,
            ..config.options.clone()
        };
        let result: IkResult = solve_ik(&target, &rcm.position, &config.geometry, &config.weights, &options);
        if result.status == IkStatus::Degenerate {
            self.degraded_count += 1;
            return Ok(None);
        }
        self.last_solution = Some(result.handle1_pose);

        let rcm_distance = match tool_tip_pose(&result.handle1_pose, &rcm.position, &config.geometry)
        {
            Ok((_, state)) => shaft_rcm_distance(&state, &rcm.position),
            Err(_) => f64::INFINITY,
        };

        Ok(Some(RobotCommand {
            t: sample.t,
            side: self.side,
            ee_pose: result.ee_pose,
            jaw: jaw_map(sample.grip),
            ik_status: result.status,
            rcm_distance,
        }))
    }
}

/// Rigid transform mapping the console frame to the task frame, defined by a
/// matched probe pair: `registered(console_probe) = task_probe`.
pub fn register_workspace(console_probe: &Pose, task_probe: &Pose) -> Pose {
    task_probe.compose(&console_probe.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se3::rot_exp;
    use approx::assert_relative_eq;
    use nalgebra::Matrix3;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn default_config(rcm: Vector3<f64>) -> TeleopConfig {
        TeleopConfig {
            scale: 1.0,
            registration: Pose::identity(),
            rcm_left: RcmConfig {
                position: rcm,
                tolerance: 1e-4,
            },
            rcm_right: RcmConfig {
                position: rcm,
                tolerance: 1e-4,
            },
            geometry: ToolGeometry::default(),
            weights: IkWeights::default(),
            options: IkOptions::default(),
        }
    }

    /// A reachable tip pose built from a consistent handle state (same
    /// construction as the solver tests).
    fn reachable_tip(rng: &mut StdRng, config: &TeleopConfig, rcm: Vector3<f64>) -> Pose {
        let g = &config.geometry;
        loop {
            let deflection = rng.gen_range(-0.4..0.4);
            let raw = g.theta1_neutral + deflection;
            let d = (g.l12 * g.l12 + g.l0 * g.l0 - 2.0 * g.l12 * g.l0 * raw.cos()).sqrt();
            let u = {
                let v = Vector3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                if v.norm() < 0.1 {
                    continue;
                }
                v.normalize()
            };
            let n1 = {
                let c = Vector3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                let perp = c - u * u.dot(&c);
                if perp.norm() < 0.1 {
                    continue;
                }
                perp.normalize()
            };
            let b = rng.gen_range(0.3 * d..0.8 * d);
            let a = (d * d - b * b).sqrt();
            let x_h1 = rcm - a * n1 + b * u;
            let x_hat = -u;
            let y_hat = n1.cross(&x_hat);
            let pose = Pose::new(
                Rotation::from_matrix(Matrix3::from_columns(&[x_hat, y_hat, n1])).unwrap(),
                x_h1,
            );
            if let Ok((tip, state)) = tool_tip_pose(&pose, &rcm, g) {
                if state.theta1.abs() < 0.5 && state.theta2 < 0.5 {
                    return tip;
                }
            }
        }
    }

    fn sample(t: f64, pose: Pose, clutch: bool) -> ConsoleSample {
        ConsoleSample {
            t,
            pose,
            grip: 1.0,
            clutch,
            side: Side::Left,
        }
    }

    /// Tip position commanded by a robot command: undo the wrist offset and
    /// run the forward pass.
    fn command_tip(cmd: &RobotCommand, config: &TeleopConfig) -> Vector3<f64> {
        let handle = cmd
            .ee_pose
            .compose(&Pose::from_translation(-config.options.t_offset));
        tool_tip_pose(&handle, &config.rcm_for(cmd.side).position, &config.geometry)
            .unwrap()
            .1
            .tip
    }

    #[test]
    fn no_commands_while_clutched_and_seamless_release() {
        let mut rng = StdRng::seed_from_u64(211);
        let rcm = Vector3::new(0.0, 0.0, 0.3);
        let config = default_config(rcm);
        let tip = reachable_tip(&mut rng, &config, rcm);
        let mut pipeline = TeleopPipeline::new(Side::Left);

        let first = pipeline
            .step(&sample(0.0, tip, false), &config)
            .unwrap()
            .expect("command");
        let pre_clutch_tip = command_tip(&first, &config);

        // Clutched motion: big console excursions, no commands.
        for i in 1..=10 {
            let wander = Pose::new(
                tip.rotation,
                tip.translation + Vector3::new(0.1 * i as f64, 0.05, -0.2),
            );
            let out = pipeline
                .step(&sample(i as f64 * 0.01, wander, true), &config)
                .unwrap();
            assert!(out.is_none());
        }

        // Released at a displaced console pose: target must not jump.
        let displaced = Pose::new(tip.rotation, tip.translation + Vector3::new(1.0, 0.0, 0.0));
        let after = pipeline
            .step(&sample(0.2, displaced, false), &config)
            .unwrap()
            .expect("command");
        let post_release_tip = command_tip(&after, &config);
        assert!(
            (post_release_tip - pre_clutch_tip).norm() < 1e-9,
            "release jumped by {}",
            (post_release_tip - pre_clutch_tip).norm()
        );
    }

    #[test]
    fn motion_scaling_halves_displacement() {
        let mut rng = StdRng::seed_from_u64(223);
        let rcm = Vector3::new(0.0, 0.0, 0.3);
        let mut config = default_config(rcm);
        config.scale = 0.5;
        let tip = reachable_tip(&mut rng, &config, rcm);
        let mut pipeline = TeleopPipeline::new(Side::Left);

        let first = pipeline
            .step(&sample(0.0, tip, false), &config)
            .unwrap()
            .expect("command");
        let start = command_tip(&first, &config);

        // Console moves 10 mm along x.
        let moved = Pose::new(tip.rotation, tip.translation + Vector3::new(0.010, 0.0, 0.0));
        let second = pipeline
            .step(&sample(0.1, moved, false), &config)
            .unwrap()
            .expect("command");
        let end = command_tip(&second, &config);

        let displacement = end - start;
        assert_relative_eq!(displacement.x, 0.005, epsilon = 1e-5);
        assert!(displacement.y.abs() < 1e-5 && displacement.z.abs() < 1e-5);
    }

    #[test]
    fn clutch_press_release_without_motion_is_idempotent() {
        let mut rng = StdRng::seed_from_u64(227);
        let rcm = Vector3::new(0.0, 0.0, 0.3);
        let config = default_config(rcm);
        let tip = reachable_tip(&mut rng, &config, rcm);
        let mut pipeline = TeleopPipeline::new(Side::Left);

        pipeline.step(&sample(0.0, tip, false), &config).unwrap();
        let before = *pipeline.target().unwrap();
        pipeline.step(&sample(0.1, tip, true), &config).unwrap();
        pipeline.step(&sample(0.2, tip, false), &config).unwrap();
        let after = *pipeline.target().unwrap();

        assert!((before.translation - after.translation).norm() < 1e-12);
        assert!((before.rotation.matrix() - after.rotation.matrix()).norm() < 1e-12);
    }

    #[test]
    fn replay_is_deterministic() {
        let mut rng = StdRng::seed_from_u64(229);
        let rcm = Vector3::new(0.0, 0.0, 0.3);
        let config = default_config(rcm);
        let tip = reachable_tip(&mut rng, &config, rcm);

        let samples: Vec<ConsoleSample> = (0..50)
            .map(|i| {
                let t = i as f64 * 0.02;
                let wiggle = Vector3::new(
                    0.004 * (t * 3.0).sin(),
                    0.004 * (t * 2.0).cos() - 0.004,
                    0.002 * (t * 5.0).sin(),
                );
                sample(t, Pose::new(tip.rotation, tip.translation + wiggle), i % 13 == 5)
            })
            .collect();

        let run = |samples: &[ConsoleSample]| {
            let mut pipeline = TeleopPipeline::new(Side::Left);
            samples
                .iter()
                .filter_map(|s| pipeline.step(s, &config).unwrap())
                .collect::<Vec<_>>()
        };
        let a = run(&samples);
        let b = run(&samples);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.ee_pose.translation, y.ee_pose.translation);
            assert_eq!(x.ee_pose.rotation.matrix(), y.ee_pose.rotation.matrix());
            assert_eq!(x.jaw.opening_deg, y.jaw.opening_deg);
        }
    }

    #[test]
    fn out_of_order_samples_are_rejected() {
        let mut rng = StdRng::seed_from_u64(233);
        let rcm = Vector3::new(0.0, 0.0, 0.3);
        let config = default_config(rcm);
        let tip = reachable_tip(&mut rng, &config, rcm);
        let mut pipeline = TeleopPipeline::new(Side::Left);
        pipeline.step(&sample(1.0, tip, false), &config).unwrap();
        assert!(matches!(
            pipeline.step(&sample(1.0, tip, false), &config),
            Err(KinError::OutOfOrderSample { .. })
        ));

        let wrong_side = ConsoleSample {
            side: Side::Right,
            ..sample(2.0, tip, false)
        };
        assert!(pipeline.step(&wrong_side, &config).is_err());
    }

    #[test]
    fn synthetic_arc_respects_rcm_and_continuity() {
        let mut rng = StdRng::seed_from_u64(239);
        let rcm = Vector3::new(0.0, 0.0, 0.3);
        let config = default_config(rcm);
        let tip = reachable_tip(&mut rng, &config, rcm);
        let mut pipeline = TeleopPipeline::new(Side::Left);

        // 200-sample lateral arc, a few millimeters wide.
        let mut previous_console = tip.translation;
        let mut previous_ee: Option<Vector3<f64>> = None;
        for i in 0..200 {
            let phase = i as f64 / 199.0 * std::f64::consts::PI;
            let console_pos =
                tip.translation + Vector3::new(0.004 * phase.sin(), 0.004 * (1.0 - phase.cos()), 0.0);
            let console = Pose::new(tip.rotation, console_pos);
            let cmd = pipeline
                .step(&sample(i as f64 * 0.02, console, false), &config)
                .unwrap()
                .expect("command");
            assert!(
                cmd.rcm_distance < config.rcm_left.tolerance,
                "rcm distance {} at sample {i}",
                cmd.rcm_distance
            );
            let step_len = (console_pos - previous_console).norm();
            if let Some(prev) = previous_ee {
                if step_len > 0.0 {
                    let ee_step = (cmd.ee_pose.translation - prev).norm();
                    assert!(
                        ee_step < 5.0 * config.scale * step_len,
                        "ee step {ee_step} vs console step {step_len}"
                    );
                }
            }
            previous_console = console_pos;
            previous_ee = Some(cmd.ee_pose.translation);
        }
        assert_eq!(pipeline.degraded_count, 0);
    }

    #[test]
    fn register_workspace_satisfies_defining_equation() {
        let id = Pose::identity();
        assert_eq!(register_workspace(&id, &id), id);

        let console = Pose::from_translation(Vector3::new(0.1, 0.0, 0.0));
        let task = Pose::from_translation(Vector3::new(0.3, -0.2, 0.5));
        let reg = register_workspace(&console, &task);
        assert_eq!(reg.rotation, Rotation::identity());
        assert_relative_eq!(
            reg.translation,
            Vector3::new(0.2, -0.2, 0.5),
            epsilon = 1e-15
        );

        let mut rng = StdRng::seed_from_u64(241);
        for _ in 0..100 {
            let mk = |rng: &mut StdRng| {
                Pose::new(
                    rot_exp(Vector3::new(
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                    ))
                    .unwrap(),
                    Vector3::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ),
                )
            };
            let console = mk(&mut rng);
            let task = mk(&mut rng);
            let reg = register_workspace(&console, &task);
            let mapped = reg.compose(&console);
            assert!((mapped.translation - task.translation).norm() < 1e-12);
            assert!((mapped.rotation.matrix() - task.rotation.matrix()).norm() < 1e-12);
        }
    }
}

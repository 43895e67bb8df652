//! Drives the teleoperation pipelines over a recorded sample stream and
//! summarizes tracking quality.

use wristkin::teleop::{Side, TeleopConfig, TeleopPipeline};
use wristkin::tool::tool_tip_pose;

use crate::error::HarnessError;
use crate::records::{CommandRecord, MetricsRecord, TrajectoryRecord};

/// Replays the samples in order through one pipeline per side.
///
/// Tip error is measured per emitted command between the forward pass of the
/// solved handle pose and the pipeline's current target. `ik_failures`
/// counts solves that degenerated (their commands are withheld).
pub fn replay(
    records: &[TrajectoryRecord],
    config: &TeleopConfig,
) -> Result<(Vec<CommandRecord>, MetricsRecord), HarnessError> {
    config.validate()?;
    let mut left = TeleopPipeline::new(Side::Left);
    let mut right = TeleopPipeline::new(Side::Right);

    let mut commands = Vec::new();
    let mut tip_errors = Vec::new();
    let mut max_rcm = 0.0f64;
    let mut samples = 0u64;

    for record in records {
        let sample = record.to_sample()?;
        samples += 1;
        let pipeline = match sample.side {
            Side::Left => &mut left,
            Side::Right => &mut right,
        };
        let Some(command) = pipeline.step(&sample, config)? else {
            continue;
        };

        max_rcm = max_rcm.max(command.rcm_distance);
        let target = pipeline.target().expect("command implies a target");
        let handle = command.ee_pose.compose(
            &wristkin::se3::Pose::from_translation(-config.options.t_offset),
        );
        let rcm = config.rcm_for(sample.side);
        if let Ok((_, state)) = tool_tip_pose(&handle, &rcm.position, &config.geometry) {
            tip_errors.push((state.tip - target.translation).norm());
        }
        commands.push(CommandRecord::from_command(&command));
    }

    let ik_failures = left.degraded_count + right.degraded_count;
    let metrics = MetricsRecord {
        max_rcm_dist_m: max_rcm,
        mean_tip_err_m: if tip_errors.is_empty() {
            0.0
        } else {
            tip_errors.iter().sum::<f64>() / tip_errors.len() as f64
        },
        p95_tip_err_m: percentile95(&mut tip_errors),
        ik_failures,
        samples,
    };
    Ok((commands, metrics))
}

fn percentile95(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let rank = ((0.95 * values.len() as f64).ceil() as usize).clamp(1, values.len());
    values[rank - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::HarnessConfig;
    use crate::pegboard::{gen_peg_transfer, interleave, PegBoard, PegTransferOptions};
    use nalgebra::Vector3;

    /// Geometry with a longer shaft so the default 40 mm board plus lift fits
    /// inside the tip workspace shell, with the RCM above the board center.
    fn pegboard_config() -> HarnessConfig {
        serde_json::from_str(
            r#"{
                "geometry": {"l0_m": 0.30, "l12_m": 0.05, "l1_m": 0.48, "k": 2.0,
                             "theta_max_deg": 45.0, "theta1_neutral_deg": 90.0,
                             "sign_convention": "world_z", "axis_convention": "yz"},
                "rcm": {"x_rcm_m": [0.0, 0.0, 0.22], "tolerance_m": 1e-4}
            }"#,
        )
        .unwrap()
    }

    /// Tip orientation of a straight tool hanging from the configured RCM
    /// toward the board center: a natural default for downward tasks.
    fn downward_tip_quat(config: &HarnessConfig) -> [f64; 4] {
        let geom = config.geometry().unwrap();
        let rcm = config.rcm_config().position;
        let target = wristkin::se3::Pose::new(
            wristkin::se3::Rotation::rot_y(std::f64::consts::PI),
            Vector3::new(0.0, 0.0, 0.03),
        );
        let seed = wristkin::ik::seed_handle_pose(&target, &rcm, &geom).unwrap();
        let (tip, _) = tool_tip_pose(&seed, &rcm, &geom).unwrap();
        tip.rotation.to_quaternion_wxyz()
    }

    #[test]
    fn peg_transfer_replay_tracks_and_preserves_rcm() {
        let config = pegboard_config();
        let teleop = config.teleop_config().unwrap();
        let options = PegTransferOptions {
            samples_per_segment: 8,
            tip_quat: downward_tip_quat(&config),
            clutch_exchange: true,
            ..PegTransferOptions::default()
        };
        let (left, right) = gen_peg_transfer(&PegBoard::default(), &options);
        let merged = interleave(left, right);
        let reference: Vec<_> = merged.iter().filter(|r| !r.clutch).cloned().collect();

        let (commands, metrics) = replay(&merged, &teleop).unwrap();

        // No command during the clutch window, one per unclutched sample.
        assert_eq!(commands.len() as u64 + metrics.ik_failures, reference.len() as u64);
        assert_eq!(metrics.ik_failures, 0);
        assert!(metrics.max_rcm_dist_m < 1e-4, "rcm {}", metrics.max_rcm_dist_m);

        // Every commanded tip within 2 mm of the generated reference.
        for (cmd, reference) in commands.iter().zip(&reference) {
            assert_eq!(cmd.t, reference.t);
            assert_eq!(cmd.side, reference.side);
            let handle = cmd.ee_pose().unwrap();
            let (_, state) =
                tool_tip_pose(&handle, &teleop.rcm_left.position, &teleop.geometry).unwrap();
            let err = (state.tip
                - Vector3::new(reference.pos[0], reference.pos[1], reference.pos[2]))
            .norm();
            assert!(err < 2e-3, "tip error {err} at t={}", cmd.t);
        }
    }

    #[test]
    fn percentile_definition_is_deterministic() {
        let mut values = vec![5.0, 1.0, 4.0, 2.0, 3.0];
        assert_eq!(percentile95(&mut values), 5.0);
        let mut empty: Vec<f64> = vec![];
        assert_eq!(percentile95(&mut empty), 0.0);
        let mut twenty: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        assert_eq!(percentile95(&mut twenty), 19.0);
    }
}

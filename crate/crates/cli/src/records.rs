//! Line-delimited JSON record types for trajectory, command, and event
//! streams, plus the metrics summary emitted by `replay`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use wristkin::se3::Pose;
use wristkin::teleop::{ConsoleSample, RobotCommand, Side};

use crate::config::{pose_from_parts, pose_to_parts};
use crate::error::HarnessError;

/// One console/trajectory sample:
/// `{"t": .., "side": "L"|"R", "pos": [..], "quat": [w,x,y,z], "grip": .., "clutch": ..}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub side: String,
    pub pos: [f64; 3],
    pub quat: [f64; 4],
    pub grip: f64,
    pub clutch: bool,
}

/// One robot command:
/// `{"t": .., "side": .., "ee_pos": [..], "ee_quat": [w,x,y,z], "jaw_deg": .., "ik_status": .., "rcm_dist_m": ..}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandRecord {
    pub t: f64,
    pub side: String,
    pub ee_pos: [f64; 3],
    pub ee_quat: [f64; 4],
    pub jaw_deg: f64,
    pub ik_status: String,
    pub rcm_dist_m: f64,
}

/// One scored trial event: `{"t": .., "kind": "failed_pickup"|..}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub t: f64,
    pub kind: String,
}

/// Summary written by `replay`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub max_rcm_dist_m: f64,
    pub mean_tip_err_m: f64,
    pub p95_tip_err_m: f64,
    pub ik_failures: u64,
    pub samples: u64,
}

pub fn side_from_str(s: &str) -> Result<Side, HarnessError> {
    match s {
        "L" => Ok(Side::Left),
        "R" => Ok(Side::Right),
        other => Err(HarnessError::validation(format!(
            "unknown side {other:?} (expected \"L\" or \"R\")"
        ))),
    }
}

impl TrajectoryRecord {
    pub fn from_sample(sample: &ConsoleSample) -> Self {
        let (pos, quat) = pose_to_parts(&sample.pose);
        TrajectoryRecord {
            t: sample.t,
            side: sample.side.as_str().to_string(),
            pos,
            quat,
            grip: sample.grip,
            clutch: sample.clutch,
        }
    }

    pub fn to_sample(&self) -> Result<ConsoleSample, HarnessError> {
        Ok(ConsoleSample {
            t: self.t,
            pose: pose_from_parts(&self.pos, &self.quat)?,
            grip: self.grip,
            clutch: self.clutch,
            side: side_from_str(&self.side)?,
        })
    }

    pub fn pose(&self) -> Result<Pose, HarnessError> {
        pose_from_parts(&self.pos, &self.quat)
    }
}

impl CommandRecord {
    pub fn from_command(cmd: &RobotCommand) -> Self {
        let (ee_pos, ee_quat) = pose_to_parts(&cmd.ee_pose);
        CommandRecord {
            t: cmd.t,
            side: cmd.side.as_str().to_string(),
            ee_pos,
            ee_quat,
            jaw_deg: cmd.jaw.opening_deg,
            ik_status: cmd.ik_status.as_str().to_string(),
            rcm_dist_m: cmd.rcm_distance,
        }
    }

    pub fn ee_pose(&self) -> Result<Pose, HarnessError> {
        pose_from_parts(&self.ee_pos, &self.ee_quat)
    }
}

/// Reads one record per line, reporting the 1-based line number on failure.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(
    reader: impl BufRead,
    source_name: &str,
) -> Result<Vec<T>, HarnessError> {
    let mut records = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(format!("{source_name}: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line).map_err(|e| {
            HarnessError::io(format!("{source_name}: line {}: {e}", index + 1))
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_jsonl<T: Serialize>(
    mut writer: impl Write,
    records: &[T],
) -> Result<(), HarnessError> {
    for record in records {
        let line = serde_json::to_string(record)
            .map_err(|e| HarnessError::io(format!("serialization failed: {e}")))?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

//! Synthetic bimanual peg-transfer trajectories.
//!
//! Four pegs in a square, two rings on the front pegs. Both arms move as
//! exact mirror images across the board's center plane: descend to the front
//! peg, grasp, carry to the hand-off point above the board center, exchange
//! rings during a stationary dwell, carry to the back peg, place, retreat.
//! Positions are cubic-eased between waypoints; output is in tool-tip space
//! for feeding through the inverse mapping.

use nalgebra::Vector3;
use wristkin::teleop::Side;

use crate::records::TrajectoryRecord;

/// Four pegs in a square of the given side length, in the `z = center.z`
/// plane. Ring A starts on the front-left peg, ring B on the front-right
/// (front = negative y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PegBoard {
    pub center: Vector3<f64>,
    /// Square side, meters.
    pub spacing: f64,
}

impl Default for PegBoard {
    fn default() -> Self {
        PegBoard {
            center: Vector3::zeros(),
            spacing: 0.040,
        }
    }
}

impl PegBoard {
    /// Peg positions: front-left, front-right, back-left, back-right.
    pub fn pegs(&self) -> [Vector3<f64>; 4] {
        let h = self.spacing / 2.0;
        [
            self.center + Vector3::new(-h, -h, 0.0),
            self.center + Vector3::new(h, -h, 0.0),
            self.center + Vector3::new(-h, h, 0.0),
            self.center + Vector3::new(h, h, 0.0),
        ]
    }

    /// Hand-off point above the board center, equidistant from all pegs.
    pub fn handoff(&self, lift_height: f64) -> Vector3<f64> {
        self.center + Vector3::new(0.0, 0.0, lift_height)
    }
}

/// Generation controls beyond the board itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PegTransferOptions {
    /// Height of travel waypoints above the board plane, meters.
    pub lift_height: f64,
    /// Samples per eased segment (>= 2; endpoints land on waypoints).
    pub samples_per_segment: usize,
    /// Time between consecutive samples, seconds.
    pub dt: f64,
    /// Constant tool-tip orientation for every sample, (w, x, y, z).
    pub tip_quat: [f64; 4],
    /// Mark the second exchange dwell as clutched (console stationary there,
    /// so release re-anchors without a target jump).
    pub clutch_exchange: bool,
}

impl Default for PegTransferOptions {
    fn default() -> Self {
        PegTransferOptions {
            lift_height: 0.030,
            samples_per_segment: 20,
            dt: 0.02,
            tip_quat: [1.0, 0.0, 0.0, 0.0],
            clutch_exchange: false,
        }
    }
}

const GRIP_OPEN: f64 = 1.0;
const GRIP_CLOSED: f64 = 0.0;

struct Segment {
    from: Vector3<f64>,
    to: Vector3<f64>,
    grip_from: f64,
    grip_to: f64,
    clutch: bool,
}

fn smoothstep(tau: f64) -> f64 {
    tau * tau * (3.0 - 2.0 * tau)
}

/// Left and right tool-tip sample streams for one full bimanual trial.
/// The right stream is the exact x-mirror of the left across the board
/// center plane; grip and clutch channels are identical.
pub fn gen_peg_transfer(
    board: &PegBoard,
    options: &PegTransferOptions,
) -> (Vec<TrajectoryRecord>, Vec<TrajectoryRecord>) {
    assert!(options.samples_per_segment >= 2);
    let pegs = board.pegs();
    let (front_left, back_left) = (pegs[0], pegs[2]);
    let lift = Vector3::new(0.0, 0.0, options.lift_height);
    let handoff = board.handoff(options.lift_height);

    let hover_front = front_left + lift;
    let hover_back = back_left + lift;
    let segments = [
        // Descend to the ring, grasp during a dwell, lift.
        Segment { from: hover_front, to: front_left, grip_from: GRIP_OPEN, grip_to: GRIP_OPEN, clutch: false },
        Segment { from: front_left, to: front_left, grip_from: GRIP_OPEN, grip_to: GRIP_CLOSED, clutch: false },
        Segment { from: front_left, to: hover_front, grip_from: GRIP_CLOSED, grip_to: GRIP_CLOSED, clutch: false },
        // Carry to the hand-off and exchange rings during two dwells.
        Segment { from: hover_front, to: handoff, grip_from: GRIP_CLOSED, grip_to: GRIP_CLOSED, clutch: false },
        Segment { from: handoff, to: handoff, grip_from: GRIP_CLOSED, grip_to: GRIP_OPEN, clutch: false },
        Segment { from: handoff, to: handoff, grip_from: GRIP_OPEN, grip_to: GRIP_CLOSED, clutch: options.clutch_exchange },
        // Carry to the back peg, place, retreat.
        Segment { from: handoff, to: hover_back, grip_from: GRIP_CLOSED, grip_to: GRIP_CLOSED, clutch: false },
        Segment { from: hover_back, to: back_left, grip_from: GRIP_CLOSED, grip_to: GRIP_CLOSED, clutch: false },
        Segment { from: back_left, to: back_left, grip_from: GRIP_CLOSED, grip_to: GRIP_OPEN, clutch: false },
        Segment { from: back_left, to: hover_back, grip_from: GRIP_OPEN, grip_to: GRIP_OPEN, clutch: false },
    ];

    let mirror_x = |p: Vector3<f64>| {
        Vector3::new(2.0 * board.center.x - p.x, p.y, p.z)
    };

    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut index = 0usize;
    let mut push = |pos: Vector3<f64>, grip: f64, clutch: bool, index: &mut usize| {
        let t = *index as f64 * options.dt;
        *index += 1;
        let record = |side: Side, pos: Vector3<f64>| TrajectoryRecord {
            t,
            side: side.as_str().to_string(),
            pos: [pos.x, pos.y, pos.z],
            quat: options.tip_quat,
            grip,
            clutch,
        };
        left.push(record(Side::Left, pos));
        right.push(record(Side::Right, mirror_x(pos)));
    };

    let n = options.samples_per_segment;
    for (seg_index, seg) in segments.iter().enumerate() {
        let first_j = if seg_index == 0 { 0 } else { 1 };
        for j in first_j..n {
            let tau = j as f64 / (n - 1) as f64;
            let s = smoothstep(tau);
            let pos = seg.from + (seg.to - seg.from) * s;
            let grip = seg.grip_from + (seg.grip_to - seg.grip_from) * s;
            push(pos, grip, seg.clutch, &mut index);
        }
    }
    (left, right)
}

/// Interleaves the two streams by time, left before right at equal stamps.
pub fn interleave(
    left: Vec<TrajectoryRecord>,
    right: Vec<TrajectoryRecord>,
) -> Vec<TrajectoryRecord> {
    let mut merged = Vec::with_capacity(left.len() + right.len());
    for (l, r) in left.into_iter().zip(right) {
        merged.push(l);
        merged.push(r);
    }
    merged
}

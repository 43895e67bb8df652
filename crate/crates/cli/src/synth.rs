//! Generative oracle: consistent passive-chain states with independently
//! assembled ground truth.
//!
//! A state is built outward from chosen bend parameters; every predicted
//! quantity (handle-2 and tip positions, angles, signs, tip orientation) is
//! computed here with nalgebra primitives, not with the library's forward
//! pass, so comparing the two exercises the whole chain end to end. Placing
//! the RCM at `x_h1 + a*n1 - b*u` (b > 0) guarantees the double-cross
//! construction recovers exactly the offset direction `u` used to build the
//! state.

use nalgebra::{Matrix3, UnitQuaternion, Unit, Vector3};
use rand::Rng;
use wristkin::se3::{Pose, Rotation};
use wristkin::tool::{AxisConvention, SignConvention, ToolGeometry};

/// A consistent state plus everything its forward pass must reproduce.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub handle: Pose,
    pub x_h2: Vector3<f64>,
    pub tip_pos: Vector3<f64>,
    /// (w, x, y, z)
    pub tip_quat: [f64; 4],
    pub theta1: f64,
    pub theta2: f64,
    pub theta1_signed: f64,
    pub theta2_signed: f64,
    pub theta3: f64,
    pub theta4: f64,
}

impl GroundTruth {
    pub fn tip_pose(&self) -> Pose {
        Pose::new(
            Rotation::from_quaternion_wxyz(self.tip_quat).expect("unit quaternion"),
            self.tip_pos,
        )
    }
}

fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 {
            return v / n;
        }
    }
}

fn unit_perpendicular(v: &Vector3<f64>, rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let candidate = random_unit(rng);
        let perp = candidate - v * v.dot(&candidate);
        if perp.norm() > 0.1 {
            return perp.normalize();
        }
    }
}

fn sign_pos(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Samples a consistent state with both working bend angles bounded by
/// `max_bend` (radians), around the given RCM point.
pub fn gen_consistent_state(
    rng: &mut impl Rng,
    x_rcm: &Vector3<f64>,
    geom: &ToolGeometry,
    max_bend: f64,
) -> GroundTruth {
    // Bend parameters.
    let deflection = rng.gen_range(-max_bend..max_bend);
    let twist = rng.gen_range(-max_bend..max_bend); // theta2 = |twist|

    // Law-of-cosines distance realizing the wanted first bend.
    let raw = geom.theta1_neutral + deflection;
    let d = (geom.l12 * geom.l12 + geom.l0 * geom.l0 - 2.0 * geom.l12 * geom.l0 * raw.cos())
        .sqrt();

    // Frame geometry: offset direction u, handle axis n1, and the RCM
    // decomposition x_rcm = x_h1 + a*n1 - b*u.
    let u = random_unit(rng);
    let n1 = unit_perpendicular(&u, rng);
    let b = rng.gen_range(0.25 * d..0.85 * d);
    let a = (d * d - b * b).sqrt() * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let x_h1 = x_rcm - a * n1 + b * u;

    // Handle x axis twisted away from -u about n1 by the second bend angle.
    let x_hat = (-u) * twist.cos() + n1.cross(&-u) * twist.sin();
    let y_hat = n1.cross(&x_hat);
    let r_h1 = Matrix3::from_columns(&[x_hat, y_hat, n1]);

    // Predicted positions.
    let x_h2 = x_h1 + geom.l12 * u;
    let to_rcm = x_rcm - x_h2; // = a*n1 - (b + l12)*u
    let tip_pos = x_h2 + (geom.l1 / geom.l0) * to_rcm;

    // Predicted signs.
    let rel = x_h1 - x_rcm;
    let s1 = match geom.sign_convention {
        SignConvention::WorldZ => sign_pos(rel.z),
        SignConvention::HandleZ => sign_pos(rel.dot(&n1)),
    };
    let v1 = x_h1 - x_h2;
    let n2 = x_rcm - x_h1;
    let s2 = sign_pos(v1.cross(&x_hat).dot(&n2));

    let theta1 = deflection;
    let theta2 = twist.abs();
    let theta1_signed = s1 * theta1;
    let theta2_signed = s2 * theta2;
    let theta3 = geom.k * theta1.abs();
    let theta4 = geom.k * theta2;

    // Predicted tip orientation, assembled with quaternions.
    let (axis_a, axis_b) = match geom.axis_convention {
        AxisConvention::Yz => (Vector3::y_axis(), Vector3::z_axis()),
        AxisConvention::Zy => (Vector3::z_axis(), Vector3::y_axis()),
    };
    let rot = |axis: Unit<Vector3<f64>>, angle: f64| UnitQuaternion::from_axis_angle(&axis, angle);
    let q_h1 = UnitQuaternion::from_matrix(&r_h1);
    let q_tt = q_h1
        * rot(axis_b, -theta2_signed)
        * rot(axis_a, -theta1_signed)
        * rot(axis_a, theta3 * sign_pos(theta1_signed))
        * rot(axis_b, theta4 * sign_pos(theta2_signed));
    let tip_quat = {
        let q = q_tt.quaternion();
        if q.w < 0.0 {
            [-q.w, -q.i, -q.j, -q.k]
        } else {
            [q.w, q.i, q.j, q.k]
        }
    };

    GroundTruth {
        handle: Pose::new(Rotation::from_matrix_unchecked(r_h1), x_h1),
        x_h2,
        tip_pos,
        tip_quat,
        theta1,
        theta2,
        theta1_signed,
        theta2_signed,
        theta3,
        theta4,
    }
}
